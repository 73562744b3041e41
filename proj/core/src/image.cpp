#include "binpick/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "binpick/error.hpp"

namespace binpick {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

std::size_t parse_header_number(std::istream& in, const std::filesystem::path& path) {
  const std::string token = next_token(in);
  try {
    std::size_t used = 0;
    const long long v = std::stoll(token, &used);
    if (used != token.size() || v <= 0) throw std::invalid_argument(token);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(Errc::input_format, "bad PNM header value '" + token + "' in " + path.string());
  }
}

}  // namespace

GrayImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::input_format, "cannot open " + path.string());

  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P6") {
    throw Error(Errc::input_format, "unsupported PNM magic '" + magic + "' in " + path.string());
  }
  const std::size_t width = parse_header_number(in, path);
  const std::size_t height = parse_header_number(in, path);
  const std::size_t maxval = parse_header_number(in, path);
  if (maxval > 255) {
    throw Error(Errc::input_format, "only 8-bit PNM is supported: " + path.string());
  }

  const std::size_t channels = magic == "P6" ? 3 : 1;
  std::vector<unsigned char> raw(width * height * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(Errc::input_format, "truncated pixel data in " + path.string());
  }

  GrayImage img(width, height);
  const double scale = 255.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < width * height; ++i) {
    double v;
    if (channels == 1) {
      v = raw[i];
    } else {
      v = 0.299 * raw[3 * i] + 0.587 * raw[3 * i + 1] + 0.114 * raw[3 * i + 2];
    }
    img.pixels[i] = static_cast<std::uint8_t>(std::min(255.0, std::round(v * scale)));
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::input_format, "cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

}  // namespace binpick
