#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace binpick {

/// 8-bit single-channel image, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h, fill) {}

  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  std::size_t size() const { return pixels.size(); }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct PixelRect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Reads binary PGM (P5) or PPM (P6, converted to luma 0.299R+0.587G+0.114B).
/// Throws Errc::input_format on malformed files.
GrayImage read_pnm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

}  // namespace binpick
