#include "binpick/cloud_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "binpick/error.hpp"

namespace binpick {
namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::input_format, "PLY: " + what); }

}  // namespace

OrganizedCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) bad("missing magic");

  std::size_t width = 0, height = 0, vertices = 0;
  bool organized = false, in_vertex = false;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") bad("only ascii format is supported");
    } else if (word == "comment") {
      std::string tag;
      if (ss >> tag && tag == "organized") {
        if (!(ss >> width >> height)) bad("malformed organized comment");
        organized = true;
      }
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      ss >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) vertices = count;
    } else if (word == "property") {
      std::string type, name;
      ss >> type >> name;
      if (type == "list") bad("list properties are not supported");
      if (in_vertex) props.push_back(name);
    } else if (word == "end_header") {
      break;
    }
  }
  if (!organized) bad("missing 'comment organized <w> <h>'");
  if (width * height != vertices) bad("organized size does not match vertex count");

  int ix = -1, iy = -1, iz = -1, iv = -1;
  for (std::size_t k = 0; k < props.size(); ++k) {
    const int ki = static_cast<int>(k);
    if (props[k] == "x") ix = ki;
    if (props[k] == "y") iy = ki;
    if (props[k] == "z") iz = ki;
    if (props[k] == "valid") iv = ki;
  }
  if (ix < 0 || iy < 0 || iz < 0 || iv < 0) bad("need x, y, z and valid properties");

  OrganizedCloud cloud(width, height);
  std::vector<double> values(props.size());
  for (std::size_t i = 0; i < vertices; ++i) {
    if (!std::getline(in, line)) bad("truncated vertex list");
    std::istringstream ss(line);
    for (auto& v : values) {
      if (!(ss >> v)) bad("malformed vertex line " + std::to_string(i));
    }
    cloud.points[i] = Point3(values[ix], values[iy], values[iz]);
    const bool valid = values[iv] != 0.0;
    if (valid && !cloud.points[i].allFinite()) bad("non-finite valid point");
    cloud.valid[i] = valid ? 1 : 0;
  }
  return cloud;
}

void write_ply(const std::filesystem::path& path, const OrganizedCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::input_format, "cannot write " + path.string());
  out << "ply\nformat ascii 1.0\n"
      << "comment organized " << cloud.width << ' ' << cloud.height << '\n'
      << "element vertex " << cloud.size() << '\n'
      << "property double x\nproperty double y\nproperty double z\n"
      << "property uchar valid\nend_header\n";
  out.precision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << int{cloud.valid[i]} << '\n';
  }
  if (!out) throw Error(Errc::input_format, "write failed for " + path.string());
}

}  // namespace binpick
