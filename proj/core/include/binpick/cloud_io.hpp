#pragma once

#include <filesystem>

#include "binpick/geometry.hpp"

namespace binpick {

/// ASCII PLY with x/y/z plus a `valid` uchar, row-major, and the grid size in
/// a `comment organized <w> <h>` header line. Throws Errc::input_format.
OrganizedCloud read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const OrganizedCloud& cloud);

}  // namespace binpick
