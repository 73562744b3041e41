#pragma once

#include <stdexcept>
#include <string>

namespace binpick {

enum class Errc {
  invalid_argument,
  degenerate_normal,
  out_of_bounds,
  image_too_small,
  degenerate_configuration,
  empty_cluster,
  too_few_points,
  insufficient_neighbors,
  degenerate_neighborhood,
  invalid_radii,
  non_unit_normal,
  non_rotation,
  empty_input,
  config_invalid,
  input_format,
  calibration_missing,
};

const char* to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace binpick
