#include "binpick/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "binpick/error.hpp"

namespace binpick {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::degenerate_normal: return "degenerate normal";
    case Errc::out_of_bounds: return "out of bounds";
    case Errc::image_too_small: return "image too small";
    case Errc::degenerate_configuration: return "degenerate configuration";
    case Errc::empty_cluster: return "empty cluster";
    case Errc::too_few_points: return "too few points";
    case Errc::insufficient_neighbors: return "insufficient neighbors";
    case Errc::degenerate_neighborhood: return "degenerate neighborhood";
    case Errc::invalid_radii: return "invalid radii";
    case Errc::non_unit_normal: return "non-unit normal";
    case Errc::non_rotation: return "not a rotation";
    case Errc::empty_input: return "empty input";
    case Errc::config_invalid: return "invalid config";
    case Errc::input_format: return "input format";
    case Errc::calibration_missing: return "calibration missing";
  }
  return "unknown";
}

std::size_t OrganizedCloud::valid_count() const {
  return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

std::vector<Point3> OrganizedCloud::valid_points() const {
  std::vector<Point3> out;
  out.reserve(valid_count());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (valid[i]) out.push_back(points[i]);
  }
  return out;
}

PlaneModel normalize_plane(double a, double b, double c, double d) {
  const double norm = std::sqrt(a * a + b * b + c * c);
  if (!(norm >= 1e-12)) {
    throw Error(Errc::degenerate_normal, "plane normal has near-zero length");
  }
  PlaneModel p{a / norm, b / norm, c / norm, d / norm};
  if (p.d < 0.0) {
    p = {-p.a, -p.b, -p.c, -p.d};
  }
  return p;
}

PlaneModel plane_from_point_normal(const Point3& point, const Vec3& normal) {
  return normalize_plane(normal.x(), normal.y(), normal.z(), -normal.dot(point));
}

double normal_angle_deg(const PlaneModel& p1, const PlaneModel& p2) {
  const double dot = std::clamp(std::abs(p1.normal().dot(p2.normal())), 0.0, 1.0);
  return rad2deg(std::acos(dot));
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const Mat3 gram = r.transpose() * r;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

RigidTransform RigidTransform::from(const Mat3& rotation, const Vec3& translation, double tol) {
  if (!is_rotation(rotation, tol)) {
    throw Error(Errc::non_rotation, "rotation matrix is not orthonormal with det +1");
  }
  return {rotation, translation};
}

RigidTransform RigidTransform::inverse() const {
  const Mat3 rt = rotation.transpose();
  return {rt, -(rt * translation)};
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  return {rotation * rhs.rotation, rotation * rhs.translation + translation};
}

Mat3 rotation_from_euler_zyx(const EulerZYX& e) {
  return (Eigen::AngleAxisd(deg2rad(e.theta1), Vec3::UnitZ()) *
          Eigen::AngleAxisd(deg2rad(e.theta2), Vec3::UnitY()) *
          Eigen::AngleAxisd(deg2rad(e.theta3), Vec3::UnitX()))
      .toRotationMatrix();
}

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

}  // namespace binpick
