#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

// Sensor frame: x right, y down, z forward (away from the sensor).
// Lengths are meters everywhere inside the library; reports convert to mm.

namespace binpick {

using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Written out by hand; test oracles rely on bit-identical results.
inline double distance(const Point3& a, const Point3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Depth-sensor output: a row-major grid of points with a validity bitmap.
struct OrganizedCloud {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Point3> points;
  std::vector<std::uint8_t> valid;

  OrganizedCloud() = default;
  OrganizedCloud(std::size_t w, std::size_t h)
      : width(w), height(h), points(w * h, Point3::Zero()), valid(w * h, 0) {}

  std::size_t size() const { return points.size(); }
  std::size_t index(std::size_t col, std::size_t row) const { return row * width + col; }
  bool is_valid(std::size_t i) const { return valid[i] != 0; }
  std::size_t valid_count() const;
  /// Valid points in row-major order.
  std::vector<Point3> valid_points() const;
};

inline constexpr std::size_t kDefaultDepthWidth = 224;
inline constexpr std::size_t kDefaultDepthHeight = 172;

/// Plane a*x + b*y + c*z + d = 0 with a unit normal oriented toward the
/// sensor origin (d >= 0).
struct PlaneModel {
  double a = 0.0;
  double b = 0.0;
  double c = 1.0;
  double d = 0.0;

  Vec3 normal() const { return {a, b, c}; }
};

/// Scales raw coefficients to a unit normal and flips signs so that d >= 0.
/// Throws Errc::degenerate_normal when |(a,b,c)| < 1e-12.
PlaneModel normalize_plane(double a, double b, double c, double d);
PlaneModel plane_from_point_normal(const Point3& point, const Vec3& normal);

inline double plane_signed_distance(const PlaneModel& plane, const Point3& p) {
  return plane.a * p.x() + plane.b * p.y() + plane.c * p.z() + plane.d;
}

/// Angle between two plane normals in degrees, ignoring orientation.
double normal_angle_deg(const PlaneModel& p1, const PlaneModel& p2);

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  /// Throws Errc::non_rotation unless R^T R = I and det R = +1 within tol.
  static RigidTransform from(const Mat3& rotation, const Vec3& translation, double tol = 1e-9);

  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& rhs) const;
};

inline Point3 apply_transform(const RigidTransform& t, const Point3& p) {
  return t.rotation * p + t.translation;
}

bool is_rotation(const Mat3& r, double tol);

/// Intrinsic Z-Y-X Euler angles in degrees: rotation about Z (theta1), then
/// Y (theta2), then X (theta3).
struct EulerZYX {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta3 = 0.0;
};

Mat3 rotation_from_euler_zyx(const EulerZYX& e);

/// Wraps an angle in degrees to (-180, 180].
double wrap_degrees(double deg);

inline double deg2rad(double deg) { return deg * 0.017453292519943295; }
inline double rad2deg(double rad) { return rad * 57.29577951308232; }

}  // namespace binpick
