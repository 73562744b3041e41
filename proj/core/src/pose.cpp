#include "binpick/pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Geometry>

#include "binpick/error.hpp"

namespace binpick {
namespace {

constexpr double kShiftTolerance = 1e-4;
constexpr int kMaxShiftIterations = 100;

}  // namespace

Point3 mean_shift_centroid(const std::vector<Point3>& points, const std::vector<double>& weights,
                           double bandwidth) {
  if (points.empty()) throw Error(Errc::empty_input, "mean shift on an empty point set");
  if (!(bandwidth > 0.0)) throw Error(Errc::invalid_argument, "bandwidth must be positive");
  if (weights.size() != points.size()) {
    throw Error(Errc::invalid_argument, "one weight per point is required");
  }

  auto window_mean = [&](const Point3& centre, double radius2, Point3& out) {
    Point3 sum = Point3::Zero();
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (squared_distance(points[i], centre) <= radius2) {
        sum += weights[i] * points[i];
        total += weights[i];
      }
    }
    if (total > 0.0) out = sum / total;
    return total > 0.0;
  };

  Point3 mode = Point3::Zero();
  window_mean(mode, std::numeric_limits<double>::infinity(), mode);
  const double bw2 = bandwidth * bandwidth;
  for (int it = 0; it < kMaxShiftIterations; ++it) {
    Point3 next = mode;
    if (!window_mean(mode, bw2, next)) {
      // The mean fell in an empty gap; restart from the closest sample.
      const Point3 from = mode;
      mode = points.front();
      for (const auto& p : points) {
        if (squared_distance(p, from) < squared_distance(mode, from)) mode = p;
      }
      continue;
    }
    const double step = distance(next, mode);
    mode = next;
    if (step < kShiftTolerance) break;
  }
  return mode;
}

Point3 mean_shift_centroid(const std::vector<Point3>& points, double bandwidth) {
  return mean_shift_centroid(points, std::vector<double>(points.size(), 1.0), bandwidth);
}

Mat3 build_frame(const Vec3& normal, const Point3& /*centroid*/) {
  if (std::abs(normal.norm() - 1.0) > 1e-9) {
    throw Error(Errc::non_unit_normal, "frame normal must be unit length");
  }
  auto project = [&](const Vec3& axis) { return Vec3(axis - axis.dot(normal) * normal); };
  Vec3 x = project(Vec3::UnitX());
  if (x.norm() < 1e-6) x = project(Vec3::UnitY());
  x.normalize();
  Mat3 r;
  r.col(0) = x;
  r.col(1) = normal.cross(x);
  r.col(2) = normal;
  return r;
}

EulerZYX euler_zyx_from_rotation(const Mat3& r) {
  if (!is_rotation(r, 1e-6)) throw Error(Errc::non_rotation, "matrix is not a rotation");

  auto canonical = [](double deg) { return deg <= -180.0 ? deg + 360.0 : deg; };
  EulerZYX e;
  const double s2 = std::clamp(-r(2, 0), -1.0, 1.0);
  if (std::abs(r(2, 0)) > 1.0 - 1e-9) {
    e.theta2 = s2 > 0.0 ? 90.0 : -90.0;
    e.theta3 = 0.0;
    e.theta1 = canonical(rad2deg(std::atan2(-r(0, 1), r(1, 1))));
    return e;
  }
  e.theta2 = rad2deg(std::atan2(-r(2, 0), std::hypot(r(2, 1), r(2, 2))));
  e.theta1 = canonical(rad2deg(std::atan2(r(1, 0), r(0, 0))));
  e.theta3 = canonical(rad2deg(std::atan2(r(2, 1), r(2, 2))));
  return e;
}

Pose6DoF estimate_pose(const SegmentedPlane& plane, MaskRole priority, double bandwidth) {
  if (plane.points.empty()) throw Error(Errc::empty_input, "plane has no inliers");
  const Point3 c = mean_shift_centroid(plane.points, bandwidth);
  Pose6DoF pose;
  pose.centroid_mm = c * 1000.0;
  pose.euler = euler_zyx_from_rotation(build_frame(plane.model.normal(), c));
  pose.plane = plane.model;
  pose.inlier_count = plane.points.size();
  pose.priority = priority;
  return pose;
}

}  // namespace binpick
