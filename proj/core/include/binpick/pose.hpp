#pragma once

#include <cstddef>
#include <vector>

#include "binpick/geometry.hpp"
#include "binpick/planes.hpp"
#include "binpick/segmentation.hpp"

namespace binpick {

inline constexpr double kDefaultMeanShiftBandwidth = 0.025;

struct Pose6DoF {
  Point3 centroid_mm = Point3::Zero();
  EulerZYX euler;
  PlaneModel plane;
  std::size_t inlier_count = 0;
  MaskRole priority = MaskRole::parent;
};

/// Flat-kernel mean shift started at the arithmetic mean. Stops once a step
/// is shorter than 0.1 mm or after 100 iterations.
Point3 mean_shift_centroid(const std::vector<Point3>& points,
                           double bandwidth = kDefaultMeanShiftBandwidth);
/// Weighted variant; weights must be positive and match points in size.
Point3 mean_shift_centroid(const std::vector<Point3>& points, const std::vector<double>& weights,
                           double bandwidth = kDefaultMeanShiftBandwidth);

/// Columns are the frame axes in sensor coordinates: x is the sensor X axis
/// projected onto the plane (sensor Y when X is nearly normal), z the normal.
Mat3 build_frame(const Vec3& normal, const Point3& centroid = Point3::Zero());

/// Intrinsic Z-Y-X angles in degrees. At gimbal lock theta3 is pinned to 0.
EulerZYX euler_zyx_from_rotation(const Mat3& r);

Pose6DoF estimate_pose(const SegmentedPlane& plane, MaskRole priority,
                       double bandwidth = kDefaultMeanShiftBandwidth);

}  // namespace binpick
