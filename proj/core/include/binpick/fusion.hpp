#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "binpick/geometry.hpp"
#include "binpick/segmentation.hpp"

namespace binpick {

/// Maps RGB pixel coordinates (homogeneous) to depth-image pixel coordinates.
/// h(2,2) is normalised to 1.
class Homography {
 public:
  Homography() = default;
  /// Throws Errc::degenerate_configuration if h(2,2) ~ 0 or |det| <= 1e-12.
  explicit Homography(const Eigen::Matrix3d& h);

  static Homography identity() { return Homography(Eigen::Matrix3d::Identity()); }

  const Eigen::Matrix3d& matrix() const { return h_; }
  Eigen::Vector2d map(const Eigen::Vector2d& rgb_pixel) const;
  Homography inverse() const;

  std::array<double, 9> row_major() const;
  static Homography from_row_major(const std::array<double, 9>& values);

 private:
  Eigen::Matrix3d h_ = Eigen::Matrix3d::Identity();
};

struct PixelCorrespondence {
  Eigen::Vector2d rgb;
  Eigen::Vector2d depth;
};

/// Normalised direct linear transform over >= 4 correspondences.
/// Throws Errc::degenerate_configuration for too few, duplicate or collinear
/// points.
Homography estimate_homography(const std::vector<PixelCorrespondence>& pairs);

struct MaskedCluster {
  std::vector<Point3> points;
  MaskRole source_mask_role = MaskRole::parent;
};

/// Collects the valid cloud points under a full-frame RGB mask. Each set
/// pixel is mapped through h and rounded to the nearest depth cell; cells hit
/// more than once contribute one point. Output is in depth-grid order.
/// Throws Errc::empty_cluster when no valid point is hit.
MaskedCluster map_mask_to_cloud(const BinaryMask& mask, const Homography& h,
                                const OrganizedCloud& cloud);

/// Per-axis pinhole model of an organized cloud: u = fx * x / z + cx.
struct CloudIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Vec3 ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }
};

/// Least-squares fit over the valid points; nullopt when the cloud does not
/// pin down both axes.
std::optional<CloudIntrinsics> estimate_cloud_intrinsics(const OrganizedCloud& cloud);

struct FaceSamples {
  std::vector<Point3> points;
  std::vector<double> weights;  // surface area seen by each pixel, arbitrary units
};

/// Back-projects every mask pixel onto `plane` through the mapped depth ray.
/// Pixels are kept only where the mapped depth cell or one of its 8
/// neighbours holds a valid point on the plane or in front of it (toward the
/// sensor), within support_thresh.
FaceSamples project_mask_onto_plane(const BinaryMask& mask, const Homography& h,
                                    const OrganizedCloud& cloud, const CloudIntrinsics& k,
                                    const PlaneModel& plane, double support_thresh);

}  // namespace binpick
