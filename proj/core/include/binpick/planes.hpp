#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "binpick/geometry.hpp"

namespace binpick {

struct SegmentedPlane {
  std::vector<Point3> points;
  PlaneModel model;
  int source_cluster = 0;

  Point3 centroid() const;
};

struct PlaneGroup {
  std::vector<std::size_t> members;
  SegmentedPlane merged;
};

struct RansacResult {
  std::vector<std::size_t> inliers;  // ascending
  PlaneModel model;
};

struct PlaneExtractionParams {
  double dist_thresh = 0.004;
  std::size_t max_iter = 200;
  std::uint64_t seed = 0;
  std::size_t min_cluster_size = 30;
  std::size_t min_object_size = 30;
  std::size_t max_planes = 10;
};

struct MergeParams {
  double angle_tol_deg = 5.0;
  double centroid_thresh = 0.05;
  double perp_thresh = 0.005;
};

/// Total least-squares plane through the points, oriented toward the sensor.
/// Throws Errc::degenerate_configuration for fewer than 3 or collinear points.
PlaneModel fit_plane_pca(const std::vector<Point3>& points);

/// Consensus over max_iter random 3-point hypotheses drawn from `rng_seed`,
/// then a PCA refit on the inliers and a second inlier pass against it.
RansacResult ransac_plane(const std::vector<Point3>& cluster, double dist_thresh,
                          std::size_t max_iter, std::uint64_t rng_seed);

/// Peels planes off a cluster until it drops below min_cluster_size. The RNG
/// stream is derived from (params.seed, label).
std::vector<SegmentedPlane> extract_planes_iterative(const std::vector<Point3>& cluster,
                                                     const PlaneExtractionParams& params,
                                                     int label = 0);

bool check_overlapping(const SegmentedPlane& p1, const SegmentedPlane& p2, double centroid_thresh,
                       double perp_thresh);

/// One greedy grouping pass in input order.
std::vector<PlaneGroup> group_planes(const std::vector<SegmentedPlane>& planes,
                                     const MergeParams& params);

/// Repeats grouping until no two planes combine. Singletons pass through
/// unchanged; groups are refit over the union of their points.
std::vector<SegmentedPlane> group_and_merge_planes(const std::vector<SegmentedPlane>& planes,
                                                   const MergeParams& params = {});

}  // namespace binpick
