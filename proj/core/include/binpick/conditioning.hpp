#pragma once

#include <optional>
#include <vector>

#include "binpick/geometry.hpp"
#include "binpick/neighbor_index.hpp"

namespace binpick {

/// Replaces the points of each occupied origin-anchored cube of side `leaf`
/// by their centroid. Output is sorted by voxel key (z, then y, then x).
std::vector<Point3> voxel_grid_downsample(const std::vector<Point3>& points, double leaf);

struct SorResult {
  std::vector<Point3> points;
  std::vector<double> mean_distances;  // per input point
  double threshold = 0.0;
};

/// Keeps points whose mean distance to their k nearest neighbours is
/// <= mu + alpha * sigma over all points. Throws Errc::too_few_points when
/// points.size() <= k.
std::vector<Point3> statistical_outlier_removal(const std::vector<Point3>& points,
                                                std::size_t k = 8, double alpha = 1.0);
SorResult statistical_outlier_removal_detailed(const std::vector<Point3>& points, std::size_t k,
                                               double alpha);

/// Moving least squares projection onto a local polynomial (order 1 or 2)
/// fitted with Gaussian weights of bandwidth radius / 2.
std::vector<Point3> mls_resample(const std::vector<Point3>& points, double radius, int order = 2);

/// PCA normal over the neighbours of p within radius, flipped toward
/// `viewpoint`. Throws Errc::insufficient_neighbors (< 3 neighbours) or
/// Errc::degenerate_neighborhood (collinear neighbours).
Vec3 estimate_normal(const NeighborIndex& index, const Point3& p, double radius,
                     const Point3& viewpoint = Point3::Zero());

/// Same as estimate_normal but returns nullopt instead of throwing.
std::optional<Vec3> try_estimate_normal(const NeighborIndex& index, const Point3& p,
                                        double radius, const Point3& viewpoint = Point3::Zero());

/// Half difference of two unit normals.
inline Vec3 don_vector(const Vec3& n_small, const Vec3& n_large) {
  return 0.5 * (n_small - n_large);
}

struct NormalField {
  std::vector<std::optional<Vec3>> n_small;
  std::vector<std::optional<Vec3>> n_large;
  std::vector<std::optional<Vec3>> don;
};

NormalField compute_normal_field(const std::vector<Point3>& points, double r_small,
                                 double r_large, const Point3& viewpoint = Point3::Zero());

/// Keeps points whose difference-of-normals norm is below `threshold`;
/// points without a normal at either radius are dropped. Throws
/// Errc::invalid_radii unless 0 < r_small < r_large.
std::vector<Point3> don_filter(const std::vector<Point3>& points, double r_small, double r_large,
                               double threshold = 0.25, const Point3& viewpoint = Point3::Zero());

}  // namespace binpick
