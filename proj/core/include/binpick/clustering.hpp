#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "binpick/geometry.hpp"

namespace binpick {

inline constexpr std::size_t kDefaultMinClusterSize = 30;
inline constexpr int kNoise = -1;

/// Per-point cluster labels; -1 is noise, clusters are numbered 0..n-1.
struct ClusterLabels {
  std::vector<int> labels;
  int cluster_count = 0;

  std::size_t noise_count() const;
  std::vector<std::vector<std::size_t>> members() const;
};

struct MstEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

/// Condensed cluster hierarchy. Cluster 0 is the root; lambda = 1 / distance.
struct CondensedTree {
  struct Row {
    std::size_t parent = 0;  // cluster id
    std::size_t child = 0;   // cluster id if child_is_cluster, else point index
    bool child_is_cluster = false;
    double lambda = 0.0;
    std::size_t child_size = 1;
  };
  struct Cluster {
    std::optional<std::size_t> parent;
    double lambda_birth = 0.0;
    double lambda_death = 0.0;
    std::size_t size = 0;
    double stability = 0.0;
    bool selected = false;
  };

  std::vector<Row> rows;
  std::vector<Cluster> clusters;
};

struct HdbscanResult {
  ClusterLabels labels;
  std::vector<double> core;
  std::vector<MstEdge> mst;
  CondensedTree tree;
};

/// Distance from each point to its k-th nearest neighbour (itself excluded).
/// Throws Errc::too_few_points when points.size() <= k.
std::vector<double> core_distances(const std::vector<Point3>& points, std::size_t k);

inline double mutual_reachability(const std::vector<Point3>& points,
                                  const std::vector<double>& core, std::size_t a, std::size_t b) {
  return std::max({core[a], core[b], distance(points[a], points[b])});
}

/// Prim's algorithm on the complete mutual-reachability graph; ties go to the
/// lowest point index.
std::vector<MstEdge> mutual_reachability_mst(const std::vector<Point3>& points,
                                             const std::vector<double>& core);

/// HDBSCAN with excess-of-mass selection (the root may be selected). Fewer
/// than min_cluster_size points yields all-noise labels. min_samples = 0
/// means "same as min_cluster_size".
HdbscanResult hdbscan_detailed(const std::vector<Point3>& points,
                               std::size_t min_cluster_size = kDefaultMinClusterSize,
                               std::size_t min_samples = 0);

ClusterLabels hdbscan(const std::vector<Point3>& points,
                      std::size_t min_cluster_size = kDefaultMinClusterSize,
                      std::size_t min_samples = 0);

}  // namespace binpick
