#pragma once

#include <cstddef>
#include <vector>

#include "binpick/geometry.hpp"

namespace binpick {

struct Neighbor {
  std::size_t index = 0;
  double squared_distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Static kd-tree over a point list. Results are ordered by
/// (squared distance, index), so ties resolve the same way as a brute-force
/// scan sorted on that key.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  explicit NeighborIndex(std::vector<Point3> points);

  std::size_t size() const { return points_.size(); }
  const std::vector<Point3>& points() const { return points_; }

  /// The min(k, size()) nearest points to `query`, nearest first.
  std::vector<Neighbor> knn(const Point3& query, std::size_t k) const;

  /// All points with distance <= radius, nearest first.
  std::vector<Neighbor> radius(const Point3& query, double radius) const;

 private:
  struct Node {
    std::size_t begin = 0;  // range into order_
    std::size_t end = 0;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  void knn_recurse(std::size_t node, const Point3& q, std::size_t k,
                   std::vector<Neighbor>& heap) const;
  void radius_recurse(std::size_t node, const Point3& q, double r2,
                      std::vector<Neighbor>& out) const;

  std::vector<Point3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace binpick
