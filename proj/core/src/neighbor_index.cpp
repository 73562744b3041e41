#include "binpick/neighbor_index.hpp"

#include <algorithm>

namespace binpick {
namespace {

constexpr std::size_t kLeafSize = 12;

inline bool closer(const Neighbor& a, const Neighbor& b) {
  if (a.squared_distance != b.squared_distance) return a.squared_distance < b.squared_distance;
  return a.index < b.index;
}

}  // namespace

NeighborIndex::NeighborIndex(std::vector<Point3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, points_.size());
  }
}

std::size_t NeighborIndex::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end, -1, 0.0, 0, 0});
  if (end - begin <= kLeafSize) return id;

  Point3 lo = points_[order_[begin]];
  Point3 hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<long>(begin), order_.begin() + static_cast<long>(mid),
                   order_.begin() + static_cast<long>(end), [&](std::size_t a, std::size_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];

  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Neighbor> NeighborIndex::knn(const Point3& query, std::size_t k) const {
  std::vector<Neighbor> heap;
  k = std::min(k, points_.size());
  if (k == 0) return heap;
  heap.reserve(k + 1);
  knn_recurse(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void NeighborIndex::knn_recurse(std::size_t node_id, const Point3& q, std::size_t k,
                                std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const Neighbor cand{order_[i], squared_distance(points_[order_[i]], q)};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::size_t near = diff < 0.0 ? node.left : node.right;
  const std::size_t far = diff < 0.0 ? node.right : node.left;
  knn_recurse(near, q, k, heap);
  // Equality keeps tied candidates (same distance, lower index) reachable.
  if (heap.size() < k || diff * diff <= heap.front().squared_distance) {
    knn_recurse(far, q, k, heap);
  }
}

std::vector<Neighbor> NeighborIndex::radius(const Point3& query, double radius) const {
  std::vector<Neighbor> out;
  if (points_.empty() || radius < 0.0) return out;
  radius_recurse(0, query, radius * radius, out);
  std::sort(out.begin(), out.end(), closer);
  return out;
}

void NeighborIndex::radius_recurse(std::size_t node_id, const Point3& q, double r2,
                                   std::vector<Neighbor>& out) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const double d2 = squared_distance(points_[order_[i]], q);
      if (d2 <= r2) out.push_back({order_[i], d2});
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  if (diff <= 0.0 || diff * diff <= r2) radius_recurse(node.left, q, r2, out);
  if (diff >= 0.0 || diff * diff <= r2) radius_recurse(node.right, q, r2, out);
}

}  // namespace binpick
