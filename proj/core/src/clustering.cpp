#include "binpick/clustering.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>

#include "binpick/error.hpp"
#include "binpick/neighbor_index.hpp"

namespace binpick {
namespace {

// Single-linkage dendrogram in scipy layout: merge i creates node n + i.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

std::vector<Merge> single_linkage(std::size_t n, std::vector<MstEdge> edges) {
  std::stable_sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    const auto kx = std::minmax(x.a, x.b);
    const auto ky = std::minmax(y.a, y.b);
    return kx < ky;
  });

  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::size_t> size(2 * n - 1, 1);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  std::vector<Merge> merges;
  merges.reserve(n - 1);
  for (const auto& e : edges) {
    const std::size_t ra = find(e.a);
    const std::size_t rb = find(e.b);
    const std::size_t node = n + merges.size();
    merges.push_back({std::min(ra, rb), std::max(ra, rb), e.weight, size[ra] + size[rb]});
    parent[ra] = node;
    parent[rb] = node;
    size[node] = size[ra] + size[rb];
  }
  return merges;
}

CondensedTree condense(std::size_t n, const std::vector<Merge>& merges, std::size_t min_size) {
  CondensedTree tree;
  tree.clusters.push_back({std::nullopt, 0.0, 0.0, n, 0.0, false});
  if (n < 2) return tree;

  auto node_size = [&](std::size_t node) { return node < n ? std::size_t{1} : merges[node - n].size; };
  auto lambda_of = [](double d) { return 1.0 / std::max(d, 1e-12); };
  // Root birth at its widest merge rather than lambda 0.
  tree.clusters[0].lambda_birth = lambda_of(merges.back().distance);

  // Emit every leaf under `node` as falling out of `cluster` at `lambda`.
  std::vector<std::size_t> stack;
  auto drop_points = [&](std::size_t node, std::size_t cluster, double lambda) {
    stack.assign(1, node);
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        tree.rows.push_back({cluster, x, false, lambda, 1});
      } else {
        stack.push_back(merges[x - n].right);
        stack.push_back(merges[x - n].left);
      }
    }
  };

  // Breadth-first walk from the root carrying the owning cluster id.
  std::deque<std::pair<std::size_t, std::size_t>> queue{{2 * n - 2, 0}};
  while (!queue.empty()) {
    const auto [node, cluster] = queue.front();
    queue.pop_front();
    if (node < n) {
      continue;
    }
    const Merge& m = merges[node - n];
    const double lambda = lambda_of(m.distance);
    const std::size_t ls = node_size(m.left);
    const std::size_t rs = node_size(m.right);

    if (ls >= min_size && rs >= min_size) {
      for (std::size_t child : {m.left, m.right}) {
        const std::size_t id = tree.clusters.size();
        tree.clusters.push_back({cluster, lambda, 0.0, node_size(child), 0.0, false});
        tree.rows.push_back({cluster, id, true, lambda, node_size(child)});
        queue.push_back({child, id});
      }
    } else if (ls < min_size && rs < min_size) {
      drop_points(m.left, cluster, lambda);
      drop_points(m.right, cluster, lambda);
    } else if (ls < min_size) {
      drop_points(m.left, cluster, lambda);
      queue.push_back({m.right, cluster});
    } else {
      drop_points(m.right, cluster, lambda);
      queue.push_back({m.left, cluster});
    }
  }

  for (const auto& row : tree.rows) {
    auto& c = tree.clusters[row.parent];
    c.stability += (row.lambda - c.lambda_birth) * static_cast<double>(row.child_size);
    c.lambda_death = std::max(c.lambda_death, row.lambda);
  }
  return tree;
}

// Excess-of-mass selection; children always carry larger ids than parents.
void select_clusters(CondensedTree& tree) {
  const std::size_t count = tree.clusters.size();
  std::vector<std::vector<std::size_t>> children(count);
  for (std::size_t c = 1; c < count; ++c) children[*tree.clusters[c].parent].push_back(c);

  std::vector<double> best(count);
  for (std::size_t c = count; c-- > 0;) {
    double subtree = 0.0;
    for (std::size_t ch : children[c]) subtree += best[ch];
    auto& cluster = tree.clusters[c];
    if (!children[c].empty() && subtree > cluster.stability) {
      cluster.selected = false;
      best[c] = subtree;
    } else {
      cluster.selected = true;
      best[c] = cluster.stability;
      std::vector<std::size_t> stack(children[c]);
      while (!stack.empty()) {
        const std::size_t d = stack.back();
        stack.pop_back();
        tree.clusters[d].selected = false;
        stack.insert(stack.end(), children[d].begin(), children[d].end());
      }
    }
  }
}

ClusterLabels label_points(std::size_t n, const CondensedTree& tree) {
  ClusterLabels out;
  out.labels.assign(n, kNoise);
  std::vector<int> label_of(tree.clusters.size(), kNoise);
  for (std::size_t c = 0; c < tree.clusters.size(); ++c) {
    if (tree.clusters[c].selected) label_of[c] = out.cluster_count++;
  }
  for (const auto& row : tree.rows) {
    if (row.child_is_cluster) continue;
    std::optional<std::size_t> c = row.parent;
    while (c && !tree.clusters[*c].selected) c = tree.clusters[*c].parent;
    if (c) out.labels[row.child] = label_of[*c];
  }
  return out;
}

}  // namespace

std::size_t ClusterLabels::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

std::vector<std::vector<std::size_t>> ClusterLabels::members() const {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(cluster_count));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) out[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return out;
}

std::vector<double> core_distances(const std::vector<Point3>& points, std::size_t k) {
  if (points.size() <= k) {
    throw Error(Errc::too_few_points, "core distance needs more than k points");
  }
  std::vector<double> core(points.size(), 0.0);
  if (k == 0) return core;
  const NeighborIndex index(points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto nbrs = index.knn(points[i], k + 1);
    auto self = std::find_if(nbrs.begin(), nbrs.end(), [&](auto& nb) { return nb.index == i; });
    if (self != nbrs.end()) {
      nbrs.erase(self);
    } else {
      nbrs.pop_back();
    }
    core[i] = distance(points[i], points[nbrs.back().index]);
  }
  return core;
}

std::vector<MstEdge> mutual_reachability_mst(const std::vector<Point3>& points,
                                             const std::vector<double>& core) {
  const std::size_t n = points.size();
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);

  std::vector<bool> in_tree(n, false);
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = mutual_reachability(points, core, current, j);
      if (w < key[j]) {
        key[j] = w;
        from[j] = current;
      }
      if (key[j] < best) {
        best = key[j];
        next = j;
      }
    }
    in_tree[next] = true;
    edges.push_back({from[next], next, key[next]});
    current = next;
  }
  return edges;
}

HdbscanResult hdbscan_detailed(const std::vector<Point3>& points, std::size_t min_cluster_size,
                               std::size_t min_samples) {
  if (min_cluster_size < 2) {
    throw Error(Errc::invalid_argument, "min_cluster_size must be at least 2");
  }
  HdbscanResult res;
  const std::size_t n = points.size();
  if (n < min_cluster_size) {
    res.labels.labels.assign(n, kNoise);
    return res;
  }
  const std::size_t k = std::min(min_samples == 0 ? min_cluster_size : min_samples, n - 1);
  res.core = core_distances(points, k);
  res.mst = mutual_reachability_mst(points, res.core);
  res.tree = condense(n, single_linkage(n, res.mst), min_cluster_size);
  select_clusters(res.tree);
  res.labels = label_points(n, res.tree);
  return res;
}

ClusterLabels hdbscan(const std::vector<Point3>& points, std::size_t min_cluster_size,
                      std::size_t min_samples) {
  return hdbscan_detailed(points, min_cluster_size, min_samples).labels;
}

}  // namespace binpick
