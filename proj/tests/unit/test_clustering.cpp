#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include <doctest.h>

#include "binpick/clustering.hpp"
#include "binpick/error.hpp"
#include "oracles.hpp"

using namespace binpick;

namespace {

std::vector<Point3> blob(std::mt19937_64& rng, const Point3& c, std::size_t n, double sigma) {
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<Point3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(c + Point3(g(rng), g(rng), g(rng)));
  return pts;
}

std::vector<Point3> patch(std::mt19937_64& rng, double z, std::size_t n) {
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<Point3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), z);
  return pts;
}

void append(std::vector<Point3>& a, const std::vector<Point3>& b) { a.insert(a.end(), b.begin(), b.end()); }

}  // namespace

TEST_CASE("core_distances examples") {
  const std::vector<Point3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK(core_distances(line, 1) == std::vector<double>{1, 1, 1});
  CHECK(core_distances(line, 2) == std::vector<double>{2, 1, 2});
  try {
    core_distances(line, 3);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::too_few_points);
  }
}

TEST_CASE("core_distances match brute force") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = oracle::random_cloud(rng, 150);
    for (std::size_t k : {1u, 5u, 30u}) CHECK(core_distances(pts, k) == oracle::core_distances(pts, k));
  }
}

TEST_CASE("mutual reachability is symmetric and dominates distance") {
  std::mt19937_64 rng(13);
  const auto pts = oracle::random_cloud(rng, 60);
  const auto core = core_distances(pts, 5);
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = 0; b < pts.size(); ++b) {
      CHECK(mutual_reachability(pts, core, a, b) == mutual_reachability(pts, core, b, a));
      CHECK(mutual_reachability(pts, core, a, b) >= distance(pts[a], pts[b]));
    }
  }
}

TEST_CASE("MST weights match Kruskal on random instances") {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<std::size_t> n(2, 300);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = oracle::random_cloud(rng, n(rng));
    const std::size_t k = std::min<std::size_t>(5, pts.size() - 1);
    const auto mst = mutual_reachability_mst(pts, core_distances(pts, k));
    REQUIRE(mst.size() == pts.size() - 1);
    std::vector<double> w;
    for (const auto& e : mst) w.push_back(e.weight);
    std::sort(w.begin(), w.end());
    CHECK(w == oracle::mst_weights(pts, oracle::core_distances(pts, k)));
  }
}

TEST_CASE("two separated blobs give two clusters") {
  std::mt19937_64 rng(42);
  auto pts = blob(rng, {0, 0, 1}, 50, 0.005);
  append(pts, blob(rng, {1, 0, 1}, 50, 0.005));
  const auto r = hdbscan(pts, 30);
  CHECK(r.cluster_count == 2);
  CHECK(r.noise_count() == 0);
  for (std::size_t i = 1; i < 50; ++i) CHECK(r.labels[i] == r.labels[0]);
  for (std::size_t i = 51; i < 100; ++i) CHECK(r.labels[i] == r.labels[50]);
  CHECK(r.labels[0] != r.labels[50]);
}

TEST_CASE("small inputs are all noise, one blob is one cluster") {
  std::mt19937_64 rng(43);
  const auto few = hdbscan(blob(rng, {0, 0, 1}, 20, 0.01), 30);
  CHECK(few.cluster_count == 0);
  CHECK(few.noise_count() == 20);

  const auto one = hdbscan(blob(rng, {0, 0, 1}, 100, 0.01), 30);
  CHECK(one.cluster_count == 1);
  CHECK(hdbscan({}, 30).labels.empty());
}

TEST_CASE("stacked parallel patches are separated") {
  std::mt19937_64 rng(44);
  auto pts = patch(rng, 1.0, 120);
  append(pts, patch(rng, 0.95, 120));
  const auto r = hdbscan(pts, 30);
  REQUIRE(r.cluster_count == 2);
  std::map<int, int> low, high;
  for (std::size_t i = 0; i < 120; ++i) ++low[r.labels[i]];
  for (std::size_t i = 120; i < 240; ++i) ++high[r.labels[i]];
  low.erase(kNoise);
  high.erase(kNoise);
  REQUIRE(low.size() == 1);
  REQUIRE(high.size() == 1);
  CHECK(low.begin()->first != high.begin()->first);
  CHECK(low.begin()->second >= 100);
  CHECK(high.begin()->second >= 100);
}

TEST_CASE("tree and labels are consistent") {
  std::mt19937_64 rng(45);
  auto pts = blob(rng, {0, 0, 1}, 80, 0.01);
  append(pts, blob(rng, {0.3, 0, 1}, 60, 0.01));
  append(pts, blob(rng, {0.3, 0.3, 1}, 40, 0.01));
  append(pts, oracle::random_cloud(rng, 15));
  const auto r = hdbscan_detailed(pts, 30);
  const auto& clusters = r.tree.clusters;

  for (std::size_t i = 0; i < clusters.size(); ++i) {
    CHECK(clusters[i].stability >= 0.0);
    if (clusters[i].parent) CHECK(clusters[i].lambda_birth >= clusters[*clusters[i].parent].lambda_birth);
    if (!clusters[i].selected) continue;
    for (auto p = clusters[i].parent; p; p = clusters[*p].parent) CHECK_FALSE(clusters[*p].selected);
  }
  const auto members = r.labels.members();
  CHECK(static_cast<int>(members.size()) == r.labels.cluster_count);
  for (const auto& m : members) CHECK(m.size() >= 30);
  std::vector<int> seen(r.labels.cluster_count, 0);
  for (int l : r.labels.labels) {
    if (l != kNoise) seen[l] = 1;
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  CHECK(r.labels.cluster_count == 3);
}

TEST_CASE("determinism and permutation equivariance") {
  std::mt19937_64 rng(46);
  auto pts = blob(rng, {0, 0, 1}, 70, 0.01);
  append(pts, blob(rng, {0.2, 0.1, 1}, 50, 0.01));
  append(pts, oracle::random_cloud(rng, 10));
  const auto a = hdbscan(pts, 30);
  CHECK(a.labels == hdbscan(pts, 30).labels);

  std::vector<std::size_t> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Point3> shuffled;
  for (std::size_t i : perm) shuffled.push_back(pts[i]);
  const auto b = hdbscan(shuffled, 30);
  CHECK(b.cluster_count == a.cluster_count);
  std::map<int, int> rename;
  bool consistent = true;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    const int la = a.labels[perm[j]], lb = b.labels[j];
    if ((la == kNoise) != (lb == kNoise)) consistent = false;
    if (la == kNoise) continue;
    const auto [it, fresh] = rename.emplace(la, lb);
    if (!fresh && it->second != lb) consistent = false;
  }
  CHECK(consistent);
}
