#include <cmath>
#include <random>

#include <doctest.h>
#include <Eigen/Eigenvalues>

#include "binpick/conditioning.hpp"
#include "binpick/error.hpp"
#include "oracles.hpp"

using namespace binpick;
using doctest::Approx;

namespace {

std::vector<Point3> grid(int nx, int ny, double step, double z) {
  std::vector<Point3> pts;
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) pts.emplace_back(x * step, y * step, z);
  }
  return pts;
}

// Two faces meeting along x = 0.3, z = 1: a floor (x <= 0.3) and a wall rising toward the sensor.
std::vector<Point3> dihedral(double step) {
  std::vector<Point3> pts;
  for (int y = 0; y < 30; ++y) {
    for (int i = -30; i <= 0; ++i) pts.emplace_back(0.3 + i * step, y * step, 1.0);
    for (int i = 1; i <= 30; ++i) pts.emplace_back(0.3, y * step, 1.0 - i * step);
  }
  return pts;
}

double crease_distance(const Point3& p) { return std::max(0.3 - p.x(), 1.0 - p.z()); }

}  // namespace

TEST_CASE("voxel_grid_downsample examples") {
  auto one = voxel_grid_downsample({{0, 0, 0}, {0.001, 0, 0}}, 0.01);
  REQUIRE(one.size() == 1);
  CHECK(one[0].x() == Approx(0.0005));
  CHECK(voxel_grid_downsample({{0, 0, 0}, {0.5, 0, 0}}, 0.01).size() == 2);
  CHECK(voxel_grid_downsample({}, 0.01).empty());
  CHECK_THROWS_AS(voxel_grid_downsample({{0, 0, 0}}, 0.0), Error);
}

TEST_CASE("voxel output is ordered z-major and stays in its cell") {
  std::mt19937_64 rng(4);
  const auto pts = oracle::random_cloud(rng, 3000, 0.3);
  const double leaf = 0.02;
  const auto out = voxel_grid_downsample(pts, leaf);
  CHECK(out.size() <= pts.size());
  auto key = [&](const Point3& p) {
    return std::array<long, 3>{static_cast<long>(std::floor(p.z() / leaf)), static_cast<long>(std::floor(p.y() / leaf)),
                               static_cast<long>(std::floor(p.x() / leaf))};
  };
  for (std::size_t i = 1; i < out.size(); ++i) CHECK(key(out[i - 1]) < key(out[i]));
}

TEST_CASE("statistical_outlier_removal examples") {
  auto pts = grid(3, 3, 1.0, 0.0);
  pts.emplace_back(10, 10, 0);
  const auto kept = statistical_outlier_removal(pts, 3, 1.0);
  CHECK(kept.size() == 9);
  for (const auto& p : kept) CHECK(p.x() < 5.0);

  const std::vector<Point3> same(12, Point3(1, 2, 3));
  CHECK(statistical_outlier_removal(same, 8, 1.0).size() == 12);

  try {
    statistical_outlier_removal(grid(2, 2, 1, 0), 4, 1.0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::too_few_points);
  }
}

TEST_CASE("SOR never drops a point at or below the mean") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = oracle::random_cloud(rng, 400, 0.5);
    const auto r = statistical_outlier_removal_detailed(pts, 8, 0.0);
    double mean = 0.0;
    for (double m : r.mean_distances) mean += m;
    mean /= static_cast<double>(r.mean_distances.size());
    std::size_t at_or_below = 0;
    for (double m : r.mean_distances) at_or_below += m <= mean;
    CHECK(r.points.size() >= at_or_below);
    CHECK(r.threshold == Approx(mean));
  }
}

TEST_CASE("mls_resample") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  const PlaneModel plane = normalize_plane(0.2, -0.1, 1.0, -0.8);
  std::vector<Point3> pts;
  for (int i = 0; i < 400; ++i) {
    const double x = u(rng), y = u(rng);
    pts.emplace_back(x, y, -(plane.a * x + plane.b * y + plane.d) / plane.c);
  }
  for (const auto& p : mls_resample(pts, 0.02, 2)) CHECK(std::abs(plane_signed_distance(plane, p)) < 1e-9);
  for (const auto& p : mls_resample(pts, 0.02, 1)) CHECK(std::abs(plane_signed_distance(plane, p)) < 1e-9);

  auto bumped = pts;
  bumped[0] = Point3(0, 0, -plane.d / plane.c) + 0.005 * plane.normal();
  const auto out = mls_resample(bumped, 0.02, 2);
  CHECK(std::abs(plane_signed_distance(plane, out[0])) < 0.001);

  const std::vector<Point3> lonely{{0, 0, 1}, {1, 1, 1}};
  CHECK(mls_resample(lonely, 0.01, 2) == lonely);
  CHECK_THROWS_AS(mls_resample(lonely, 0.01, 3), Error);
}

TEST_CASE("estimate_normal orientation and errors") {
  const auto pts = grid(10, 10, 0.01, 1.0);
  const NeighborIndex idx(pts);
  const Point3 c(0.045, 0.045, 1.0);
  CHECK((estimate_normal(idx, c, 0.03) - Vec3(0, 0, -1)).norm() < 1e-12);
  CHECK((estimate_normal(idx, c, 0.03, {0, 0, 10}) - Vec3(0, 0, 1)).norm() < 1e-12);

  const NeighborIndex two(std::vector<Point3>{{0, 0, 1}, {0.01, 0, 1}});
  try {
    estimate_normal(two, {0, 0, 1}, 0.1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::insufficient_neighbors);
  }
  const NeighborIndex line(std::vector<Point3>{{0, 0, 1}, {0.01, 0, 1}, {0.02, 0, 1}, {0.03, 0, 1}});
  try {
    estimate_normal(line, {0, 0, 1}, 0.1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::degenerate_neighborhood);
  }
  CHECK_FALSE(try_estimate_normal(two, {0, 0, 1}, 0.1).has_value());
}

TEST_CASE("estimate_normal residual matches the smallest eigenvalue") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 0.002);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<Point3> pts;
  for (int i = 0; i < 300; ++i) pts.emplace_back(u(rng), u(rng), 1.0 + 0.3 * u(rng) + g(rng));
  const NeighborIndex idx(pts);
  const double radius = 0.03;
  for (int q = 0; q < 20; ++q) {
    const Point3 p = pts[q];
    const Vec3 n = estimate_normal(idx, p, radius);
    std::vector<Point3> nb;
    for (const auto& h : idx.radius(p, radius)) nb.push_back(pts[h.index]);
    Point3 mean = Point3::Zero();
    for (const auto& x : nb) mean += x;
    mean /= static_cast<double>(nb.size());
    Mat3 cov = Mat3::Zero();
    double rss = 0.0;
    for (const auto& x : nb) {
      cov += (x - mean) * (x - mean).transpose();
      rss += std::pow(n.dot(x - mean), 2);
    }
    cov /= static_cast<double>(nb.size());
    const double lambda_min = Eigen::SelfAdjointEigenSolver<Mat3>(cov).eigenvalues()(0);
    CHECK(std::abs(std::sqrt(rss / nb.size()) - std::sqrt(lambda_min)) < 1e-9);
    CHECK(std::abs(std::abs(n.dot(oracle::pca_normal(nb))) - 1.0) < 1e-9);
  }
}

TEST_CASE("don_filter keeps planes and drops a crease") {
  const auto plane = grid(40, 40, 0.005, 1.0);
  const auto field = compute_normal_field(plane, 0.01, 0.025);
  for (const auto& d : field.don) {
    REQUIRE(d.has_value());
    CHECK(d->norm() < 1e-9);
  }
  CHECK(don_filter(plane, 0.01, 0.025, 0.25).size() == plane.size());

  const double r_s = 0.008, r_l = 0.04;
  const auto fold = dihedral(0.005);
  const auto fold_field = compute_normal_field(fold, r_s, r_l);
  const auto kept = don_filter(fold, r_s, r_l, 0.25);
  CHECK(kept.size() < fold.size());
  std::size_t band_dropped = 0;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    const double gap = crease_distance(fold[i]);
    const bool dropped = !fold_field.don[i] || fold_field.don[i]->norm() >= 0.25;
    if (gap > r_l) CHECK_FALSE(dropped);
    if (gap > r_s && gap < r_l) band_dropped += dropped;
  }
  CHECK(band_dropped > 0);
  std::size_t survivors = 0;
  for (const auto& d : fold_field.don) survivors += d && d->norm() < 0.25;
  CHECK(kept.size() == survivors);

  try {
    don_filter(plane, 0.02, 0.02);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_radii);
  }
}

TEST_CASE("DoN norm is within [0, 1]") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100000; ++i) {
    const Vec3 a = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 b = Vec3(g(rng), g(rng), g(rng)).normalized();
    const double n = don_vector(a, b).norm();
    REQUIRE(n >= 0.0);
    REQUIRE(n <= 1.0);
  }
  CHECK(don_vector({0, 0, 1}, {0, 0, -1}).norm() == Approx(1.0));
}
