#include "binpick/conditioning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "binpick/error.hpp"

namespace binpick {
namespace {

struct Pca {
  Point3 centroid;
  Eigen::Vector3d eigenvalues;  // ascending
  Eigen::Matrix3d eigenvectors;
};

template <typename Weights>
Pca weighted_pca(const std::vector<Point3>& pts, const std::vector<Neighbor>& nbrs,
                 Weights&& weight) {
  double wsum = 0.0;
  Point3 c = Point3::Zero();
  for (const auto& n : nbrs) {
    const double w = weight(n);
    c += w * pts[n.index];
    wsum += w;
  }
  c /= wsum;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& n : nbrs) {
    const Vec3 d = pts[n.index] - c;
    cov.noalias() += weight(n) * d * d.transpose();
  }
  cov /= wsum;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  return {c, es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

std::vector<Point3> voxel_grid_downsample(const std::vector<Point3>& points, double leaf) {
  if (!(leaf > 0.0)) throw Error(Errc::invalid_argument, "voxel leaf must be positive");
  using Key = std::tuple<long long, long long, long long>;  // (z, y, x)
  std::vector<std::pair<Key, std::size_t>> keyed;
  keyed.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    keyed.push_back({{static_cast<long long>(std::floor(p.z() / leaf)),
                      static_cast<long long>(std::floor(p.y() / leaf)),
                      static_cast<long long>(std::floor(p.x() / leaf))},
                     i});
  }
  std::sort(keyed.begin(), keyed.end());

  std::vector<Point3> out;
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    Point3 sum = Point3::Zero();
    while (j < keyed.size() && keyed[j].first == keyed[i].first) {
      sum += points[keyed[j].second];
      ++j;
    }
    out.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return out;
}

SorResult statistical_outlier_removal_detailed(const std::vector<Point3>& points, std::size_t k,
                                               double alpha) {
  if (k < 1) throw Error(Errc::invalid_argument, "SOR needs k >= 1");
  if (points.size() <= k) {
    throw Error(Errc::too_few_points, "SOR needs more than k points");
  }
  const NeighborIndex index(points);
  SorResult res;
  res.mean_distances.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto nbrs = index.knn(points[i], k + 1);
    auto self = std::find_if(nbrs.begin(), nbrs.end(), [&](auto& n) { return n.index == i; });
    if (self != nbrs.end()) {
      nbrs.erase(self);
    } else {
      nbrs.pop_back();
    }
    double sum = 0.0;
    for (const auto& n : nbrs) sum += std::sqrt(n.squared_distance);
    res.mean_distances[i] = sum / static_cast<double>(k);
  }

  const double n = static_cast<double>(points.size());
  const double mean =
      std::accumulate(res.mean_distances.begin(), res.mean_distances.end(), 0.0) / n;
  double sq = 0.0;
  for (double d : res.mean_distances) sq += (d - mean) * (d - mean);
  const double stddev = std::sqrt(sq / (n - 1.0));
  res.threshold = mean + alpha * stddev;

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (res.mean_distances[i] <= res.threshold) res.points.push_back(points[i]);
  }
  return res;
}

std::vector<Point3> statistical_outlier_removal(const std::vector<Point3>& points, std::size_t k,
                                                double alpha) {
  return statistical_outlier_removal_detailed(points, k, alpha).points;
}

std::vector<Point3> mls_resample(const std::vector<Point3>& points, double radius, int order) {
  if (!(radius > 0.0)) throw Error(Errc::invalid_argument, "MLS radius must be positive");
  if (order != 1 && order != 2) throw Error(Errc::invalid_argument, "MLS order must be 1 or 2");

  const std::size_t terms = order == 1 ? 3 : 6;
  const double bandwidth = radius / 2.0;
  const double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const NeighborIndex index(points);

  std::vector<Point3> out(points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point3& p = points[i];
    const auto nbrs = index.radius(p, radius);
    if (nbrs.size() < terms) continue;

    auto weight = [&](const Neighbor& n) { return std::exp(-n.squared_distance * inv_two_h2); };
    const Pca pca = weighted_pca(points, nbrs, weight);
    const Vec3 normal = pca.eigenvectors.col(0);
    const Vec3 u = pca.eigenvectors.col(2);
    const Vec3 v = normal.cross(u);
    const Point3 origin = p - (p - pca.centroid).dot(normal) * normal;

    Eigen::MatrixXd a(static_cast<Eigen::Index>(nbrs.size()), static_cast<Eigen::Index>(terms));
    Eigen::VectorXd f(static_cast<Eigen::Index>(nbrs.size()));
    Eigen::VectorXd w(static_cast<Eigen::Index>(nbrs.size()));
    for (std::size_t r = 0; r < nbrs.size(); ++r) {
      const Vec3 d = points[nbrs[r].index] - origin;
      const double x = d.dot(u);
      const double y = d.dot(v);
      const auto row = static_cast<Eigen::Index>(r);
      a(row, 0) = 1.0;
      a(row, 1) = x;
      a(row, 2) = y;
      if (order == 2) {
        a(row, 3) = x * x;
        a(row, 4) = x * y;
        a(row, 5) = y * y;
      }
      f(row) = d.dot(normal);
      w(row) = weight(nbrs[r]);
    }
    const Eigen::MatrixXd ata = a.transpose() * w.asDiagonal() * a;
    const Eigen::VectorXd atf = a.transpose() * w.asDiagonal() * f;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
    double height = 0.0;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
        ldlt.vectorD().minCoeff() > 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      height = ldlt.solve(atf)(0);
    }
    out[i] = origin + height * normal;
  }
  return out;
}

std::optional<Vec3> try_estimate_normal(const NeighborIndex& index, const Point3& p,
                                        double radius, const Point3& viewpoint) {
  const auto nbrs = index.radius(p, radius);
  if (nbrs.size() < 3) return std::nullopt;
  const Pca pca = weighted_pca(index.points(), nbrs, [](const Neighbor&) { return 1.0; });
  if (!(pca.eigenvalues(1) > 1e-12 * std::max(pca.eigenvalues(2), 1e-300))) return std::nullopt;
  Vec3 n = pca.eigenvectors.col(0).normalized();
  if (n.dot(viewpoint - p) < 0.0) n = -n;
  return n;
}

Vec3 estimate_normal(const NeighborIndex& index, const Point3& p, double radius,
                     const Point3& viewpoint) {
  const auto nbrs = index.radius(p, radius);
  if (nbrs.size() < 3) {
    throw Error(Errc::insufficient_neighbors, "normal estimation needs 3 neighbours in radius");
  }
  auto n = try_estimate_normal(index, p, radius, viewpoint);
  if (!n) throw Error(Errc::degenerate_neighborhood, "neighbourhood is collinear");
  return *n;
}

NormalField compute_normal_field(const std::vector<Point3>& points, double r_small,
                                 double r_large, const Point3& viewpoint) {
  if (!(r_small > 0.0) || !(r_small < r_large)) {
    throw Error(Errc::invalid_radii, "difference of normals needs 0 < r_small < r_large");
  }
  const NeighborIndex index(points);
  NormalField field;
  field.n_small.resize(points.size());
  field.n_large.resize(points.size());
  field.don.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    field.n_small[i] = try_estimate_normal(index, points[i], r_small, viewpoint);
    field.n_large[i] = try_estimate_normal(index, points[i], r_large, viewpoint);
    if (field.n_small[i] && field.n_large[i]) {
      field.don[i] = don_vector(*field.n_small[i], *field.n_large[i]);
    }
  }
  return field;
}

std::vector<Point3> don_filter(const std::vector<Point3>& points, double r_small, double r_large,
                               double threshold, const Point3& viewpoint) {
  const NormalField field = compute_normal_field(points, r_small, r_large, viewpoint);
  std::vector<Point3> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (field.don[i] && field.don[i]->norm() < threshold) out.push_back(points[i]);
  }
  return out;
}

}  // namespace binpick
