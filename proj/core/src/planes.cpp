#include "binpick/planes.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <random>

#include "binpick/error.hpp"
#include "binpick/random.hpp"

namespace binpick {
namespace {

bool non_collinear(const Point3& a, const Point3& b, const Point3& c, Vec3& normal) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  normal = e1.cross(e2);
  const double scale = e1.norm() * e2.norm();
  return scale > 0.0 && normal.norm() > 1e-9 * scale;
}

std::vector<std::size_t> inliers_of(const std::vector<Point3>& pts, const PlaneModel& m,
                                    double thresh) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (std::abs(plane_signed_distance(m, pts[i])) <= thresh) out.push_back(i);
  }
  return out;
}

std::size_t count_inliers(const std::vector<Point3>& pts, const PlaneModel& m, double thresh) {
  std::size_t n = 0;
  for (const auto& p : pts) n += std::abs(plane_signed_distance(m, p)) <= thresh;
  return n;
}

// Deterministic fallback when no random triple was usable.
bool find_non_collinear_triple(const std::vector<Point3>& pts, PlaneModel& model) {
  if (pts.size() < 3) return false;
  std::size_t far = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (squared_distance(pts[0], pts[i]) > squared_distance(pts[0], pts[far])) far = i;
  }
  std::size_t best = 0;
  double best_norm = 0.0;
  Vec3 n;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (non_collinear(pts[0], pts[far], pts[i], n) && n.norm() > best_norm) {
      best_norm = n.norm();
      best = i;
    }
  }
  if (best_norm == 0.0) return false;
  non_collinear(pts[0], pts[far], pts[best], n);
  model = plane_from_point_normal(pts[0], n.normalized());
  return true;
}

bool same_model(const PlaneModel& a, const PlaneModel& b, double dist_thresh) {
  return normal_angle_deg(a, b) < 0.5 && std::abs(a.d - b.d) < dist_thresh;
}

SegmentedPlane merge_group(const std::vector<SegmentedPlane>& planes,
                           const std::vector<std::size_t>& members) {
  if (members.size() == 1) return planes[members.front()];
  SegmentedPlane merged;
  merged.source_cluster = planes[members.front()].source_cluster;
  for (std::size_t m : members) {
    merged.points.insert(merged.points.end(), planes[m].points.begin(), planes[m].points.end());
  }
  merged.model = fit_plane_pca(merged.points);
  return merged;
}

}  // namespace

Point3 SegmentedPlane::centroid() const {
  Point3 c = Point3::Zero();
  for (const auto& p : points) c += p;
  return points.empty() ? c : Point3(c / static_cast<double>(points.size()));
}

PlaneModel fit_plane_pca(const std::vector<Point3>& points) {
  if (points.size() < 3) {
    throw Error(Errc::degenerate_configuration, "plane fit needs at least 3 points");
  }
  Point3 mean = Point3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : points) {
    const Vec3 q = p - mean;
    cov += q * q.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const auto& ev = eig.eigenvalues();
  if (ev(2) <= 0.0 || ev(1) <= 1e-12 * ev(2)) {
    throw Error(Errc::degenerate_configuration, "points are collinear");
  }
  return plane_from_point_normal(mean, eig.eigenvectors().col(0));
}

RansacResult ransac_plane(const std::vector<Point3>& cluster, double dist_thresh,
                          std::size_t max_iter, std::uint64_t rng_seed) {
  if (cluster.size() < 3) {
    throw Error(Errc::degenerate_configuration, "RANSAC needs at least 3 points");
  }
  if (!(dist_thresh > 0.0)) {
    throw Error(Errc::invalid_argument, "dist_thresh must be positive");
  }
  std::mt19937_64 rng(rng_seed);
  const std::uint64_t n = cluster.size();

  PlaneModel best;
  std::size_t best_count = 0;
  bool have_model = false;
  Vec3 normal;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const std::uint64_t i = rng() % n;
    std::uint64_t j = rng() % (n - 1);
    std::uint64_t k = rng() % (n - 2);
    // Map onto distinct indices without rejection so the stream length is fixed.
    if (j >= i) ++j;
    const auto [lo, hi] = std::minmax(i, j);
    if (k >= lo) ++k;
    if (k >= hi) ++k;
    if (!non_collinear(cluster[i], cluster[j], cluster[k], normal)) continue;
    const PlaneModel hyp = plane_from_point_normal(cluster[i], normal.normalized());
    const std::size_t count = count_inliers(cluster, hyp, dist_thresh);
    if (!have_model || count > best_count) {
      best = hyp;
      best_count = count;
      have_model = true;
    }
  }
  if (!have_model && !find_non_collinear_triple(cluster, best)) {
    throw Error(Errc::degenerate_configuration, "no three non-collinear points");
  }

  RansacResult res{inliers_of(cluster, best, dist_thresh), best};
  if (res.inliers.size() >= 3) {
    std::vector<Point3> support;
    support.reserve(res.inliers.size());
    for (std::size_t i : res.inliers) support.push_back(cluster[i]);
    try {
      const PlaneModel refit = fit_plane_pca(support);
      auto refit_inliers = inliers_of(cluster, refit, dist_thresh);
      if (refit_inliers.size() >= 3) {
        res = {std::move(refit_inliers), refit};
      }
    } catch (const Error&) {
      // collinear support: keep the hypothesis
    }
  }
  return res;
}

std::vector<SegmentedPlane> extract_planes_iterative(const std::vector<Point3>& cluster,
                                                     const PlaneExtractionParams& params,
                                                     int label) {
  std::vector<SegmentedPlane> planes;
  std::vector<Point3> remaining = cluster;
  std::mt19937_64 stream(derive_seed(params.seed, static_cast<std::uint64_t>(label)));

  while (remaining.size() >= std::max<std::size_t>(params.min_cluster_size, 3) &&
         planes.size() < params.max_planes) {
    RansacResult fit;
    try {
      fit = ransac_plane(remaining, params.dist_thresh, params.max_iter, stream());
    } catch (const Error&) {
      break;
    }
    if (fit.inliers.size() < params.min_object_size) break;
    if (!planes.empty() && same_model(planes.back().model, fit.model, params.dist_thresh)) break;

    SegmentedPlane plane;
    plane.model = fit.model;
    plane.source_cluster = label;
    std::vector<bool> taken(remaining.size(), false);
    for (std::size_t i : fit.inliers) {
      plane.points.push_back(remaining[i]);
      taken[i] = true;
    }
    std::vector<Point3> rest;
    rest.reserve(remaining.size() - fit.inliers.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (!taken[i]) rest.push_back(remaining[i]);
    }
    remaining = std::move(rest);
    planes.push_back(std::move(plane));
  }
  return planes;
}

bool check_overlapping(const SegmentedPlane& p1, const SegmentedPlane& p2, double centroid_thresh,
                       double perp_thresh) {
  const Point3 c1 = p1.centroid();
  const Point3 c2 = p2.centroid();
  return distance(c1, c2) < centroid_thresh &&
         std::abs(plane_signed_distance(p1.model, c2)) < perp_thresh;
}

std::vector<PlaneGroup> group_planes(const std::vector<SegmentedPlane>& planes,
                                     const MergeParams& params) {
  const double min_dot = std::cos(deg2rad(params.angle_tol_deg));
  std::vector<bool> visited(planes.size(), false);
  std::vector<PlaneGroup> groups;
  for (std::size_t m = 0; m < planes.size(); ++m) {
    if (visited[m]) continue;
    visited[m] = true;
    PlaneGroup g;
    g.members.push_back(m);
    for (std::size_t n = m + 1; n < planes.size(); ++n) {
      if (visited[n]) continue;
      const double dot = std::abs(planes[m].model.normal().dot(planes[n].model.normal()));
      if (dot >= min_dot &&
          check_overlapping(planes[m], planes[n], params.centroid_thresh, params.perp_thresh)) {
        visited[n] = true;
        g.members.push_back(n);
      }
    }
    g.merged = merge_group(planes, g.members);
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<SegmentedPlane> group_and_merge_planes(const std::vector<SegmentedPlane>& planes,
                                                   const MergeParams& params) {
  std::vector<SegmentedPlane> current = planes;
  for (;;) {
    auto groups = group_planes(current, params);
    if (groups.size() == current.size()) return current;
    current.clear();
    for (auto& g : groups) current.push_back(std::move(g.merged));
  }
}

}  // namespace binpick
