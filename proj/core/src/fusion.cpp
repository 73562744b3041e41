#include "binpick/fusion.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "binpick/error.hpp"

namespace binpick {
namespace {

// Similarity transform taking the points to zero mean and mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double spread = 0.0;
  for (const auto& p : pts) spread += (p - mean).norm();
  spread /= static_cast<double>(pts.size());
  const double s = spread > 0.0 ? std::sqrt(2.0) / spread : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  return t;
}

bool collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a;
  const Eigen::Vector2d v = c - a;
  const double cross = u.x() * v.y() - u.y() * v.x();
  const double scale = std::max({u.squaredNorm(), v.squaredNorm(), 1e-300});
  return std::abs(cross) <= 1e-9 * scale;
}

void check_configuration(const std::vector<Eigen::Vector2d>& pts) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if ((pts[i] - pts[j]).norm() < 1e-9) {
        throw Error(Errc::degenerate_configuration, "duplicate calibration point");
      }
    }
  }
  if (pts.size() == 4) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = i + 1; j < 4; ++j) {
        for (std::size_t k = j + 1; k < 4; ++k) {
          if (collinear(pts[i], pts[j], pts[k])) {
            throw Error(Errc::degenerate_configuration, "three collinear calibration points");
          }
        }
      }
    }
  }
}

}  // namespace

Homography::Homography(const Eigen::Matrix3d& h) {
  if (!h.allFinite() || std::abs(h(2, 2)) < 1e-12) {
    throw Error(Errc::degenerate_configuration, "homography cannot be normalised (h22 ~ 0)");
  }
  h_ = h / h(2, 2);
  if (std::abs(h_.determinant()) <= 1e-12) {
    throw Error(Errc::degenerate_configuration, "homography is not invertible");
  }
}

Eigen::Vector2d Homography::map(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d q = h_ * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

Homography Homography::inverse() const { return Homography(h_.inverse()); }

std::array<double, 9> Homography::row_major() const {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(3 * r + c)] = h_(r, c);
  }
  return out;
}

Homography Homography::from_row_major(const std::array<double, 9>& v) {
  Eigen::Matrix3d m;
  m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
  return Homography(m);
}

Homography estimate_homography(const std::vector<PixelCorrespondence>& pairs) {
  if (pairs.size() < 4) {
    throw Error(Errc::degenerate_configuration, "at least 4 correspondences are required");
  }
  std::vector<Eigen::Vector2d> src;
  std::vector<Eigen::Vector2d> dst;
  for (const auto& p : pairs) {
    src.push_back(p.rgb);
    dst.push_back(p.depth);
  }
  check_configuration(src);
  check_configuration(dst);

  const Eigen::Matrix3d ts = normalizing_transform(src);
  const Eigen::Matrix3d td = normalizing_transform(dst);

  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].x(), src[i].y(), 1.0);
    const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].x(), dst[i].y(), 1.0);
    const double x = s.x() / s.z(), y = s.y() / s.z();
    const double u = d.x() / d.z(), v = d.y() / d.z();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A second (near-)null direction means the points do not pin down h.
  if (sv.size() >= 8 && sv(7) <= 1e-10 * sv(0)) {
    throw Error(Errc::degenerate_configuration, "correspondences do not determine a homography");
  }
  const Eigen::VectorXd hv = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  return Homography(td.inverse() * hn * ts);
}

MaskedCluster map_mask_to_cloud(const BinaryMask& mask, const Homography& h,
                                const OrganizedCloud& cloud) {
  std::vector<std::uint8_t> hit(cloud.size(), 0);
  const Eigen::Matrix3d& m = h.matrix();
  for (std::size_t y = 0; y < mask.height; ++y) {
    for (std::size_t x = 0; x < mask.width; ++x) {
      if (!mask.bits[y * mask.width + x]) continue;
      const double px = static_cast<double>(x);
      const double py = static_cast<double>(y);
      const double w = m(2, 0) * px + m(2, 1) * py + m(2, 2);
      const double u = (m(0, 0) * px + m(0, 1) * py + m(0, 2)) / w;
      const double v = (m(1, 0) * px + m(1, 1) * py + m(1, 2)) / w;
      const long col = std::lround(u);
      const long row = std::lround(v);
      if (col < 0 || row < 0 || col >= static_cast<long>(cloud.width) ||
          row >= static_cast<long>(cloud.height)) {
        continue;
      }
      hit[cloud.index(static_cast<std::size_t>(col), static_cast<std::size_t>(row))] = 1;
    }
  }

  MaskedCluster out{{}, mask.role};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (hit[i] && cloud.is_valid(i)) out.points.push_back(cloud.points[i]);
  }
  if (out.points.empty()) {
    throw Error(Errc::empty_cluster, "mask maps to no valid depth points");
  }
  return out;
}

std::optional<CloudIntrinsics> estimate_cloud_intrinsics(const OrganizedCloud& cloud) {
  // Two independent line fits: pixel column against x/z, row against y/z.
  Eigen::Matrix2d ax = Eigen::Matrix2d::Zero(), ay = Eigen::Matrix2d::Zero();
  Eigen::Vector2d bx = Eigen::Vector2d::Zero(), by = Eigen::Vector2d::Zero();
  for (std::size_t row = 0; row < cloud.height; ++row) {
    for (std::size_t col = 0; col < cloud.width; ++col) {
      const std::size_t i = cloud.index(col, row);
      if (!cloud.is_valid(i) || !(cloud.points[i].z() > 0.0)) continue;
      const Point3& p = cloud.points[i];
      const Eigen::Vector2d gx(p.x() / p.z(), 1.0), gy(p.y() / p.z(), 1.0);
      ax += gx * gx.transpose();
      bx += gx * static_cast<double>(col);
      ay += gy * gy.transpose();
      by += gy * static_cast<double>(row);
    }
  }
  const auto scale_x = ax.cwiseAbs().maxCoeff(), scale_y = ay.cwiseAbs().maxCoeff();
  if (!(std::abs(ax.determinant()) > 1e-12 * scale_x * scale_x) ||
      !(std::abs(ay.determinant()) > 1e-12 * scale_y * scale_y)) {
    return std::nullopt;
  }
  const Eigen::Vector2d sx = ax.ldlt().solve(bx), sy = ay.ldlt().solve(by);
  if (!(std::abs(sx(0)) > 0.0) || !(std::abs(sy(0)) > 0.0)) return std::nullopt;
  return CloudIntrinsics{sx(0), sy(0), sx(1), sy(1)};
}

FaceSamples project_mask_onto_plane(const BinaryMask& mask, const Homography& h,
                                    const OrganizedCloud& cloud, const CloudIntrinsics& k,
                                    const PlaneModel& plane, double support_thresh) {
  std::vector<std::uint8_t> on_plane(cloud.size(), 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    // On the plane, or in front of it and therefore hiding part of it.
    on_plane[i] = cloud.is_valid(i) &&
                  plane_signed_distance(plane, cloud.points[i]) >= -support_thresh;
  }
  std::vector<std::uint8_t> support(cloud.size(), 0);
  for (std::size_t row = 0; row < cloud.height; ++row) {
    for (std::size_t col = 0; col < cloud.width; ++col) {
      bool any = false;
      for (long dr = -1; dr <= 1 && !any; ++dr) {
        for (long dc = -1; dc <= 1 && !any; ++dc) {
          const long r = static_cast<long>(row) + dr, c = static_cast<long>(col) + dc;
          if (r < 0 || c < 0 || r >= static_cast<long>(cloud.height) ||
              c >= static_cast<long>(cloud.width)) {
            continue;
          }
          any = on_plane[cloud.index(static_cast<std::size_t>(c), static_cast<std::size_t>(r))];
        }
      }
      support[cloud.index(col, row)] = any;
    }
  }

  const Vec3 n = plane.normal();
  const Eigen::Matrix3d& m = h.matrix();
  FaceSamples out;
  for (std::size_t y = 0; y < mask.height; ++y) {
    for (std::size_t x = 0; x < mask.width; ++x) {
      if (!mask.bits[y * mask.width + x]) continue;
      const double px = static_cast<double>(x);
      const double py = static_cast<double>(y);
      const double w = m(2, 0) * px + m(2, 1) * py + m(2, 2);
      const double u = (m(0, 0) * px + m(0, 1) * py + m(0, 2)) / w;
      const double v = (m(1, 0) * px + m(1, 1) * py + m(1, 2)) / w;
      const long col = std::lround(u);
      const long row = std::lround(v);
      if (col < 0 || row < 0 || col >= static_cast<long>(cloud.width) ||
          row >= static_cast<long>(cloud.height) ||
          !support[cloud.index(static_cast<std::size_t>(col), static_cast<std::size_t>(row))]) {
        continue;
      }
      const Vec3 d = k.ray(u, v);
      const double nd = n.dot(d);
      if (std::abs(nd) < 1e-9) continue;
      const double t = -plane.d / nd;
      if (!(t > 0.0)) continue;
      out.points.push_back(t * d);
      out.weights.push_back(t * t / std::abs(nd));
    }
  }
  return out;
}

}  // namespace binpick
