#include "binpick/verify.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace binpick {

ErrorTable verify_against_ground_truth(const std::vector<Pose6DoF>& poses,
                                       const std::vector<GroundTruth>& truth,
                                       double match_radius_mm) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    for (std::size_t p = 0; p < poses.size(); ++p) {
      const double d = distance(poses[p].centroid_mm, truth[t].centroid_mm);
      if (d <= match_radius_mm) pairs.emplace_back(d, t, p);
    }
  }
  std::sort(pairs.begin(), pairs.end());

  ErrorTable table;
  std::vector<bool> truth_used(truth.size(), false);
  std::vector<bool> pose_used(poses.size(), false);
  for (const auto& [d, t, p] : pairs) {
    if (truth_used[t] || pose_used[p]) continue;
    truth_used[t] = pose_used[p] = true;
    PoseMatch m;
    m.truth_index = t;
    m.pose_index = p;
    m.trans_err_mm = (poses[p].centroid_mm - truth[t].centroid_mm).cwiseAbs();
    const auto& e = poses[p].euler;
    const auto& g = truth[t].euler;
    m.rot_err_deg = Vec3(std::abs(wrap_degrees(e.theta3 - g.theta3)),
                         std::abs(wrap_degrees(e.theta2 - g.theta2)),
                         std::abs(wrap_degrees(e.theta1 - g.theta1)));
    table.matches.push_back(m);
  }
  std::sort(table.matches.begin(), table.matches.end(),
            [](const PoseMatch& a, const PoseMatch& b) { return a.truth_index < b.truth_index; });

  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (!truth_used[t]) table.missed_truths.push_back(t);
  }
  table.unmatched_poses =
      static_cast<std::size_t>(std::count(pose_used.begin(), pose_used.end(), false));
  if (!table.matches.empty()) {
    for (const auto& m : table.matches) {
      table.mean_trans_err_mm += m.trans_err_mm;
      table.mean_rot_err_deg += m.rot_err_deg;
    }
    table.mean_trans_err_mm /= static_cast<double>(table.matches.size());
    table.mean_rot_err_deg /= static_cast<double>(table.matches.size());
  }
  return table;
}

nlohmann::json to_json(const ErrorTable& table) {
  auto vec = [](const Vec3& v) { return nlohmann::json{v.x(), v.y(), v.z()}; };
  auto matches = nlohmann::json::array();
  for (const auto& m : table.matches) {
    matches.push_back({{"truth", m.truth_index},
                       {"pose", m.pose_index},
                       {"trans_err_mm", vec(m.trans_err_mm)},
                       {"rot_err_deg_xyz", vec(m.rot_err_deg)}});
  }
  return {{"matches", matches},
          {"misses", table.missed_truths},
          {"unmatched_poses", table.unmatched_poses},
          {"mean_trans_err_mm", vec(table.mean_trans_err_mm)},
          {"mean_rot_err_deg_xyz", vec(table.mean_rot_err_deg)},
          {"reference_trans_err_mm",
           {kReferenceTransErrMm[0], kReferenceTransErrMm[1], kReferenceTransErrMm[2]}},
          {"reference_rot_err_deg_xy", {kReferenceRotErrDeg[0], kReferenceRotErrDeg[1]}}};
}

}  // namespace binpick
