#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "binpick/pose.hpp"
#include "binpick/synthesis.hpp"

namespace binpick {

inline constexpr double kDefaultMatchRadiusMm = 30.0;

/// Physical-rig averages, shown next to synthetic results for comparison.
inline constexpr double kReferenceTransErrMm[3] = {3.03, 3.27, 3.3};
inline constexpr double kReferenceRotErrDeg[2] = {2.95, 3.26};

struct PoseMatch {
  std::size_t truth_index = 0;
  std::size_t pose_index = 0;
  Vec3 trans_err_mm = Vec3::Zero();  // |dx|, |dy|, |dz|
  Vec3 rot_err_deg = Vec3::Zero();   // wrapped |d theta| for X, Y, Z
};

struct ErrorTable {
  std::vector<PoseMatch> matches;
  std::vector<std::size_t> missed_truths;
  std::size_t unmatched_poses = 0;
  Vec3 mean_trans_err_mm = Vec3::Zero();
  Vec3 mean_rot_err_deg = Vec3::Zero();

  std::size_t misses() const { return missed_truths.size(); }
};

/// Greedy nearest-centroid matching: closest pairs first, each pose and
/// truth used at most once, pairs farther than match_radius_mm ignored.
ErrorTable verify_against_ground_truth(const std::vector<Pose6DoF>& poses,
                                       const std::vector<GroundTruth>& truth,
                                       double match_radius_mm = kDefaultMatchRadiusMm);

nlohmann::json to_json(const ErrorTable& table);

}  // namespace binpick
