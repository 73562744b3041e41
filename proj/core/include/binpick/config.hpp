#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "binpick/fusion.hpp"
#include "binpick/image.hpp"

namespace binpick {

/// Every pipeline tunable. Unset optionals are derived: the ROI defaults to
/// the whole image, the contour area is scaled to the frame size and the
/// MLS/DoN radii follow the voxel leaf.
struct PipelineConfig {
  std::optional<PixelRect> roi;
  double canny_sigma = 0.33;
  std::optional<double> min_contour_area;

  double voxel_leaf = 0.005;
  std::size_t sor_k = 8;
  double sor_alpha = 1.0;
  std::optional<double> mls_radius;
  int mls_order = 2;
  std::optional<double> don_small_radius;
  std::optional<double> don_large_radius;
  double don_threshold = 0.25;

  std::size_t hdbscan_min_cluster_size = 30;
  std::size_t hdbscan_min_samples = 0;

  double ransac_dist_thresh = 0.004;
  std::size_t ransac_max_iter = 200;
  std::uint64_t seed = 0;
  std::size_t min_object_size = 30;

  double merge_angle_tol_deg = 5.0;
  double merge_centroid_thresh = 0.05;
  double merge_perp_thresh = 0.005;

  double mean_shift_bandwidth = 0.025;

  std::optional<Homography> homography;
  std::vector<PixelCorrespondence> calibration_correspondences;

  double effective_mls_radius() const { return mls_radius.value_or(3.0 * voxel_leaf); }
  double effective_don_small_radius() const { return don_small_radius.value_or(2.0 * voxel_leaf); }
  double effective_don_large_radius() const { return don_large_radius.value_or(5.0 * voxel_leaf); }

  /// Throws Errc::config_invalid on the first violated precondition.
  void validate() const;
  /// Explicit homography, else one estimated from the correspondences.
  /// Throws Errc::calibration_missing when neither is present.
  Homography resolve_homography() const;
};

/// Strict parse: unknown keys and wrong types raise Errc::config_invalid.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& config);

}  // namespace binpick
