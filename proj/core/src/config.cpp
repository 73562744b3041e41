#include "binpick/config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>

#include "binpick/error.hpp"

namespace binpick {
namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::config_invalid, what); }

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) invalid(std::string(name) + " must be positive");
}

const std::array<const char*, 23> kKeys{
    "roi", "canny_sigma", "min_contour_area", "voxel_leaf", "sor_k", "sor_alpha", "mls_radius",
    "mls_order", "don_small_radius", "don_large_radius", "don_threshold",
    "hdbscan_min_cluster_size", "hdbscan_min_samples", "ransac_dist_thresh", "ransac_max_iter",
    "seed", "min_object_size", "merge_angle_tol_deg", "merge_centroid_thresh",
    "merge_perp_thresh", "mean_shift_bandwidth", "rgb_to_depth_homography",
    "calibration_correspondences"};

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <typename T>
void read(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

void PipelineConfig::validate() const {
  if (roi && (roi->width == 0 || roi->height == 0)) invalid("roi must be non-empty");
  if (!(canny_sigma >= 0.0 && canny_sigma <= 1.0)) invalid("canny_sigma must lie in [0, 1]");
  if (min_contour_area && !(*min_contour_area >= 0.0)) invalid("min_contour_area must be >= 0");
  require_positive(voxel_leaf, "voxel_leaf");
  if (sor_k == 0) invalid("sor_k must be at least 1");
  if (!(sor_alpha >= 0.0)) invalid("sor_alpha must be >= 0");
  require_positive(effective_mls_radius(), "mls_radius");
  if (mls_order != 1 && mls_order != 2) invalid("mls_order must be 1 or 2");
  require_positive(effective_don_small_radius(), "don_small_radius");
  require_positive(effective_don_large_radius(), "don_large_radius");
  if (effective_don_small_radius() >= effective_don_large_radius()) {
    invalid("don_small_radius must be below don_large_radius");
  }
  if (!(don_threshold >= 0.0 && don_threshold <= 1.0)) invalid("don_threshold must lie in [0, 1]");
  if (hdbscan_min_cluster_size < 2) invalid("hdbscan_min_cluster_size must be at least 2");
  require_positive(ransac_dist_thresh, "ransac_dist_thresh");
  if (ransac_max_iter == 0) invalid("ransac_max_iter must be at least 1");
  if (min_object_size < 3) invalid("min_object_size must be at least 3");
  if (!(merge_angle_tol_deg >= 0.0 && merge_angle_tol_deg < 90.0)) {
    invalid("merge_angle_tol_deg must lie in [0, 90)");
  }
  require_positive(merge_centroid_thresh, "merge_centroid_thresh");
  require_positive(merge_perp_thresh, "merge_perp_thresh");
  require_positive(mean_shift_bandwidth, "mean_shift_bandwidth");
  if (!calibration_correspondences.empty() && calibration_correspondences.size() < 4) {
    invalid("calibration_correspondences needs at least 4 pairs");
  }
}

Homography PipelineConfig::resolve_homography() const {
  if (homography) return *homography;
  if (calibration_correspondences.empty()) {
    throw Error(Errc::calibration_missing,
                "config has neither rgb_to_depth_homography nor calibration_correspondences");
  }
  try {
    return estimate_homography(calibration_correspondences);
  } catch (const Error& e) {
    throw Error(Errc::config_invalid, std::string("calibration: ") + e.what());
  }
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) invalid("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(kKeys.begin(), kKeys.end(), [&](const char* k) { return key == k; }) ==
        kKeys.end()) {
      invalid("unknown config key '" + key + "'");
    }
  }

  PipelineConfig c;
  try {
    if (j.contains("roi") && !j.at("roi").is_null()) {
      const auto r = j.at("roi").get<std::array<std::size_t, 4>>();
      c.roi = PixelRect{r[0], r[1], r[2], r[3]};
    }
    read(j, "canny_sigma", c.canny_sigma);
    read(j, "min_contour_area", c.min_contour_area);
    read(j, "voxel_leaf", c.voxel_leaf);
    read(j, "sor_k", c.sor_k);
    read(j, "sor_alpha", c.sor_alpha);
    read(j, "mls_radius", c.mls_radius);
    read(j, "mls_order", c.mls_order);
    read(j, "don_small_radius", c.don_small_radius);
    read(j, "don_large_radius", c.don_large_radius);
    read(j, "don_threshold", c.don_threshold);
    read(j, "hdbscan_min_cluster_size", c.hdbscan_min_cluster_size);
    read(j, "hdbscan_min_samples", c.hdbscan_min_samples);
    read(j, "ransac_dist_thresh", c.ransac_dist_thresh);
    read(j, "ransac_max_iter", c.ransac_max_iter);
    read(j, "seed", c.seed);
    read(j, "min_object_size", c.min_object_size);
    read(j, "merge_angle_tol_deg", c.merge_angle_tol_deg);
    read(j, "merge_centroid_thresh", c.merge_centroid_thresh);
    read(j, "merge_perp_thresh", c.merge_perp_thresh);
    read(j, "mean_shift_bandwidth", c.mean_shift_bandwidth);
    if (j.contains("rgb_to_depth_homography") && !j.at("rgb_to_depth_homography").is_null()) {
      c.homography =
          Homography::from_row_major(j.at("rgb_to_depth_homography").get<std::array<double, 9>>());
    }
    if (j.contains("calibration_correspondences")) {
      for (const auto& row : j.at("calibration_correspondences")) {
        const auto v = row.get<std::array<double, 4>>();
        c.calibration_correspondences.push_back({{v[0], v[1]}, {v[2], v[3]}});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("config: ") + e.what());
  } catch (const Error& e) {
    invalid(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    invalid(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j{{"canny_sigma", c.canny_sigma},
                   {"voxel_leaf", c.voxel_leaf},
                   {"sor_k", c.sor_k},
                   {"sor_alpha", c.sor_alpha},
                   {"mls_order", c.mls_order},
                   {"don_threshold", c.don_threshold},
                   {"hdbscan_min_cluster_size", c.hdbscan_min_cluster_size},
                   {"hdbscan_min_samples", c.hdbscan_min_samples},
                   {"ransac_dist_thresh", c.ransac_dist_thresh},
                   {"ransac_max_iter", c.ransac_max_iter},
                   {"seed", c.seed},
                   {"min_object_size", c.min_object_size},
                   {"merge_angle_tol_deg", c.merge_angle_tol_deg},
                   {"merge_centroid_thresh", c.merge_centroid_thresh},
                   {"merge_perp_thresh", c.merge_perp_thresh},
                   {"mean_shift_bandwidth", c.mean_shift_bandwidth}};
  if (c.roi) j["roi"] = {c.roi->x, c.roi->y, c.roi->width, c.roi->height};
  if (c.min_contour_area) j["min_contour_area"] = *c.min_contour_area;
  if (c.mls_radius) j["mls_radius"] = *c.mls_radius;
  if (c.don_small_radius) j["don_small_radius"] = *c.don_small_radius;
  if (c.don_large_radius) j["don_large_radius"] = *c.don_large_radius;
  if (c.homography) j["rgb_to_depth_homography"] = c.homography->row_major();
  if (!c.calibration_correspondences.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& p : c.calibration_correspondences) {
      arr.push_back({p.rgb.x(), p.rgb.y(), p.depth.x(), p.depth.y()});
    }
    j["calibration_correspondences"] = arr;
  }
  return j;
}

}  // namespace binpick
