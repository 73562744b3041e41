#include "binpick/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <optional>
#include <string>

#include "binpick/clustering.hpp"
#include "binpick/conditioning.hpp"
#include "binpick/error.hpp"
#include "binpick/fusion.hpp"
#include "binpick/planes.hpp"

namespace binpick {
namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
 public:
  explicit Stopwatch(double& sink) : sink_(sink), start_(Clock::now()) {}
  ~Stopwatch() { sink_ += std::chrono::duration<double>(Clock::now() - start_).count(); }
  Stopwatch(const Stopwatch&) = delete;
  Stopwatch& operator=(const Stopwatch&) = delete;

 private:
  double& sink_;
  Clock::time_point start_;
};

bool is_descendant(const std::vector<Contour>& contours, std::size_t node, std::size_t ancestor) {
  auto p = contours[node].parent_index;
  while (p) {
    if (*p == ancestor) return true;
    p = contours[*p].parent_index;
  }
  return false;
}

std::optional<SegmentedPlane> dominant_plane(std::vector<Point3> points,
                                             const PipelineConfig& config,
                                             DetectionReport& report) {
  {
    Stopwatch sw(report.timing.filtering);
    points = voxel_grid_downsample(points, config.voxel_leaf);
    if (points.size() <= config.sor_k) return std::nullopt;
    points = statistical_outlier_removal(points, config.sor_k, config.sor_alpha);
  }
  {
    Stopwatch sw(report.timing.resampling_don);
    points = mls_resample(points, config.effective_mls_radius(), config.mls_order);
    points = don_filter(points, config.effective_don_small_radius(),
                        config.effective_don_large_radius(), config.don_threshold);
  }
  ClusterLabels labels;
  {
    Stopwatch sw(report.timing.clustering);
    labels = hdbscan(points, config.hdbscan_min_cluster_size, config.hdbscan_min_samples);
    report.counts.clusters += static_cast<std::size_t>(labels.cluster_count);
  }

  Stopwatch sw(report.timing.plane_segmentation);
  const PlaneExtractionParams params{config.ransac_dist_thresh, config.ransac_max_iter,
                                     config.seed, config.hdbscan_min_cluster_size,
                                     config.min_object_size, 10};
  std::vector<SegmentedPlane> planes;
  const auto members = labels.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    std::vector<Point3> cluster;
    cluster.reserve(members[c].size());
    for (std::size_t i : members[c]) cluster.push_back(points[i]);
    auto found = extract_planes_iterative(cluster, params, static_cast<int>(c));
    planes.insert(planes.end(), std::make_move_iterator(found.begin()),
                  std::make_move_iterator(found.end()));
  }
  const auto merged = group_and_merge_planes(
      planes, {config.merge_angle_tol_deg, config.merge_centroid_thresh, config.merge_perp_thresh});
  report.counts.planes += merged.size();
  report.counts.merges += planes.size() - merged.size();
  if (merged.empty()) return std::nullopt;
  return *std::max_element(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
    return a.points.size() < b.points.size();
  });
}

}  // namespace

SegmentationResult segment_image(const GrayImage& image, const PipelineConfig& config,
                                 MaskPhase phase) {
  SegmentationResult out;
  out.roi = config.roi.value_or(PixelRect{0, 0, image.width, image.height});
  const GrayImage roi = extract_roi(image, out.roi);
  const EdgeMap edges = auto_canny(gaussian_smooth_3x3(roi), config.canny_sigma);
  const double min_area =
      config.min_contour_area.value_or(scaled_min_contour_area(image.width * image.height));
  out.contours = refine_contours(find_contours(edges), min_area);

  for (const auto& m : generate_masks(out.contours, phase, roi.width, roi.height)) {
    BinaryMask local = m;
    if (phase == MaskPhase::parent_after) {
      for (std::size_t d = 0; d < out.contours.size(); ++d) {
        if (!is_descendant(out.contours, d, m.contour_index)) continue;
        const auto hole = fill_contour(out.contours[d], roi.width, roi.height);
        for (std::size_t i = 0; i < hole.size(); ++i) {
          if (hole[i]) local.bits[i] = 0;
        }
      }
    }
    out.masks.push_back(embed_mask(local, out.roi, image.width, image.height));
  }
  return out;
}

DetectionReport localize(const std::vector<BinaryMask>& masks, const OrganizedCloud& cloud,
                         const PipelineConfig& config) {
  const Homography h = config.resolve_homography();
  const auto intrinsics = estimate_cloud_intrinsics(cloud);
  DetectionReport report;
  report.counts.masks = masks.size();
  const auto start = Clock::now();

  for (const auto& mask : masks) {
    std::optional<SegmentedPlane> plane;
    try {
      plane = dominant_plane(map_mask_to_cloud(mask, h, cloud).points, config, report);
    } catch (const Error& e) {
      if (e.code() != Errc::empty_cluster && e.code() != Errc::too_few_points) throw;
    }
    if (!plane) {
      ++report.counts.skipped_masks;
      continue;
    }
    Stopwatch sw(report.timing.pose_estimation);
    Pose6DoF pose = estimate_pose(*plane, mask.role, config.mean_shift_bandwidth);
    if (intrinsics) {
      // Centroid from the mask back-projected onto the fitted plane.
      const FaceSamples face = project_mask_onto_plane(fill_mask_holes(mask), h, cloud, *intrinsics, plane->model,
                                                       config.ransac_dist_thresh);
      if (!face.points.empty()) {
        pose.centroid_mm =
            mean_shift_centroid(face.points, face.weights, config.mean_shift_bandwidth) * 1000.0;
      }
    }
    report.detections.push_back({mask.contour_index, pose});
  }
  report.timing.total = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

DetectionReport run_pipeline(const PipelineConfig& config, const GrayImage& image,
                             const OrganizedCloud& cloud, MaskPhase phase) {
  config.validate();
  config.resolve_homography();
  if (config.roi && (config.roi->x + config.roi->width > image.width ||
                     config.roi->y + config.roi->height > image.height)) {
    throw Error(Errc::config_invalid, "roi exceeds the image");
  }

  const auto start = Clock::now();
  SegmentationResult seg;
  double mask_time = 0.0;
  {
    Stopwatch sw(mask_time);
    seg = segment_image(image, config, phase);
  }
  DetectionReport report = localize(seg.masks, cloud, config);
  report.counts.contours = seg.contours.size();
  report.timing.mask_generation = mask_time;
  report.timing.total = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

nlohmann::json to_json(const DetectionReport& report) {
  auto poses = nlohmann::json::array();
  for (const auto& d : report.detections) {
    const auto& p = d.pose;
    poses.push_back({{"id", d.contour_index},
                     {"priority", to_string(p.priority)},
                     {"centroid_mm", {p.centroid_mm.x(), p.centroid_mm.y(), p.centroid_mm.z()}},
                     {"euler_zyx_deg", {p.euler.theta1, p.euler.theta2, p.euler.theta3}},
                     {"plane", {p.plane.a, p.plane.b, p.plane.c, p.plane.d}},
                     {"inliers", p.inlier_count}});
  }
  const auto& t = report.timing;
  const auto& c = report.counts;
  return {{"poses", poses},
          {"timing_s",
           {{"mask_generation", t.mask_generation},
            {"filtering", t.filtering},
            {"resampling_don", t.resampling_don},
            {"clustering", t.clustering},
            {"plane_segmentation", t.plane_segmentation},
            {"pose_estimation", t.pose_estimation},
            {"total", t.total}}},
          {"timing_scope", "computation_only"},
          {"counts",
           {{"contours", c.contours},
            {"masks", c.masks},
            {"skipped_masks", c.skipped_masks},
            {"clusters", c.clusters},
            {"planes", c.planes},
            {"merges", c.merges}}}};
}

std::vector<Pose6DoF> poses_from_json(const nlohmann::json& j) {
  try {
    std::vector<Pose6DoF> out;
    for (const auto& jp : j.at("poses")) {
      Pose6DoF p;
      const auto prio = jp.at("priority").get<std::string>();
      if (prio != "child" && prio != "parent") throw Error(Errc::input_format, "bad priority");
      p.priority = prio == "child" ? MaskRole::child : MaskRole::parent;
      const auto c = jp.at("centroid_mm").get<std::array<double, 3>>();
      p.centroid_mm = Point3(c[0], c[1], c[2]);
      const auto e = jp.at("euler_zyx_deg").get<std::array<double, 3>>();
      p.euler = {e[0], e[1], e[2]};
      const auto pl = jp.at("plane").get<std::array<double, 4>>();
      p.plane = {pl[0], pl[1], pl[2], pl[3]};
      p.inlier_count = jp.at("inliers").get<std::size_t>();
      out.push_back(p);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::input_format, std::string("report JSON: ") + e.what());
  }
}

}  // namespace binpick
