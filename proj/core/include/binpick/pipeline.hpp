#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "binpick/config.hpp"
#include "binpick/geometry.hpp"
#include "binpick/image.hpp"
#include "binpick/pose.hpp"
#include "binpick/segmentation.hpp"

namespace binpick {

/// Wall-clock seconds per stage; measured for computation only.
struct StageTiming {
  double mask_generation = 0.0;
  double filtering = 0.0;
  double resampling_don = 0.0;
  double clustering = 0.0;
  double plane_segmentation = 0.0;
  double pose_estimation = 0.0;
  double total = 0.0;
};

struct DetectionCounts {
  std::size_t contours = 0;
  std::size_t masks = 0;
  std::size_t skipped_masks = 0;  // no points, too few points, or no plane
  std::size_t clusters = 0;
  std::size_t planes = 0;
  std::size_t merges = 0;
};

struct DetectedBox {
  std::size_t contour_index = 0;
  Pose6DoF pose;
};

struct DetectionReport {
  std::vector<DetectedBox> detections;
  StageTiming timing;
  DetectionCounts counts;
};

struct SegmentationResult {
  PixelRect roi;
  std::vector<Contour> contours;  // refined, ROI coordinates
  std::vector<BinaryMask> masks;  // full-frame
};

/// ROI, smoothing, edges, contours, refinement and masks for one phase.
/// Parent masks have their already-picked descendants cut out.
SegmentationResult segment_image(const GrayImage& image, const PipelineConfig& config,
                                 MaskPhase phase);

/// Per-mask fusion through plane extraction; one pose per mask taken from
/// the plane with the most inliers. Masks that yield nothing are counted
/// as skipped.
DetectionReport localize(const std::vector<BinaryMask>& masks, const OrganizedCloud& cloud,
                         const PipelineConfig& config);

/// Throws Errc::config_invalid or Errc::calibration_missing before any work.
DetectionReport run_pipeline(const PipelineConfig& config, const GrayImage& image,
                             const OrganizedCloud& cloud, MaskPhase phase);

nlohmann::json to_json(const DetectionReport& report);
/// Poses only, for verification.
std::vector<Pose6DoF> poses_from_json(const nlohmann::json& j);

}  // namespace binpick
