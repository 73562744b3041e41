#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "binpick/fusion.hpp"
#include "binpick/geometry.hpp"
#include "binpick/image.hpp"
#include "binpick/segmentation.hpp"

namespace binpick {

// World frame: origin at the bin floor centre, +Z up, X along the bin length.
struct BinSpec {
  double length_mm = 600.0;  // along world X
  double width_mm = 400.0;   // along world Y
  double wall_height_mm = 150.0;
};

struct CameraSpec {
  double mount_height_mm = 1200.0;
  std::size_t depth_width = kDefaultDepthWidth;
  std::size_t depth_height = kDefaultDepthHeight;
  std::size_t rgb_width = 2048;
  std::size_t rgb_height = 1536;
  double fov_margin = 0.1;  // fraction of the bin footprint added around it
};

struct BoxSpec {
  Vec3 dimensions_mm{200.0, 150.0, 50.0};  // length, width, height
  RigidTransform pose;                     // box centre frame -> world, meters
  std::uint8_t face_intensity = 200;
  bool glossy = false;
  std::optional<std::size_t> on_top_of;
  bool allow_undersized = false;
};

struct SceneSpec {
  BinSpec bin;
  CameraSpec camera;
  std::vector<BoxSpec> boxes;
  double noise_sigma = 0.0;  // meters
  double glossy_noise_factor = 2.5;
  std::uint64_t seed = 0;
  std::uint8_t floor_intensity = 60;
};

struct PinholeCamera {
  std::size_t width = 0;
  std::size_t height = 0;
  double f = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  /// Ray direction with unit z in the sensor frame.
  Vec3 ray(double u, double v) const { return {(u - cx) / f, (v - cy) / f, 1.0}; }
  Eigen::Vector2d project(const Point3& p) const { return {f * p.x() / p.z() + cx, f * p.y() / p.z() + cy}; }
  Mat3 matrix() const;
};

struct GroundTruth {
  std::size_t box_index = 0;
  Point3 centroid_mm = Point3::Zero();  // top-face centre, sensor frame
  Vec3 normal = Vec3::UnitZ();          // top-face normal, sensor frame
  EulerZYX euler;
  double visibility = 0.0;
  MaskRole priority = MaskRole::parent;
};

inline constexpr int kFloorLabel = -1;
inline constexpr int kMissLabel = -2;

struct DepthRender {
  OrganizedCloud cloud;
  std::vector<int> labels;         // box index, kFloorLabel or kMissLabel
  std::vector<std::uint8_t> top;   // 1 where the hit is a box's top face
};

struct SyntheticFrame {
  GrayImage image;
  OrganizedCloud cloud;
  std::vector<GroundTruth> truth;
};

PinholeCamera depth_camera(const SceneSpec& scene);
PinholeCamera rgb_camera(const SceneSpec& scene);

/// Sensor pose in the world; the camera looks straight down at the bin.
RigidTransform world_from_sensor(const SceneSpec& scene);

/// Both cameras share one centre, so this maps RGB pixels onto depth pixels exactly.
Homography rgb_to_depth_homography(const SceneSpec& scene);

/// Floor-grid points projected into both cameras.
std::vector<PixelCorrespondence> synthetic_correspondences(const SceneSpec& scene,
                                                           std::size_t grid = 5);

/// Bounding rectangle of the projected bin floor in the RGB image.
PixelRect bin_roi(const SceneSpec& scene);

/// Throws Errc::invalid_argument for undersized boxes or boxes outside the bin.
void validate_scene(const SceneSpec& scene);

DepthRender render_depth_labelled(const SceneSpec& scene);
OrganizedCloud render_depth(const SceneSpec& scene);
GrayImage render_image(const SceneSpec& scene);

/// Gaussian noise along each point's viewing ray, keyed by pixel index so the
/// draw does not depend on iteration order.
OrganizedCloud add_depth_noise(const OrganizedCloud& cloud, double sigma, std::uint64_t seed);
OrganizedCloud add_depth_noise(const OrganizedCloud& cloud, const std::vector<double>& sigma,
                               std::uint64_t seed);

std::vector<GroundTruth> ground_truth(const SceneSpec& scene);

/// Image, noisy cloud (glossy faces get a larger sigma) and ground truth.
SyntheticFrame synthesize(const SceneSpec& scene);

SceneSpec scene_from_json(const nlohmann::json& j);
SceneSpec load_scene(const std::filesystem::path& path);
nlohmann::json to_json(const std::vector<GroundTruth>& truth);
std::vector<GroundTruth> truth_from_json(const nlohmann::json& j);

}  // namespace binpick
