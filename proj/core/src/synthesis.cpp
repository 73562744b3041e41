#include "binpick/synthesis.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include "binpick/error.hpp"
#include "binpick/pose.hpp"
#include "binpick/random.hpp"

namespace binpick {
namespace {

constexpr double kMinBoxDims[3] = {20.0, 50.0, 75.0};  // sorted ascending

struct BoxHit {
  double t = std::numeric_limits<double>::infinity();
  bool top = false;
};

// Precomputed box geometry for ray casting in the box's own frame.
struct BoxCaster {
  Mat3 box_from_world;
  Vec3 origin_box;  // sensor centre in box coordinates
  Vec3 half;

  BoxCaster(const BoxSpec& box, const Vec3& sensor_origin_world)
      : box_from_world(box.pose.rotation.transpose()),
        origin_box(box_from_world * (sensor_origin_world - box.pose.translation)),
        half(box.dimensions_mm * 0.0005) {}

  BoxHit cast(const Vec3& dir_world) const {
    const Vec3 d = box_from_world * dir_world;
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    int entry_axis = -1;
    bool entry_positive = false;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(d[k]) < 1e-15) {
        if (std::abs(origin_box[k]) > half[k]) return {};
        continue;
      }
      double t1 = (-half[k] - origin_box[k]) / d[k];
      double t2 = (half[k] - origin_box[k]) / d[k];
      if (t1 > t2) std::swap(t1, t2);
      if (t1 > t_near) {
        t_near = t1;
        entry_axis = k;
        entry_positive = d[k] < 0.0;
      }
      t_far = std::min(t_far, t2);
    }
    if (entry_axis < 0 || t_near > t_far || t_near <= 0.0) return {};
    return {t_near, entry_axis == 2 && entry_positive};
  }
};

double half_extent_z(const BoxSpec& box) {
  const Mat3& r = box.pose.rotation;
  double h = 0.0;
  for (int j = 0; j < 3; ++j) h += std::abs(r(2, j)) * box.dimensions_mm[j] * 0.0005;
  return h;
}

struct Caster {
  Vec3 origin_world;
  Mat3 world_from_sensor_rot;
  std::vector<BoxCaster> boxes;
  std::vector<std::size_t> box_ids;

  Caster(const SceneSpec& scene, const std::vector<std::size_t>& ids) : box_ids(ids) {
    const RigidTransform ws = world_from_sensor(scene);
    origin_world = ws.translation;
    world_from_sensor_rot = ws.rotation;
    for (std::size_t i : ids) boxes.emplace_back(scene.boxes[i], origin_world);
  }

  // Returns the nearest hit along sensor-frame ray d (with d.z = 1); t is
  // then the sensor-frame depth.
  void cast(const Vec3& d_sensor, double& t, int& label, bool& top) const {
    const Vec3 d = world_from_sensor_rot * d_sensor;
    t = std::numeric_limits<double>::infinity();
    label = kMissLabel;
    top = false;
    if (d.z() < 0.0) {
      t = -origin_world.z() / d.z();
      label = kFloorLabel;
    }
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const BoxHit h = boxes[b].cast(d);
      if (h.t < t) {
        t = h.t;
        label = static_cast<int>(box_ids[b]);
        top = h.top;
      }
    }
  }
};

std::vector<std::size_t> all_boxes(const SceneSpec& scene) {
  std::vector<std::size_t> ids(scene.boxes.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return ids;
}

DepthRender render_subset(const SceneSpec& scene, const std::vector<std::size_t>& ids) {
  const PinholeCamera cam = depth_camera(scene);
  const Caster caster(scene, ids);
  DepthRender out{OrganizedCloud(cam.width, cam.height),
                  std::vector<int>(cam.width * cam.height, kMissLabel),
                  std::vector<std::uint8_t>(cam.width * cam.height, 0)};
  for (std::size_t v = 0; v < cam.height; ++v) {
    for (std::size_t u = 0; u < cam.width; ++u) {
      const Vec3 d = cam.ray(static_cast<double>(u), static_cast<double>(v));
      double t = 0.0;
      int label = kMissLabel;
      bool top = false;
      caster.cast(d, t, label, top);
      const std::size_t i = out.cloud.index(u, v);
      out.labels[i] = label;
      if (label == kMissLabel) continue;
      out.cloud.points[i] = t * d;
      out.cloud.valid[i] = 1;
      out.top[i] = top ? 1 : 0;
    }
  }
  return out;
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                    const char* where) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw Error(Errc::input_format, std::string("unknown key '") + key + "' in " + where);
    }
  }
}

}  // namespace

Mat3 PinholeCamera::matrix() const {
  Mat3 k;
  k << f, 0.0, cx, 0.0, f, cy, 0.0, 0.0, 1.0;
  return k;
}

PinholeCamera depth_camera(const SceneSpec& scene) {
  const auto& c = scene.camera;
  const double h = c.mount_height_mm;
  const double m = 1.0 + c.fov_margin;
  const double fx = (static_cast<double>(c.depth_width) / 2.0) / (scene.bin.length_mm * m / 2.0 / h);
  const double fy = (static_cast<double>(c.depth_height) / 2.0) / (scene.bin.width_mm * m / 2.0 / h);
  return {c.depth_width, c.depth_height, std::min(fx, fy),
          (static_cast<double>(c.depth_width) - 1.0) / 2.0,
          (static_cast<double>(c.depth_height) - 1.0) / 2.0};
}

PinholeCamera rgb_camera(const SceneSpec& scene) {
  const auto& c = scene.camera;
  const PinholeCamera d = depth_camera(scene);
  return {c.rgb_width, c.rgb_height,
          d.f * static_cast<double>(c.rgb_width) / static_cast<double>(c.depth_width),
          (static_cast<double>(c.rgb_width) - 1.0) / 2.0,
          (static_cast<double>(c.rgb_height) - 1.0) / 2.0};
}

RigidTransform world_from_sensor(const SceneSpec& scene) {
  RigidTransform t;
  t.rotation = Vec3(1.0, -1.0, -1.0).asDiagonal();
  t.translation = Vec3(0.0, 0.0, scene.camera.mount_height_mm / 1000.0);
  return t;
}

Homography rgb_to_depth_homography(const SceneSpec& scene) {
  return Homography(depth_camera(scene).matrix() * rgb_camera(scene).matrix().inverse());
}

std::vector<PixelCorrespondence> synthetic_correspondences(const SceneSpec& scene,
                                                           std::size_t grid) {
  const PinholeCamera d = depth_camera(scene);
  const PinholeCamera r = rgb_camera(scene);
  const RigidTransform sw = world_from_sensor(scene).inverse();
  std::vector<PixelCorrespondence> out;
  const double n = static_cast<double>(std::max<std::size_t>(grid, 2) - 1);
  for (std::size_t i = 0; i < std::max<std::size_t>(grid, 2); ++i) {
    for (std::size_t j = 0; j < std::max<std::size_t>(grid, 2); ++j) {
      const double x = (static_cast<double>(i) / n - 0.5) * scene.bin.length_mm / 1000.0;
      const double y = (static_cast<double>(j) / n - 0.5) * scene.bin.width_mm / 1000.0;
      const Point3 p = apply_transform(sw, Point3(x, y, 0.0));
      out.push_back({r.project(p), d.project(p)});
    }
  }
  return out;
}

PixelRect bin_roi(const SceneSpec& scene) {
  const PinholeCamera r = rgb_camera(scene);
  const RigidTransform sw = world_from_sensor(scene).inverse();
  double u0 = std::numeric_limits<double>::infinity(), v0 = u0;
  double u1 = -u0, v1 = -u0;
  for (double sx : {-0.5, 0.5}) {
    for (double sy : {-0.5, 0.5}) {
      const Point3 p = apply_transform(
          sw, Point3(sx * scene.bin.length_mm / 1000.0, sy * scene.bin.width_mm / 1000.0, 0.0));
      const auto px = r.project(p);
      u0 = std::min(u0, px.x());
      u1 = std::max(u1, px.x());
      v0 = std::min(v0, px.y());
      v1 = std::max(v1, px.y());
    }
  }
  const auto clamp_to = [](double v, std::size_t hi) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(hi)));
  };
  const std::size_t x0 = clamp_to(std::floor(u0), r.width);
  const std::size_t y0 = clamp_to(std::floor(v0), r.height);
  const std::size_t x1 = clamp_to(std::ceil(u1) + 1.0, r.width);
  const std::size_t y1 = clamp_to(std::ceil(v1) + 1.0, r.height);
  return {x0, y0, x1 - x0, y1 - y0};
}

void validate_scene(const SceneSpec& scene) {
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    const BoxSpec& box = scene.boxes[i];
    std::array<double, 3> dims{box.dimensions_mm.x(), box.dimensions_mm.y(), box.dimensions_mm.z()};
    std::sort(dims.begin(), dims.end());
    if (dims[0] <= 0.0) throw Error(Errc::invalid_argument, "box dimensions must be positive");
    if (!box.allow_undersized) {
      for (int k = 0; k < 3; ++k) {
        if (dims[k] < kMinBoxDims[k]) {
          throw Error(Errc::invalid_argument,
                      "box " + std::to_string(i) + " is below the 50x75x20 mm minimum");
        }
      }
    }
    if (box.on_top_of && *box.on_top_of >= i) {
      throw Error(Errc::invalid_argument, "on_top_of must reference an earlier box");
    }
    const double hx = scene.bin.length_mm / 2000.0 + 1e-9;
    const double hy = scene.bin.width_mm / 2000.0 + 1e-9;
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 local((corner & 1 ? 0.5 : -0.5) * box.dimensions_mm.x() / 1000.0,
                       (corner & 2 ? 0.5 : -0.5) * box.dimensions_mm.y() / 1000.0,
                       (corner & 4 ? 0.5 : -0.5) * box.dimensions_mm.z() / 1000.0);
      const Point3 w = apply_transform(box.pose, local);
      if (std::abs(w.x()) > hx || std::abs(w.y()) > hy) {
        throw Error(Errc::invalid_argument,
                    "box " + std::to_string(i) + " extends outside the bin footprint");
      }
    }
  }
}

DepthRender render_depth_labelled(const SceneSpec& scene) {
  return render_subset(scene, all_boxes(scene));
}

OrganizedCloud render_depth(const SceneSpec& scene) { return render_depth_labelled(scene).cloud; }

GrayImage render_image(const SceneSpec& scene) {
  const PinholeCamera cam = rgb_camera(scene);
  GrayImage img(cam.width, cam.height, scene.floor_intensity);
  if (scene.boxes.empty()) return img;

  // Only top faces are drawn; side walls neither show nor occlude.
  const RigidTransform ws = world_from_sensor(scene);
  std::vector<BoxCaster> tops;
  for (const auto& box : scene.boxes) tops.emplace_back(box, ws.translation);
  for (std::size_t v = 0; v < cam.height; ++v) {
    for (std::size_t u = 0; u < cam.width; ++u) {
      const Vec3 d_world = ws.rotation * cam.ray(static_cast<double>(u), static_cast<double>(v));
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < tops.size(); ++b) {
        const BoxCaster& c = tops[b];
        if (c.origin_box.z() <= c.half.z()) continue;
        const Vec3 d = c.box_from_world * d_world;
        if (d.z() >= 0.0) continue;
        const double t = (c.half.z() - c.origin_box.z()) / d.z();
        const Vec3 q = c.origin_box + t * d;
        if (t > 0.0 && t < best && std::abs(q.x()) <= c.half.x() && std::abs(q.y()) <= c.half.y()) {
          best = t;
          img.pixels[v * cam.width + u] = scene.boxes[b].face_intensity;
        }
      }
    }
  }
  return img;
}

OrganizedCloud add_depth_noise(const OrganizedCloud& cloud, const std::vector<double>& sigma,
                               std::uint64_t seed) {
  if (sigma.size() != cloud.size()) {
    throw Error(Errc::invalid_argument, "one sigma per cloud point is required");
  }
  OrganizedCloud out = cloud;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (sigma[i] < 0.0) throw Error(Errc::invalid_argument, "sigma must be non-negative");
    if (!cloud.is_valid(i) || sigma[i] == 0.0) continue;
    const std::uint64_t key = derive_seed(seed, i);
    const double u1 = unit_interval(splitmix64(key));
    const double u2 = unit_interval(splitmix64(key + 1));
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    const Point3& p = cloud.points[i];
    const double len = p.norm();
    if (len == 0.0) continue;
    out.points[i] = p + (sigma[i] * z / len) * p;
  }
  return out;
}

OrganizedCloud add_depth_noise(const OrganizedCloud& cloud, double sigma, std::uint64_t seed) {
  return add_depth_noise(cloud, std::vector<double>(cloud.size(), sigma), seed);
}

std::vector<GroundTruth> ground_truth(const SceneSpec& scene) {
  const RigidTransform sw = world_from_sensor(scene).inverse();
  const DepthRender full = render_depth_labelled(scene);
  std::vector<GroundTruth> truth;
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    const BoxSpec& box = scene.boxes[i];
    GroundTruth g;
    g.box_index = i;
    const Point3 top_world =
        apply_transform(box.pose, Point3(0.0, 0.0, box.dimensions_mm.z() / 2000.0));
    g.centroid_mm = apply_transform(sw, top_world) * 1000.0;
    Vec3 n = sw.rotation * (box.pose.rotation * Vec3::UnitZ());
    g.normal = n.normalized();
    g.euler = euler_zyx_from_rotation(build_frame(g.normal));
    g.priority = box.on_top_of ? MaskRole::child : MaskRole::parent;

    const DepthRender alone = render_subset(scene, {i});
    std::size_t seen = 0;
    std::size_t possible = 0;
    for (std::size_t p = 0; p < full.labels.size(); ++p) {
      possible += alone.top[p];
      seen += full.top[p] && full.labels[p] == static_cast<int>(i);
    }
    g.visibility = possible == 0 ? 0.0 : static_cast<double>(seen) / static_cast<double>(possible);
    truth.push_back(g);
  }
  return truth;
}

SyntheticFrame synthesize(const SceneSpec& scene) {
  validate_scene(scene);
  const DepthRender depth = render_depth_labelled(scene);
  std::vector<double> sigma(depth.cloud.size(), scene.noise_sigma);
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const int label = depth.labels[i];
    if (label >= 0 && scene.boxes[static_cast<std::size_t>(label)].glossy) {
      sigma[i] *= scene.glossy_noise_factor;
    }
  }
  return {render_image(scene), add_depth_noise(depth.cloud, sigma, scene.seed),
          ground_truth(scene)};
}

SceneSpec scene_from_json(const nlohmann::json& j) {
  try {
    reject_unknown(j,
                   {"bin", "camera", "boxes", "noise_sigma", "glossy_noise_factor", "seed",
                    "floor_intensity"},
                   "scene");
    SceneSpec s;
    if (j.contains("bin")) {
      const auto& b = j.at("bin");
      reject_unknown(b, {"length_mm", "width_mm", "wall_height_mm"}, "bin");
      s.bin.length_mm = get_or(b, "length_mm", s.bin.length_mm);
      s.bin.width_mm = get_or(b, "width_mm", s.bin.width_mm);
      s.bin.wall_height_mm = get_or(b, "wall_height_mm", s.bin.wall_height_mm);
    }
    if (j.contains("camera")) {
      const auto& c = j.at("camera");
      reject_unknown(c, {"mount_height_mm", "depth_resolution", "rgb_resolution", "fov_margin"},
                     "camera");
      s.camera.mount_height_mm = get_or(c, "mount_height_mm", s.camera.mount_height_mm);
      s.camera.fov_margin = get_or(c, "fov_margin", s.camera.fov_margin);
      if (c.contains("depth_resolution")) {
        const auto r = c.at("depth_resolution").get<std::array<std::size_t, 2>>();
        s.camera.depth_width = r[0];
        s.camera.depth_height = r[1];
      }
      if (c.contains("rgb_resolution")) {
        const auto r = c.at("rgb_resolution").get<std::array<std::size_t, 2>>();
        s.camera.rgb_width = r[0];
        s.camera.rgb_height = r[1];
      }
    }
    s.noise_sigma = get_or(j, "noise_sigma", s.noise_sigma);
    s.glossy_noise_factor = get_or(j, "glossy_noise_factor", s.glossy_noise_factor);
    s.seed = get_or(j, "seed", s.seed);
    s.floor_intensity = get_or<std::uint8_t>(j, "floor_intensity", s.floor_intensity);
    if (s.noise_sigma < 0.0) throw Error(Errc::input_format, "noise_sigma must be non-negative");

    for (const auto& jb : get_or(j, "boxes", nlohmann::json::array())) {
      reject_unknown(jb,
                     {"size_mm", "center_mm", "euler_zyx_deg", "intensity", "glossy", "on_top_of",
                      "allow_undersized"},
                     "box");
      BoxSpec box;
      const auto size = jb.at("size_mm").get<std::array<double, 3>>();
      box.dimensions_mm = Vec3(size[0], size[1], size[2]);
      const auto e = get_or(jb, "euler_zyx_deg", std::array<double, 3>{0.0, 0.0, 0.0});
      box.pose.rotation = rotation_from_euler_zyx({e[0], e[1], e[2]});
      box.face_intensity = get_or<std::uint8_t>(jb, "intensity", box.face_intensity);
      box.glossy = get_or(jb, "glossy", false);
      box.allow_undersized = get_or(jb, "allow_undersized", false);
      if (jb.contains("on_top_of")) box.on_top_of = jb.at("on_top_of").get<std::size_t>();

      const auto center = jb.at("center_mm").get<std::vector<double>>();
      if (center.size() != 2 && center.size() != 3) {
        throw Error(Errc::input_format, "center_mm needs 2 or 3 values");
      }
      double z = half_extent_z(box);
      if (box.on_top_of) {
        if (*box.on_top_of >= s.boxes.size()) {
          throw Error(Errc::input_format, "on_top_of must reference an earlier box");
        }
        const BoxSpec& base = s.boxes[*box.on_top_of];
        z += base.pose.translation.z() + half_extent_z(base);
      }
      if (center.size() == 3) z = center[2] / 1000.0;
      box.pose.translation = Vec3(center[0] / 1000.0, center[1] / 1000.0, z);
      s.boxes.push_back(box);
    }
    validate_scene(s);
    return s;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::input_format, std::string("scene JSON: ") + ex.what());
  } catch (const Error& ex) {
    if (ex.code() == Errc::invalid_argument) throw Error(Errc::input_format, ex.what());
    throw;
  }
}

SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::input_format, "cannot open scene file " + path.string());
  try {
    return scene_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(Errc::input_format, std::string("scene JSON: ") + ex.what());
  }
}

nlohmann::json to_json(const std::vector<GroundTruth>& truth) {
  auto arr = nlohmann::json::array();
  for (const auto& g : truth) {
    arr.push_back({{"id", g.box_index},
                   {"priority", to_string(g.priority)},
                   {"centroid_mm", {g.centroid_mm.x(), g.centroid_mm.y(), g.centroid_mm.z()}},
                   {"normal", {g.normal.x(), g.normal.y(), g.normal.z()}},
                   {"euler_zyx_deg", {g.euler.theta1, g.euler.theta2, g.euler.theta3}},
                   {"visibility", g.visibility}});
  }
  return {{"boxes", arr}};
}

std::vector<GroundTruth> truth_from_json(const nlohmann::json& j) {
  try {
    std::vector<GroundTruth> out;
    for (const auto& b : j.at("boxes")) {
      GroundTruth g;
      g.box_index = b.at("id").get<std::size_t>();
      const auto prio = b.at("priority").get<std::string>();
      if (prio != "child" && prio != "parent") throw Error(Errc::input_format, "bad priority");
      g.priority = prio == "child" ? MaskRole::child : MaskRole::parent;
      const auto c = b.at("centroid_mm").get<std::array<double, 3>>();
      g.centroid_mm = Point3(c[0], c[1], c[2]);
      const auto n = b.at("normal").get<std::array<double, 3>>();
      g.normal = Vec3(n[0], n[1], n[2]);
      const auto e = b.at("euler_zyx_deg").get<std::array<double, 3>>();
      g.euler = {e[0], e[1], e[2]};
      g.visibility = b.value("visibility", 1.0);
      out.push_back(g);
    }
    return out;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::input_format, std::string("truth JSON: ") + ex.what());
  }
}

}  // namespace binpick
