// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "binpick/clustering.hpp"
#include "binpick/conditioning.hpp"
#include "binpick/geometry.hpp"
#include "binpick/neighbor_index.hpp"
#include "binpick/pipeline.hpp"
#include "binpick/planes.hpp"
#include "binpick/pose.hpp"
#include "binpick/segmentation.hpp"
#include "binpick/synthesis.hpp"
#include "binpick/verify.hpp"
#include "oracles.hpp"

using namespace binpick;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string scene_path(const std::string& name) {
  return std::string(BINPICK_SCENE_DIR) + "/" + name + ".json";
}

const std::vector<std::string> kOrientationScenes{
    "orient_1_parallel",    "orient_2_pos_x",       "orient_3_neg_x",
    "orient_4_pos_y",       "orient_5_neg_y",       "orient_6_pos_x_pos_y",
    "orient_7_neg_x_pos_y", "orient_8_pos_x_neg_y", "orient_9_neg_x_neg_y"};

PipelineConfig config_for(const SceneSpec& scene, std::uint64_t seed) {
  PipelineConfig c;
  c.homography = rgb_to_depth_homography(scene);
  c.roi = bin_roi(scene);
  c.seed = seed;
  return c;
}

struct PhaseRun {
  DetectionReport child;
  DetectionReport parent;

  std::vector<Pose6DoF> poses() const {
    std::vector<Pose6DoF> out;
    for (const auto* r : {&child, &parent}) {
      for (const auto& d : r->detections) out.push_back(d.pose);
    }
    return out;
  }
};

PhaseRun run_both(const PipelineConfig& c, const GrayImage& image, const OrganizedCloud& cloud) {
  return {run_pipeline(c, image, cloud, MaskPhase::child_first),
          run_pipeline(c, image, cloud, MaskPhase::parent_after)};
}

struct ErrorAccumulator {
  Vec3 trans = Vec3::Zero();
  Vec3 rot = Vec3::Zero();
  std::size_t n = 0;

  void add(const ErrorTable& t) {
    for (const auto& m : t.matches) {
      trans += m.trans_err_mm;
      rot += m.rot_err_deg;
      ++n;
    }
  }
  Vec3 mean_trans() const { return n ? Vec3(trans / static_cast<double>(n)) : Vec3::Zero(); }
  Vec3 mean_rot() const { return n ? Vec3(rot / static_cast<double>(n)) : Vec3::Zero(); }
};

Outcome criterion1() {
  const auto start = Clock::now();
  double worst_t = 0.0, worst_r = 0.0;
  std::size_t misses = 0, extra = 0;
  std::string worst_scene;
  for (const auto& name : kOrientationScenes) {
    SceneSpec scene = load_scene(scene_path(name));
    scene.noise_sigma = 0.0;
    const SyntheticFrame f = synthesize(scene);
    const auto table = verify_against_ground_truth(
        run_both(config_for(scene, 0), f.image, f.cloud).poses(), f.truth);
    misses += table.misses();
    extra += table.unmatched_poses;
    for (const auto& m : table.matches) {
      if (m.trans_err_mm.maxCoeff() > worst_t || m.rot_err_deg.maxCoeff() > worst_r) worst_scene = name;
      worst_t = std::max(worst_t, m.trans_err_mm.maxCoeff());
      worst_r = std::max(worst_r, m.rot_err_deg.maxCoeff());
    }
  }
  const double elapsed = seconds_since(start);
  const bool pass = misses == 0 && extra == 0 && worst_t <= 1.0 && worst_r <= 0.5 && elapsed < 10.0;
  return {pass, fmt("9 scenes, worst axis error %.3f mm / %.3f deg (%s), misses %zu, extra %zu, %.2f s",
                    worst_t, worst_r, worst_scene.c_str(), misses, extra, elapsed)};
}

Outcome criterion2() {
  ErrorAccumulator acc;
  std::size_t misses = 0, runs = 0;
  for (const auto& name : kOrientationScenes) {
    SceneSpec scene = load_scene(scene_path(name));
    scene.noise_sigma = 0.0;
    const SyntheticFrame f = synthesize(scene);
    const OrganizedCloud clean = render_depth(scene);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const OrganizedCloud cloud = add_depth_noise(clean, 0.002, seed);
      const auto table = verify_against_ground_truth(
          run_both(config_for(scene, seed), f.image, cloud).poses(), f.truth);
      misses += table.misses();
      acc.add(table);
      ++runs;
    }
  }
  const Vec3 t = acc.mean_trans(), r = acc.mean_rot();
  const bool pass = misses == 0 && t.maxCoeff() <= 5.0 && r.maxCoeff() <= 4.0;
  return {pass, fmt("%zu runs, mean trans %.2f %.2f %.2f mm, mean rot %.2f %.2f %.2f deg, misses %zu "
                    "(rig reference 3.03 3.27 3.3 mm, 2.95 3.26 deg)",
                    runs, t.x(), t.y(), t.z(), r.x(), r.y(), r.z(), misses)};
}

Outcome criterion3() {
  SceneSpec scene = load_scene(scene_path("adjacent"));
  scene.noise_sigma = 0.0;
  const SyntheticFrame f = synthesize(scene);
  const OrganizedCloud clean = render_depth(scene);
  const auto c0 = config_for(scene, 0);
  const auto child_masks = segment_image(f.image, c0, MaskPhase::child_first).masks.size();
  const auto parent_masks = segment_image(f.image, c0, MaskPhase::parent_after).masks.size();

  ErrorAccumulator acc;
  bool all_ok = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const OrganizedCloud cloud = add_depth_noise(clean, 0.002, seed);
    const auto poses = run_both(config_for(scene, seed), f.image, cloud).poses();
    const auto table = verify_against_ground_truth(poses, f.truth);
    const bool distinct =
        poses.size() == 2 && distance(poses[0].centroid_mm, poses[1].centroid_mm) > kDefaultMatchRadiusMm;
    all_ok = all_ok && distinct && table.matches.size() == 2;
    acc.add(table);
  }
  const Vec3 t = acc.mean_trans(), r = acc.mean_rot();
  const bool pass = child_masks + parent_masks == 2 && all_ok && t.maxCoeff() <= 5.0 && r.maxCoeff() <= 4.0;
  return {pass, fmt("masks child/parent %zu/%zu, two distinct matched poses in all 20 seeds: %s, "
                    "mean trans %.2f %.2f %.2f mm, rot %.2f %.2f %.2f deg",
                    child_masks, parent_masks, all_ok ? "yes" : "no", t.x(), t.y(), t.z(), r.x(), r.y(), r.z())};
}

Outcome criterion4() {
  SceneSpec scene = load_scene(scene_path("stacked"));
  const OrganizedCloud clean = render_depth(scene);
  scene.noise_sigma = 0.0;
  const SyntheticFrame f = synthesize(scene);
  const std::size_t child_idx = f.truth[0].priority == MaskRole::child ? 0 : 1;
  const std::size_t parent_idx = 1 - child_idx;

  bool pass = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed <= 5; ++seed) {
    const OrganizedCloud cloud = seed == 0 ? clean : add_depth_noise(clean, 0.002, seed);
    const PhaseRun run = run_both(config_for(scene, seed), f.image, cloud);
    const auto child_table = verify_against_ground_truth(
        {run.child.detections.size() == 1 ? run.child.detections[0].pose : Pose6DoF{}}, {f.truth[child_idx]});
    const auto parent_table = verify_against_ground_truth(
        {run.parent.detections.size() == 1 ? run.parent.detections[0].pose : Pose6DoF{}}, {f.truth[parent_idx]});
    const bool ok = run.child.detections.size() == 1 && child_table.matches.size() == 1 &&
                    run.parent.detections.size() == 1 && parent_table.matches.size() == 1 &&
                    run.child.detections[0].pose.centroid_mm.z() < run.parent.detections[0].pose.centroid_mm.z();
    if (!ok || seed == 0) {
      detail += fmt("seed %llu: child poses %zu, parent poses %zu%s; ", static_cast<unsigned long long>(seed),
                    run.child.detections.size(), run.parent.detections.size(), ok ? "" : " FAILED");
    }
    pass = pass && ok;
  }
  return {pass, detail + "child z < parent z checked per seed"};
}

Outcome criterion5() {
  const SceneSpec scene = load_scene(scene_path("cluttered"));
  const SyntheticFrame f = synthesize(scene);
  const PhaseRun run = run_both(config_for(scene, scene.seed), f.image, f.cloud);
  const auto poses = run.poses();
  const auto table = verify_against_ground_truth(poses, f.truth);

  std::size_t close_pairs = 0, same_surface = 0;
  const double min_dot = std::cos(deg2rad(5.0));
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t j = i + 1; j < poses.size(); ++j) {
      const double d = distance(poses[i].centroid_mm, poses[j].centroid_mm);
      close_pairs += d < kDefaultMatchRadiusMm;
      const double dot = std::abs(poses[i].plane.normal().dot(poses[j].plane.normal()));
      const double perp = std::abs(plane_signed_distance(poses[i].plane, poses[j].centroid_mm / 1000.0));
      same_surface += dot >= min_dot && d < 50.0 && perp < 0.005;
    }
  }
  std::set<std::size_t> ids;
  for (const auto* r : {&run.child, &run.parent}) {
    for (const auto& d : r->detections) ids.insert(d.contour_index);
  }
  const bool unique_ids = ids.size() == poses.size();
  const bool pass = table.matches.size() >= 5 && close_pairs == 0 && same_surface == 0 && unique_ids;
  return {pass, fmt("%zu/6 boxes matched, %zu poses (child %zu, parent %zu), duplicate pairs %zu, "
                    "same-surface pairs %zu, contour ids unique: %s",
                    table.matches.size(), poses.size(), run.child.detections.size(),
                    run.parent.detections.size(), close_pairs, same_surface, unique_ids ? "yes" : "no")};
}

Outcome criterion6() {
  const SceneSpec scene = load_scene(scene_path("four_boxes"));
  const SyntheticFrame f = synthesize(scene);
  const auto config = config_for(scene, scene.seed);
  const auto start = Clock::now();
  const PhaseRun run = run_both(config, f.image, f.cloud);
  const double wall = seconds_since(start);

  const auto j = to_json(run.parent);
  bool keys = true;
  for (const char* k : {"mask_generation", "filtering", "resampling_don", "clustering", "plane_segmentation",
                        "pose_estimation", "total"}) {
    keys = keys && j.at("timing_s").contains(k) && j.at("timing_s").at(k).get<double>() >= 0.0;
  }
  const std::size_t found = run.child.detections.size() + run.parent.detections.size();
  const bool pass = f.cloud.width * f.cloud.height == 224 * 172 && wall <= 2.0 && keys && found == 4;
  return {pass, fmt("%zu poses, both phases %.3f s wall (parent-phase total %.3f s; rig reference 0.901 s), "
                    "seven timing keys: %s",
                    found, wall, run.parent.timing.total, keys ? "yes" : "no")};
}

Outcome criterion7() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> n_mst(40, 300), n_knn(1, 200);

  std::size_t mst_equal = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = oracle::random_cloud(rng, n_mst(rng));
    const std::size_t k = 5;
    const auto core = core_distances(pts, k);
    auto mst = mutual_reachability_mst(pts, core);
    std::vector<double> w;
    for (const auto& e : mst) w.push_back(e.weight);
    std::sort(w.begin(), w.end());
    mst_equal += w == oracle::mst_weights(pts, oracle::core_distances(pts, k));
  }

  std::size_t ransac_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_real_distribution<double> u(-0.15, 0.15);
    std::vector<Point3> pts;
    for (int i = 0; i < 70; ++i) pts.emplace_back(u(rng), u(rng), 0.5);
    for (int i = 0; i < 30; ++i) pts.emplace_back(u(rng), u(rng), 0.5 + u(rng));
    std::shuffle(pts.begin(), pts.end(), rng);
    std::vector<std::size_t> sub(pts.size());
    std::iota(sub.begin(), sub.end(), 0);
    std::shuffle(sub.begin(), sub.end(), rng);
    sub.resize(20);
    const auto fit = ransac_plane(pts, 0.002, 200, static_cast<std::uint64_t>(trial));
    ransac_ok += fit.inliers.size() >= oracle::exhaustive_plane_inliers(pts, sub, 0.002);
  }

  std::size_t knn_equal = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto pts = oracle::random_cloud(rng, n_knn(rng));
    if (trial % 4 == 0) {
      for (auto& p : pts) p = (p * 4.0).array().round() / 4.0;  // lattice: many ties
    }
    const NeighborIndex index(pts);
    bool same = true;
    for (int q = 0; q < 20 && same; ++q) {
      const Point3 query = oracle::random_cloud(rng, 1)[0];
      const std::size_t k = 1 + static_cast<std::size_t>(q) % 12;
      const auto got = index.knn(query, k);
      const auto want = oracle::knn(pts, query, k);
      same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i) {
        same = got[i].index == want[i].index && got[i].squared_distance == want[i].squared_distance;
      }
    }
    knn_equal += same;
  }
  const bool pass = mst_equal == 100 && ransac_ok >= 95 && knn_equal == 100;
  return {pass, fmt("MST weight exact %zu/100, RANSAC >= exhaustive oracle %zu/100, kNN exact %zu/100",
                    mst_equal, ransac_ok, knn_equal)};
}

Outcome criterion8() {
  const auto start = Clock::now();
  std::mt19937_64 rng(77);
  std::vector<std::string> failures;

  double euler_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = oracle::random_rotation(rng);
    const Mat3 back = rotation_from_euler_zyx(euler_zyx_from_rotation(r));
    euler_err = std::max(euler_err, (back - r).cwiseAbs().maxCoeff());
  }
  for (double t2 : {90.0, -90.0}) {
    for (double t1 : {-170.0, -30.0, 0.0, 45.0, 180.0}) {
      for (double t3 : {-60.0, 0.0, 25.0}) {
        const Mat3 r = rotation_from_euler_zyx({t1, t2, t3});
        const EulerZYX e = euler_zyx_from_rotation(r);
        euler_err = std::max(euler_err, (rotation_from_euler_zyx(e) - r).cwiseAbs().maxCoeff());
        if (e.theta3 != 0.0 || std::abs(e.theta2 - t2) > 1e-9) failures.push_back("gimbal convention");
      }
    }
  }
  if (euler_err > 1e-9) failures.push_back(fmt("euler roundtrip %.2e", euler_err));

  std::normal_distribution<double> g;
  double don_min = 1.0, don_max = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Vec3 a = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 b = Vec3(g(rng), g(rng), g(rng)).normalized();
    const double n = don_vector(a, b).norm();
    don_min = std::min(don_min, n);
    don_max = std::max(don_max, n);
  }
  if (don_min < 0.0 || don_max > 1.0) failures.push_back("DoN norm out of [0,1]");

  double plane_err = 0.0, frame_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const PlaneModel p = normalize_plane(g(rng), g(rng), g(rng), g(rng));
    const PlaneModel q = normalize_plane(p.a, p.b, p.c, p.d);
    plane_err = std::max({plane_err, std::abs(p.a - q.a), std::abs(p.b - q.b), std::abs(p.c - q.c),
                          std::abs(p.d - q.d), std::abs(p.normal().norm() - 1.0)});
    if (p.d < 0.0) failures.push_back("plane orientation");
    const Mat3 f = build_frame(p.normal());
    frame_err = std::max({frame_err, (f.transpose() * f - Mat3::Identity()).cwiseAbs().maxCoeff(),
                          std::abs(f.determinant() - 1.0), (f.col(2) - p.normal()).cwiseAbs().maxCoeff()});
  }
  if (plane_err > 1e-12) failures.push_back(fmt("normalize_plane idempotence %.2e", plane_err));
  if (frame_err > 1e-9) failures.push_back(fmt("frame orthonormality %.2e", frame_err));

  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = oracle::random_cloud(rng, 2000, 0.2);
    const double leaf = 0.01 + 0.002 * trial;
    const auto vox = voxel_grid_downsample(pts, leaf);
    std::set<std::array<long, 3>> cells;
    for (const auto& p : pts) {
      cells.insert({static_cast<long>(std::floor(p.x() / leaf)), static_cast<long>(std::floor(p.y() / leaf)),
                    static_cast<long>(std::floor(p.z() / leaf))});
    }
    bool cell_ok = vox.size() == cells.size();
    for (const auto& v : vox) {
      cell_ok = cell_ok && cells.count({static_cast<long>(std::floor(v.x() / leaf)),
                                        static_cast<long>(std::floor(v.y() / leaf)),
                                        static_cast<long>(std::floor(v.z() / leaf))});
    }
    if (!cell_ok) failures.push_back("voxel: one centroid per occupied cell");

    const auto sor = statistical_outlier_removal_detailed(pts, 8, 1.0);
    std::size_t expected = 0;
    for (double m : sor.mean_distances) expected += m <= sor.threshold;
    if (sor.points.size() != expected || sor.points.size() > pts.size()) failures.push_back("SOR kept count");
  }

  // Mask invariants on a synthetic stacked scene.
  const SceneSpec stacked = load_scene(scene_path("stacked"));
  const GrayImage image = render_image(stacked);
  PipelineConfig c = config_for(stacked, 0);
  const auto child = generate_masks(segment_image(image, c, MaskPhase::child_first).contours,
                                    MaskPhase::child_first, c.roi->width, c.roi->height);
  const auto seg = segment_image(image, c, MaskPhase::parent_after);
  const auto parent = generate_masks(seg.contours, MaskPhase::parent_after, c.roi->width, c.roi->height);
  std::set<std::size_t> covered;
  for (const auto* set : {&child, &parent}) {
    for (const auto& m : *set) {
      if (!covered.insert(m.contour_index).second) failures.push_back("mask phases overlap");
      const auto fill = fill_contour(seg.contours[m.contour_index], m.width, m.height);
      if (fill != m.bits) failures.push_back("mask differs from contour fill");
    }
  }
  if (covered.size() != seg.contours.size()) failures.push_back("mask phases miss a contour");

  const double elapsed = seconds_since(start);
  if (elapsed > 60.0) failures.push_back("over 60 s");
  std::string detail = fmt("euler max err %.1e, DoN norm in [%.3f, %.3f], plane %.1e, frame %.1e, %.2f s",
                           euler_err, don_min, don_max, plane_err, frame_err, elapsed);
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"noiseless recovery", criterion1},   {"noisy accuracy", criterion2},
      {"adjacent boxes", criterion3},       {"stacked boxes", criterion4},
      {"cluttered bin", criterion5},        {"timing", criterion6},
      {"oracle equivalences", criterion7},  {"numerical properties", criterion8}};

  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
