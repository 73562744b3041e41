// binpick: synthetic scenes, segmentation, localization and verification.
//
// Exit codes: 0 success (zero detections included), 2 input error,
// 3 configuration error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "binpick/cloud_io.hpp"
#include "binpick/config.hpp"
#include "binpick/error.hpp"
#include "binpick/pipeline.hpp"
#include "binpick/synthesis.hpp"
#include "binpick/verify.hpp"

namespace fs = std::filesystem;
using namespace binpick;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::input_format, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::input_format, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(Errc::input_format, "cannot write " + path.string());
  out << std::setw(2) << j << '\n';
}

MaskPhase parse_phase(const std::string& s) {
  return s == "child" ? MaskPhase::child_first : MaskPhase::parent_after;
}

PipelineConfig load_with_seed(const fs::path& path, std::optional<std::uint64_t> seed) {
  PipelineConfig c = load_config(path);
  if (seed) c.seed = *seed;
  return c;
}

struct Args {
  std::string scene, image, cloud, masks, report, truth, config, out;
  std::string phase = "child";
  std::optional<std::uint64_t> seed;
  double match_radius = kDefaultMatchRadiusMm;
};

int cmd_synth(const Args& a) {
  SceneSpec scene = load_scene(a.scene);
  if (a.seed) scene.seed = *a.seed;
  const SyntheticFrame frame = synthesize(scene);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  write_pgm(dir / "image.pgm", frame.image);
  write_ply(dir / "cloud.ply", frame.cloud);
  write_json(dir / "truth.json", to_json(frame.truth));

  PipelineConfig config;
  config.homography = rgb_to_depth_homography(scene);
  config.roi = bin_roi(scene);
  config.seed = scene.seed;
  write_json(dir / "config.json", to_json(config));
  std::cout << "wrote " << frame.truth.size() << " boxes to " << dir.string() << '\n';
  return 0;
}

int cmd_segment(const Args& a) {
  const PipelineConfig config = load_with_seed(a.config, a.seed);
  const GrayImage image = read_pnm(a.image);
  const SegmentationResult seg = segment_image(image, config, parse_phase(a.phase));
  const fs::path dir = a.out;
  fs::create_directories(dir);
  auto list = nlohmann::json::array();
  for (std::size_t i = 0; i < seg.masks.size(); ++i) {
    const auto& m = seg.masks[i];
    const std::string name = "mask_" + std::to_string(i) + ".pgm";
    write_pgm(dir / name, m.to_image());
    list.push_back({{"file", name}, {"contour", m.contour_index}, {"role", to_string(m.role)}});
  }
  write_json(dir / "masks.json", {{"contours", seg.contours.size()}, {"masks", list}});
  std::cout << seg.contours.size() << " contours, " << seg.masks.size() << " masks\n";
  return 0;
}

int cmd_localize(const Args& a) {
  const PipelineConfig config = load_with_seed(a.config, a.seed);
  config.resolve_homography();
  const OrganizedCloud cloud = read_ply(a.cloud);
  const fs::path manifest = a.masks;
  const nlohmann::json j = read_json(manifest);
  std::vector<BinaryMask> masks;
  try {
    for (const auto& jm : j.at("masks")) {
      const std::string role = jm.at("role").get<std::string>();
      BinaryMask m = BinaryMask::from_image(read_pnm(manifest.parent_path() / jm.at("file").get<std::string>()),
                                            role == "child" ? MaskRole::child : MaskRole::parent);
      m.contour_index = jm.at("contour").get<std::size_t>();
      masks.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::input_format, std::string("masks manifest: ") + e.what());
  }
  DetectionReport report = localize(masks, cloud, config);
  report.counts.contours = j.value("contours", masks.size());
  write_json(a.out, to_json(report));
  std::cout << report.detections.size() << " poses\n";
  return 0;
}

int cmd_pipeline(const Args& a) {
  const PipelineConfig config = load_with_seed(a.config, a.seed);
  config.resolve_homography();
  const GrayImage image = read_pnm(a.image);
  const OrganizedCloud cloud = read_ply(a.cloud);
  const DetectionReport report = run_pipeline(config, image, cloud, parse_phase(a.phase));
  write_json(a.out, to_json(report));
  std::cout << report.detections.size() << " poses in " << report.timing.total << " s\n";
  return 0;
}

int cmd_verify(const Args& a, bool use_phase) {
  auto poses = poses_from_json(read_json(a.report));
  auto truth = truth_from_json(read_json(a.truth));
  if (use_phase) {
    const MaskRole role = a.phase == "child" ? MaskRole::child : MaskRole::parent;
    std::erase_if(truth, [&](const GroundTruth& g) { return g.priority != role; });
  }
  const ErrorTable table = verify_against_ground_truth(poses, truth, a.match_radius);
  if (!a.out.empty()) write_json(a.out, to_json(table));

  std::cout << std::fixed << std::setprecision(2);
  std::cout << "matched " << table.matches.size() << "/" << truth.size() << ", misses "
            << table.misses() << ", unmatched poses " << table.unmatched_poses << '\n';
  std::cout << "mean trans err mm (x y z): " << table.mean_trans_err_mm.transpose() << '\n';
  std::cout << "mean rot err deg  (x y z): " << table.mean_rot_err_deg.transpose() << '\n';
  std::cout << "physical rig reference: trans " << kReferenceTransErrMm[0] << ' '
            << kReferenceTransErrMm[1] << ' ' << kReferenceTransErrMm[2] << " mm, rot "
            << kReferenceRotErrDeg[0] << ' ' << kReferenceRotErrDeg[1] << " deg\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bin-picking box localization"};
  app.require_subcommand(1);
  Args a;
  const auto phase_check = CLI::IsMember({"child", "parent"});

  auto* synth = app.add_subcommand("synth", "render a scene: image, cloud, truth and config");
  synth->add_option("scene", a.scene, "scene JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", a.out, "output directory")->required();
  synth->add_option("--seed", a.seed, "override the scene noise seed");

  auto* segment = app.add_subcommand("segment", "image to box masks");
  segment->add_option("image", a.image, "PGM/PPM image")->required()->check(CLI::ExistingFile);
  segment->add_option("--config", a.config, "config JSON")->required();
  segment->add_option("--phase", a.phase, "child or parent")->check(phase_check);
  segment->add_option("--seed", a.seed, "RNG seed");
  segment->add_option("--out", a.out, "output directory")->required();

  auto* localize_cmd = app.add_subcommand("localize", "masks and cloud to poses");
  localize_cmd->add_option("cloud", a.cloud, "organized PLY")->required()->check(CLI::ExistingFile);
  localize_cmd->add_option("masks", a.masks, "masks.json from segment")->required()->check(CLI::ExistingFile);
  localize_cmd->add_option("--config", a.config, "config JSON")->required();
  localize_cmd->add_option("--seed", a.seed, "RNG seed");
  localize_cmd->add_option("--out", a.out, "report JSON")->required();

  auto* pipeline = app.add_subcommand("pipeline", "image and cloud to a pose report");
  pipeline->add_option("image", a.image, "PGM/PPM image")->required()->check(CLI::ExistingFile);
  pipeline->add_option("cloud", a.cloud, "organized PLY")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--config", a.config, "config JSON")->required();
  pipeline->add_option("--phase", a.phase, "child or parent")->check(phase_check);
  pipeline->add_option("--seed", a.seed, "RNG seed");
  pipeline->add_option("--out", a.out, "report JSON")->required();

  auto* verify = app.add_subcommand("verify", "compare a report with ground truth");
  verify->add_option("report", a.report, "report JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("truth", a.truth, "truth JSON")->required()->check(CLI::ExistingFile);
  verify->add_option("--out", a.out, "error table JSON");
  verify->add_option("--match-radius", a.match_radius, "mm")->check(CLI::PositiveNumber);
  auto* verify_phase =
      verify->add_option("--phase", a.phase, "only score truths of this priority")->check(phase_check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*synth) return cmd_synth(a);
    if (*segment) return cmd_segment(a);
    if (*localize_cmd) return cmd_localize(a);
    if (*pipeline) return cmd_pipeline(a);
    if (*verify) return cmd_verify(a, verify_phase->count() > 0);
  } catch (const Error& e) {
    std::cerr << "binpick: " << e.what() << '\n';
    const bool config = e.code() == Errc::config_invalid || e.code() == Errc::calibration_missing;
    return config ? kExitConfig : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "binpick: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
