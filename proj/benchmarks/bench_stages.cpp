// Per-stage timings on the four-box scene (224x172 cloud, 2048x1536 image).

#include <benchmark/benchmark.h>

#include "binpick/clustering.hpp"
#include "binpick/conditioning.hpp"
#include "binpick/fusion.hpp"
#include "binpick/neighbor_index.hpp"
#include "binpick/pipeline.hpp"
#include "binpick/planes.hpp"
#include "binpick/synthesis.hpp"

using namespace binpick;

namespace {

struct Fixture {
  SceneSpec scene;
  SyntheticFrame frame;
  PipelineConfig config;
  std::vector<Point3> masked;  // points under the first parent mask
  std::vector<Point3> conditioned;

  Fixture() {
    scene = load_scene(BINPICK_SCENE_DIR "/four_boxes.json");
    frame = synthesize(scene);
    config.homography = rgb_to_depth_homography(scene);
    config.roi = bin_roi(scene);
    const auto seg = segment_image(frame.image, config, MaskPhase::parent_after);
    masked = map_mask_to_cloud(seg.masks.front(), *config.homography, frame.cloud).points;
    const auto filtered = statistical_outlier_removal(voxel_grid_downsample(masked, config.voxel_leaf));
    conditioned = don_filter(mls_resample(filtered, config.effective_mls_radius()),
                             config.effective_don_small_radius(), config.effective_don_large_radius());
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Segmentation(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(segment_image(f.frame.image, f.config, MaskPhase::parent_after));
}

void BM_Fusion(benchmark::State& state) {
  const auto& f = fixture();
  const auto masks = segment_image(f.frame.image, f.config, MaskPhase::parent_after).masks;
  for (auto _ : state) {
    for (const auto& m : masks) benchmark::DoNotOptimize(map_mask_to_cloud(m, *f.config.homography, f.frame.cloud));
  }
}

void BM_Filtering(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(statistical_outlier_removal(voxel_grid_downsample(f.masked, f.config.voxel_leaf)));
  }
}

void BM_ResamplingDon(benchmark::State& state) {
  const auto& f = fixture();
  const auto filtered = statistical_outlier_removal(voxel_grid_downsample(f.masked, f.config.voxel_leaf));
  for (auto _ : state) {
    benchmark::DoNotOptimize(don_filter(mls_resample(filtered, f.config.effective_mls_radius()),
                                        f.config.effective_don_small_radius(),
                                        f.config.effective_don_large_radius()));
  }
}

void BM_Hdbscan(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(hdbscan(f.conditioned, 30));
  state.counters["points"] = static_cast<double>(f.conditioned.size());
}

void BM_PlaneExtraction(benchmark::State& state) {
  const auto& f = fixture();
  PlaneExtractionParams params;
  for (auto _ : state) benchmark::DoNotOptimize(extract_planes_iterative(f.conditioned, params));
}

void BM_NeighborIndexKnn(benchmark::State& state) {
  const auto& f = fixture();
  const auto pts = f.frame.cloud.valid_points();
  const NeighborIndex index(pts);
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.knn(pts[q], 8));
    q = (q + 7919) % pts.size();
  }
}

void BM_FullPipelineBothPhases(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_pipeline(f.config, f.frame.image, f.frame.cloud, MaskPhase::child_first));
    benchmark::DoNotOptimize(run_pipeline(f.config, f.frame.image, f.frame.cloud, MaskPhase::parent_after));
  }
}

}  // namespace

BENCHMARK(BM_Segmentation)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Fusion)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Filtering)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResamplingDon)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Hdbscan)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PlaneExtraction)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NeighborIndexKnn)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FullPipelineBothPhases)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
