// Microbenchmarks for the hot paths: NDT scoring, registration at different
// observation ranges, and factor extraction.
#include <benchmark/benchmark.h>

#include "dorloc/factors.hpp"
#include "dorloc/harness.hpp"
#include "dorloc/registration.hpp"
#include "dorloc/scene.hpp"

namespace {

struct Corpus {
  dor::SceneSpec spec = dor::default_scene_spec();
  dor::PointCloud scene = dor::generate_scene(spec);
  dor::NdtMap map = dor::build_ndt_map(scene, 1.0);
  dor::Trajectory trajectory = dor::make_trajectory(spec, 4.0);
};

const Corpus& corpus() {
  static Corpus c;
  return c;
}

dor::PointCloud scan_at(int waypoint, double range) {
  const auto& c = corpus();
  const auto& wp = c.trajectory.waypoints[static_cast<std::size_t>(waypoint)];
  dor::Pose pose;
  pose.tx = wp.position.x;
  pose.ty = wp.position.y;
  pose.tz = wp.position.z;
  pose.yaw = wp.yaw;
  const dor::PointCloud scan = dor::simulate_scan(
      c.scene, pose, range, 0.02, dor::scan_rng(1, waypoint));
  return dor::voxel_filter(scan, 0.5);
}

void BM_NdtScore(benchmark::State& state) {
  const dor::PointCloud scan = scan_at(5, static_cast<double>(state.range(0)));
  dor::Pose pose;
  pose.tx = corpus().trajectory.waypoints[5].position.x + 0.2;
  pose.ty = corpus().trajectory.waypoints[5].position.y;
  pose.tz = corpus().trajectory.waypoints[5].position.z;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dor::ndt_score(corpus().map, scan, pose));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(scan.size()));
}
BENCHMARK(BM_NdtScore)->Arg(10)->Arg(30)->Arg(50);

void BM_GradientHessian(benchmark::State& state) {
  const dor::PointCloud scan = scan_at(5, static_cast<double>(state.range(0)));
  dor::Pose pose;
  pose.tx = corpus().trajectory.waypoints[5].position.x + 0.2;
  pose.ty = corpus().trajectory.waypoints[5].position.y;
  pose.tz = corpus().trajectory.waypoints[5].position.z;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dor::ndt_gradient_hessian(corpus().map, scan, pose));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(scan.size()));
}
BENCHMARK(BM_GradientHessian)->Arg(10)->Arg(30)->Arg(50);

void BM_Register(benchmark::State& state) {
  const double range = static_cast<double>(state.range(0));
  const dor::PointCloud scan = scan_at(5, range);
  const auto& wp = corpus().trajectory.waypoints[5];
  dor::Pose initial;
  initial.tx = wp.position.x + 0.3;
  initial.ty = wp.position.y - 0.2;
  initial.tz = wp.position.z;
  initial.yaw = wp.yaw;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dor::register_scan(corpus().map, scan, initial));
  }
}
BENCHMARK(BM_Register)->Arg(10)->Arg(20)->Arg(30)->Arg(40)->Arg(50)
    ->Unit(benchmark::kMillisecond);

void BM_FactorVector(benchmark::State& state) {
  const double range = static_cast<double>(state.range(0));
  const auto& wp = corpus().trajectory.waypoints[20];
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dor::factor_vector(corpus().map, wp.position, range));
  }
}
BENCHMARK(BM_FactorVector)->Arg(10)->Arg(30)->Arg(50)
    ->Unit(benchmark::kMillisecond);

void BM_BuildMap(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(dor::build_ndt_map(corpus().scene, 1.0));
  }
}
BENCHMARK(BM_BuildMap)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
