#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "emreg/correspondence.hpp"
#include "emreg/em_registration.hpp"
#include "emreg/spatial_index.hpp"
#include "emreg/synth.hpp"

namespace {

std::vector<emreg::Point> uniform_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::vector<emreg::Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng);
    out.emplace_back(x, u(rng));
  }
  return out;
}

emreg::Scene tiled(std::size_t n) {
  return emreg::make_tiled_scene(n, emreg::Pose(0.1, -0.05, 0.25 * 3.14159265358979 / 180.0),
                                 0.02, 7);
}

void BM_BuildIndex(benchmark::State& state) {
  const auto pts = uniform_points(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    auto index = emreg::build_index(pts, 0.3);
    benchmark::DoNotOptimize(index);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildIndex)->RangeMultiplier(2)->Range(1 << 10, 1 << 14)->Complexity();

void BM_QueryRadius(benchmark::State& state) {
  const auto pts = uniform_points(static_cast<std::size_t>(state.range(0)), 2);
  const auto queries = uniform_points(1024, 3);
  const auto index = emreg::build_index(pts, 0.3);
  std::vector<std::uint32_t> out;
  for (auto _ : state) {
    for (const auto& q : queries) {
      index.query_radius(q, out);
      benchmark::DoNotOptimize(out.data());
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(queries.size()));
}
BENCHMARK(BM_QueryRadius)->RangeMultiplier(4)->Range(1 << 10, 1 << 16);

void BM_BuildGraph(benchmark::State& state) {
  const auto scene = tiled(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto graph = emreg::build_graph(scene.scan, scene.model, emreg::Pose::identity(), 0.3);
    benchmark::DoNotOptimize(graph);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildGraph)->Arg(1000)->Arg(2000)->Arg(4000)->Arg(8000)->Complexity();

void BM_EmIteration(benchmark::State& state) {
  const auto scene = tiled(static_cast<std::size_t>(state.range(0)));
  auto graph = emreg::build_graph(scene.scan, scene.model, emreg::Pose::identity(), 0.3);
  const auto gamma = emreg::PrecisionMatrix::isotropic(0.1);
  emreg::Pose pose = emreg::Pose::identity();
  for (auto _ : state) {
    emreg::e_step(graph, pose, gamma);
    pose = emreg::m_step(graph, gamma);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EmIteration)->Arg(1000)->Arg(2000)->Arg(4000)->Arg(8000)->Complexity();

void BM_RegisterScan(benchmark::State& state) {
  const auto scene = tiled(static_cast<std::size_t>(state.range(0)));
  const auto config = emreg::EmConfig::for_sigma(0.1);
  for (auto _ : state) {
    auto result = emreg::register_scan(scene.scan, scene.model, emreg::Pose::identity(), config);
    benchmark::DoNotOptimize(result);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RegisterScan)->Arg(1000)->Arg(2000)->Arg(4000)->Arg(8000)->Complexity()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
