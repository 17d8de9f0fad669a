// Microbenchmarks for the map-generation pipeline and its risk primitives.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "trav/mapgen.hpp"
#include "trav/model.hpp"
#include "trav/speed_pmf.hpp"

namespace {

trav::SemanticGrid make_grid(int rows, int cols, int classes, uint64_t seed) {
  trav::GridGeometry geom;
  geom.rows = rows;
  geom.cols = cols;
  geom.resolution = 0.4;
  trav::SemanticGrid grid(geom, classes);
  std::mt19937_64 rng(seed);
  for (auto& cell : grid.cells)
    cell = static_cast<int16_t>(rng() % classes);
  return grid;
}

trav::SpeedPmf make_pmf(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> p(10);
  double sum = 0.0;
  for (double& x : p) sum += (x = unif(rng));
  for (double& x : p) x /= sum;
  return trav::SpeedPmf(p, 5.0);
}

void BM_GenerateRiskMap(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const trav::SemanticGrid grid = make_grid(side, side, 2, 7);
  const trav::MlpModel model(2, 10, 5.0, 64, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        trav::generate_risk_map(grid, model, 10, {0.1, 0.5}));
  }
  state.SetItemsProcessed(state.iterations() * side * side * 10);
}
BENCHMARK(BM_GenerateRiskMap)->Arg(50)->Arg(100)->Arg(200);

void BM_GenerateSdm(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const trav::SemanticGrid grid = make_grid(side, side, 2, 7);
  const trav::MlpModel model(2, 10, 5.0, 64, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(trav::generate_sdm(grid, model, 10));
}
BENCHMARK(BM_GenerateSdm)->Arg(100);

void BM_BuildRiskMapFromSdm(benchmark::State& state) {
  const trav::SemanticGrid grid = make_grid(100, 100, 2, 7);
  const trav::MlpModel model(2, 10, 5.0, 64, 7);
  const trav::SpeedDistributionMap sdm = trav::generate_sdm(grid, model, 10);
  for (auto _ : state)
    benchmark::DoNotOptimize(trav::build_risk_map(sdm, {0.1, 0.5}));
}
BENCHMARK(BM_BuildRiskMapFromSdm);

void BM_ModelForward(benchmark::State& state) {
  const trav::MlpModel model(2, 10, 5.0, 64, 7);
  double cmd = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict_pmf(0, cmd));
    cmd = cmd < 5.0 ? cmd + 0.01 : 0.0;
  }
}
BENCHMARK(BM_ModelForward);

void BM_Cvar(benchmark::State& state) {
  const trav::SpeedPmf pmf = make_pmf(7);
  for (auto _ : state) benchmark::DoNotOptimize(trav::cvar(pmf, 0.1));
}
BENCHMARK(BM_Cvar);

void BM_RiskAdjustedSpeed(benchmark::State& state) {
  const trav::SpeedPmf pmf = make_pmf(7);
  for (auto _ : state)
    benchmark::DoNotOptimize(trav::risk_adjusted_speed(pmf, {0.1, 0.5}));
}
BENCHMARK(BM_RiskAdjustedSpeed);

void BM_MapLookup(benchmark::State& state) {
  const trav::SemanticGrid grid = make_grid(100, 100, 2, 7);
  const trav::MlpModel model(2, 10, 5.0, 64, 7);
  const trav::RiskSpeedMap map =
      trav::generate_risk_map(grid, model, 10, {0.1, 0.5});
  double x = 1.0, y = 1.0, s = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(trav::lookup(map, x, y, s));
    x = x < 38.0 ? x + 0.13 : 1.0;
    y = y < 38.0 ? y + 0.31 : 1.0;
    s = s < 4.9 ? s + 0.07 : 0.1;
  }
}
BENCHMARK(BM_MapLookup);

}  // namespace

BENCHMARK_MAIN();
