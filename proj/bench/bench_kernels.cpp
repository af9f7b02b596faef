// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include "iqakit/metric_kernels.hpp"
#include "iqakit/mixer.hpp"
#include "support/fixture.hpp"
#include "support/memory_store.hpp"

using namespace iqakit;

namespace {

std::vector<DetectionPair> records(std::size_t n) {
  Rng rng(7);
  const auto labels = DistortionTaxonomy::defaults().labels();
  std::vector<DetectionPair> out(n);
  for (auto& r : out) {
    r.ground_truth = testing::random_boxes(rng, labels, 12, 80);
    r.predictions = testing::random_boxes(rng, labels, 12, 80);
    r.predictions.insert(r.predictions.end(), r.ground_truth.begin(), r.ground_truth.end());
  }
  return out;
}

void BM_PerImageApSerial(benchmark::State& state) {
  auto recs = records(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::per_image_ap(recs, 0.5, true));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PerImageApOmp(benchmark::State& state) {
  auto recs = records(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::per_image_ap(recs, 0.5, true));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_KeyFractionsSerial(benchmark::State& state) {
  auto recs = records(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::key_fractions(recs, 0.5));
}

void BM_KeyFractionsOmp(benchmark::State& state) {
  auto recs = records(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::key_fractions(recs, 0.5));
}

MixPlan augment_all() {
  MixPlan plan;
  plan.grounding_ratio = 1.0;
  plan.seed = 3;
  return plan;
}

void BM_MixSerial(benchmark::State& state) {
  auto bundle = testing::make_fixture({.images = static_cast<std::size_t>(state.range(0))});
  auto plan = augment_all();
  for (auto _ : state) {
    testing::MemoryImageStore store;
    benchmark::DoNotOptimize(mix_serial(bundle, plan, store));
  }
}

void BM_MixOmp(benchmark::State& state) {
  auto bundle = testing::make_fixture({.images = static_cast<std::size_t>(state.range(0))});
  auto plan = augment_all();
  for (auto _ : state) {
    testing::MemoryImageStore store;
    benchmark::DoNotOptimize(mix(bundle, plan, store));
  }
}

}  // namespace

BENCHMARK(BM_PerImageApSerial)->Arg(1000)->Arg(20000);
BENCHMARK(BM_PerImageApOmp)->Arg(1000)->Arg(20000);
BENCHMARK(BM_KeyFractionsSerial)->Arg(20000);
BENCHMARK(BM_KeyFractionsOmp)->Arg(20000);
BENCHMARK(BM_MixSerial)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MixOmp)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
