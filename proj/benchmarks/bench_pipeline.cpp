#include <benchmark/benchmark.h>

#include "l2c/augmentation.hpp"
#include "l2c/evaluation.hpp"
#include "l2c/forecasting.hpp"
#include "l2c/predictors.hpp"
#include "l2c/random.hpp"
#include "l2c/synth.hpp"

namespace {

l2c::Cohort cohort(std::size_t patients) {
  l2c::SynthOptions o;
  o.patients = patients;
  o.seed = 17;
  return l2c::synthesize(o);
}

void BM_TrainingTable(benchmark::State& state) {
  const auto c = cohort(static_cast<std::size_t>(state.range(0)));
  const auto jobs = static_cast<unsigned>(state.range(1));
  std::size_t rows = 0;
  for (auto _ : state) {
    auto table = l2c::build_training_table(c, l2c::Task::DX, l2c::Membership::D1, jobs);
    rows = table.rows.size();
    benchmark::DoNotOptimize(table);
  }
  state.counters["rows"] = static_cast<double>(rows);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows));
}
BENCHMARK(BM_TrainingTable)->Args({200, 1})->Args({1000, 1})->Args({1000, 4})->Unit(benchmark::kMillisecond);

void BM_SweepHorizons(benchmark::State& state) {
  const auto c = cohort(50);
  const auto grid = l2c::horizon_grid(1, 60, 1);
  for (auto _ : state) {
    auto rows = l2c::forecast_rows(c, l2c::Task::ADAS, l2c::Membership::All, grid);
    benchmark::DoNotOptimize(rows);
  }
}
BENCHMARK(BM_SweepHorizons)->Unit(benchmark::kMillisecond);

void BM_Mauc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  l2c::Rng rng(3);
  std::vector<int> labels(n);
  std::vector<l2c::ClassProbabilities> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i < 3 ? static_cast<int>(i) : static_cast<int>(rng.index(3));
    double sum = 0;
    for (auto& p : probs[i]) sum += p = rng.uniform();
    for (auto& p : probs[i]) p /= sum;
  }
  for (auto _ : state) benchmark::DoNotOptimize(l2c::mauc(labels, std::span<const l2c::ClassProbabilities>(probs)));
  state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Mauc)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

void BM_Wilcoxon(benchmark::State& state) {
  std::vector<double> d(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (i % 3 == 0 ? -1.0 : 1.0) * static_cast<double>(i + 1);
  for (auto _ : state) benchmark::DoNotOptimize(l2c::wilcoxon_exact(d));
}
BENCHMARK(BM_Wilcoxon)->Arg(5)->Arg(15)->Arg(25);

void BM_Knn(benchmark::State& state) {
  const auto c = cohort(120);
  const auto train = l2c::build_training_table(c, l2c::Task::ADAS, l2c::Membership::D1);
  const auto test = l2c::build_test_table(c, l2c::Task::ADAS);
  l2c::PredictorConfig cfg;
  cfg.kind = l2c::PredictorKind::Knn;
  cfg.task = l2c::Task::ADAS;
  cfg.hparams["k"] = 5;
  for (auto _ : state) benchmark::DoNotOptimize(l2c::fit_predict(train, test, cfg, 1));
  state.counters["train"] = static_cast<double>(train.rows.size());
  state.counters["test"] = static_cast<double>(test.rows.size());
}
BENCHMARK(BM_Knn)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
