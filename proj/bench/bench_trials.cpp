#include <benchmark/benchmark.h>

#include "dtd/experiments.hpp"

namespace {

dtd::ExperimentConfig config() {
  dtd::ExperimentConfig c;
  c.env = dtd::GridSpec{10, 10, dtd::RewardMode::painful, 0.9};
  c.algorithm = dtd::Algorithm::diff_q;
  c.alphas = {0.5, 1.0};
  c.etas = {0.001, 0.01};
  c.num_steps = 10'000;
  c.curve_stride = 0;
  return c;
}

std::vector<dtd::TrialSpec> trials(const dtd::ExperimentConfig& c, int runs) {
  std::vector<dtd::TrialSpec> out;
  for (const auto& cell : dtd::sweep_cells(c))
    for (int r = 0; r < runs; ++r) out.push_back({cell, dtd::run_seed(c, r)});
  return out;
}

void run(benchmark::State& state, dtd::Execution exec) {
  const auto c = config();
  const auto mdp = c.build_env();
  const auto ts = trials(c, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dtd::run_trials(mdp, c, ts, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ts.size()) * c.num_steps);
}

void BM_TrialsSerial(benchmark::State& state) { run(state, dtd::Execution::serial); }
void BM_TrialsOpenMP(benchmark::State& state) { run(state, dtd::Execution::openmp); }

BENCHMARK(BM_TrialsSerial)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsOpenMP)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
