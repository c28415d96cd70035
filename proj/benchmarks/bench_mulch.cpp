// Microbenchmarks for the three hot paths: block-pair likelihood evaluation
// (the optimizer's inner loop), network simulation, and motif counting.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "mulch/fit.hpp"
#include "mulch/model.hpp"
#include "mulch/motifs.hpp"
#include "mulch/simulate.hpp"

namespace {

mulch::SimConfig bench_config(double duration) {
  mulch::SimConfig cfg;
  cfg.pi = {0.5, 0.5};
  cfg.betas = {0.2, 2.0};
  cfg.params.resize(4);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      auto& th = cfg.params[static_cast<std::size_t>(a * 2 + b)];
      th.mu = a == b ? 0.02 : 0.01;
      th.alpha = {0.3, 0.2, 0.003, 0.003, 0.003, 0.003};
      th.c = {0.6, 0.4};
    }
  }
  cfg.duration = duration;
  cfg.n_nodes = 40;
  cfg.seed = 9;
  return cfg;
}

const mulch::SimResult& fixture() {
  static const mulch::SimResult sim = mulch::generate_network(bench_config(60.0));
  return sim;
}

void BM_BlockPairLogLikelihood(benchmark::State& state) {
  const auto& sim = fixture();
  const auto cfg = bench_config(60.0);
  const bool with_grad = state.range(0) != 0;
  mulch::BlockPairGrad grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mulch::block_pair_log_likelihood(
        cfg.params[0], cfg.betas, sim.stream, sim.membership, 0, 0, sim.stream.duration,
        with_grad ? &grad : nullptr));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(sim.stream.events.size()));
}
BENCHMARK(BM_BlockPairLogLikelihood)->Arg(0)->Arg(1)->ArgNames({"grad"});

void BM_GenerateNetwork(benchmark::State& state) {
  auto cfg = bench_config(static_cast<double>(state.range(0)));
  std::int64_t events = 0;
  for (auto _ : state) {
    ++cfg.seed;  // fresh draw each iteration, still deterministic overall
    const auto res = mulch::generate_network(cfg);
    events += static_cast<std::int64_t>(res.stream.events.size());
    benchmark::DoNotOptimize(res.stream.events.data());
  }
  state.SetItemsProcessed(events);
}
BENCHMARK(BM_GenerateNetwork)->Arg(30)->Arg(60)->Arg(120)->ArgNames({"T"});

void BM_CountTemporalMotifs(benchmark::State& state) {
  const auto& sim = fixture();
  const double delta = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mulch::count_temporal_motifs(sim.stream, delta));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(sim.stream.events.size()));
}
BENCHMARK(BM_CountTemporalMotifs)->Arg(5)->Arg(20)->Arg(80)->ArgNames({"delta_x10"});

}  // namespace

BENCHMARK_MAIN();
