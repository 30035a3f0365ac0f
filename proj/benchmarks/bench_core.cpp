#include <benchmark/benchmark.h>

#include "qtd/delay.hpp"

using namespace qtd;

namespace {

WavepacketSpec spec(double x0, double lo, double hi, double sigma) {
  WavepacketSpec s;
  s.center = {x0};
  s.p_lo = {lo};
  s.p_hi = {hi};
  s.sigma_p = sigma;
  return s;
}

}  // namespace

static void BM_Transform(benchmark::State& st) {
  const Grid g(1, static_cast<int>(st.range(0)), 1.0);
  State s = make_wavepacket(g, spec(0.0, 0.5, 1.0, 0.05));
  for (auto _ : st) {
    s = to_momentum(to_position(s));
    benchmark::DoNotOptimize(s.data().data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_Transform)->RangeMultiplier(2)->Range(1024, 16384);

static void BM_Transform2D(benchmark::State& st) {
  const Grid g(2, static_cast<int>(st.range(0)), 1.0);
  WavepacketSpec w;
  w.center = {0.0, 0.0};
  w.p_lo = {0.5, 0.5};
  w.p_hi = {1.5, 1.5};
  State s = make_wavepacket(g, w);
  for (auto _ : st) {
    s = to_momentum(to_position(s));
    benchmark::DoNotOptimize(s.data().data());
  }
}
BENCHMARK(BM_Transform2D)->Arg(64)->Arg(128)->Arg(256);

static void BM_SplitStepEvolve(benchmark::State& st) {
  const Grid g(1, 4096, 1.5);
  const auto u0 = build_free_laplacian(g);
  const Propagator u = build_full_split_step(u0, smooth_well(g, 0.5, 4.0, std::vector<double>{10.0}));
  const State phi = make_wavepacket(g, spec(0.0, 0.6, 1.0, 0.02));
  for (auto _ : st) benchmark::DoNotOptimize(evolve(u, phi, st.range(0)));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_SplitStepEvolve)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_FreeSojourn(benchmark::State& st) {
  const Grid g(1, 4096, 1.5);
  const auto u0 = build_free_laplacian(g);
  const auto f = make_bump(0.25);
  const State phi = make_wavepacket(g, spec(24.0, 0.6, 1.0, 0.02));
  for (auto _ : st) benchmark::DoNotOptimize(sojourn_free(u0, f, static_cast<double>(st.range(0)), phi));
}
BENCHMARK(BM_FreeSojourn)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_WaveOperator(benchmark::State& st) {
  const Grid g(1, 4096, 1.5);
  const auto u0 = build_free_laplacian(g);
  const ScatteringSystem sys(u0, build_full_split_step(u0, smooth_well(g, 0.5, 4.0, std::vector<double>{10.0})));
  const State phi = make_wavepacket(g, spec(0.0, 0.6, 1.0, 0.02));
  for (auto _ : st) benchmark::DoNotOptimize(wave_operator_apply(sys, phi, -1));
}
BENCHMARK(BM_WaveOperator)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
