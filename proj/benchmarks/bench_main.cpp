#include <benchmark/benchmark.h>

#include "gwve/bounds.hpp"
#include "gwve/environment.hpp"
#include "gwve/exact.hpp"
#include "gwve/spine.hpp"
#include "gwve/wasserstein.hpp"

using namespace gwve;

namespace {

void BM_LawDft(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Environment env = builtin::poisson_increasing(n);
  LawOptions opts;
  opts.method = LawMethod::Dft;
  opts.truncation = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(law_of_zn(env, n, opts));
}
BENCHMARK(BM_LawDft)->Args({64, 4096})->Args({256, 16384})->Args({1024, 131072})->Unit(benchmark::kMillisecond);

void BM_LawConvolution(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Environment env = builtin::binary_pmf(n);
  LawOptions opts;
  opts.method = LawMethod::Convolution;
  opts.truncation = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(law_of_zn(env, n, opts));
}
BENCHMARK(BM_LawConvolution)->Args({8, 512})->Args({12, 2048})->Unit(benchmark::kMillisecond);

void BM_DistanceToExp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ConditionalLaw c = conditional_law(builtin::linear_fractional_constant(0.5, 0.5, n), n);
  for (auto _ : state) benchmark::DoNotOptimize(dw_scaled_pmf_vs_exp(c.y, c.b));
}
BENCHMARK(BM_DistanceToExp)->Arg(100)->Arg(4096)->Unit(benchmark::kMicrosecond);

void BM_SpineSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SpineTreeSampler sampler(builtin::symmetric(0.5, n), n);
  RngStream rng(1, 0);
  SpineSample s;
  for (auto _ : state) {
    sampler.sample(rng, s);
    benchmark::DoNotOptimize(s.zdot);
  }
}
BENCHMARK(BM_SpineSample)->Arg(8)->Arg(64);

void BM_RnBatch(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const MomentTrack t = moment_sequences(builtin::poisson_increasing(N), N);
  for (auto _ : state) benchmark::DoNotOptimize(rn_batch(t, N));
}
BENCHMARK(BM_RnBatch)->Arg(1 << 12)->Arg(1 << 16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
