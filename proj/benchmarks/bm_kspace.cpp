#include <benchmark/benchmark.h>

#include "mrigan/kspace.hpp"
#include "mrigan/metrics.hpp"

using namespace mrigan;

namespace {

void BM_make_mask(benchmark::State& state) {
  const auto scheme = static_cast<MaskScheme>(state.range(0));
  double target = scheme == MaskScheme::cartesian ? 4.0 : 0.3;
  uint64_t seed = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(make_mask(scheme, 64, 64, target, 0.08, seed++));
}
BENCHMARK(BM_make_mask)
    ->Arg(static_cast<int>(MaskScheme::cartesian))
    ->Arg(static_cast<int>(MaskScheme::radial))
    ->Arg(static_cast<int>(MaskScheme::spiral));

void BM_zero_fill(benchmark::State& state) {
  Tensor x = shepp_logan(64, 64);
  Mask m = make_mask(MaskScheme::radial, 64, 64, 0.3, 0.08, 7);
  Tensor y = forward(x, m);
  for (auto _ : state) benchmark::DoNotOptimize(zero_fill(y));
}
BENCHMARK(BM_zero_fill);

void BM_ssim(benchmark::State& state) {
  Tensor x = shepp_logan(64, 64);
  Mask m = make_mask(MaskScheme::radial, 64, 64, 0.3, 0.08, 7);
  Tensor y = clamp(abs(zero_fill(forward(x, m))), 0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(x, y));
}
BENCHMARK(BM_ssim);

void BM_shepp_logan(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(shepp_logan(64, 64));
}
BENCHMARK(BM_shepp_logan);

}  // namespace
