#include <benchmark/benchmark.h>

#include "mrigan/tensor.hpp"

using namespace mrigan;

namespace {

Tensor random_complex(size_t h, size_t w, uint64_t seed) {
  Rng rng(seed);
  Tensor t = Tensor::zeros({h, w}, Dtype::complex128);
  for (size_t i = 0; i < t.numel(); ++i) t.set_c(i, {rng.normal(), rng.normal()});
  return t;
}

void BM_fft2(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  Tensor x = random_complex(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fft2(x));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}
BENCHMARK(BM_fft2)->Arg(32)->Arg(64)->Arg(63)->Arg(128);  // 63 hits Bluestein

void BM_elementwise_add(benchmark::State& state) {
  Tensor a = random_complex(64, 64, 2), b = random_complex(64, 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(add(a, b));
}
BENCHMARK(BM_elementwise_add);

}  // namespace
