#include <benchmark/benchmark.h>

#include "mrigan/layers.hpp"

using namespace mrigan;

namespace {

void BM_conv2d_forward(benchmark::State& state) {
  const size_t c = static_cast<size_t>(state.range(0));
  Rng rng(1);
  Tensor x = Tensor::randn({4, c, 32, 32}, rng);
  Tensor w = Tensor::randn({c, c, 4, 4}, rng, 0.1);
  Tensor b = Tensor::zeros({c});
  for (auto _ : state)
    benchmark::DoNotOptimize(
        ad::conv2d(ad::constant(x), ad::constant(w), ad::constant(b), 2, 1));
}
BENCHMARK(BM_conv2d_forward)->Arg(8)->Arg(16)->Arg(32);

void BM_conv2d_train_step(benchmark::State& state) {
  Rng rng(2);
  ad::ParamSet ps;
  Rng root(3);
  ad::Conv2d conv(ps, "c", 8, 8, 4, 2, 1, root);
  Tensor x = Tensor::randn({4, 8, 32, 32}, rng);
  for (auto _ : state) {
    ad::Var y = conv(ad::constant(x));
    ad::Var loss = ad::sum(ad::mul(y, y));
    ad::backprop(loss);
    benchmark::DoNotOptimize(conv.w->grad);
  }
}
BENCHMARK(BM_conv2d_train_step);

void BM_batchnorm_forward(benchmark::State& state) {
  ad::ParamSet ps;
  ad::BatchNorm2d bn(ps, "bn", 16);
  Rng rng(4);
  Tensor x = Tensor::randn({4, 16, 32, 32}, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(bn(ad::constant(x), ad::Mode::train));
}
BENCHMARK(BM_batchnorm_forward);

}  // namespace
