#include <cmath>
#include <limits>

#include "doctest.h"
#include "mrigan/kspace.hpp"
#include "mrigan/metrics.hpp"

using namespace mrigan;

TEST_CASE("psnr closed forms") {
  Tensor gt = Tensor::zeros({10, 10});
  CHECK(std::isinf(psnr(gt, gt)));

  Tensor off01 = Tensor::full({10, 10}, 0.1);  // MSE = 0.01
  CHECK(psnr(off01, gt) == doctest::Approx(20.0).epsilon(1e-9));

  Tensor off001 = Tensor::full({10, 10}, 0.01);  // MSE = 1e-4
  CHECK(psnr(off001, gt) == doctest::Approx(40.0).epsilon(1e-9));

  CHECK_THROWS_AS(psnr(Tensor::zeros({2, 2}), Tensor::zeros({3, 3})), ShapeError);
}

TEST_CASE("psnr decreases as noise grows") {
  Tensor gt = shepp_logan(32, 32);
  Rng rng(5);
  Tensor noise = Tensor::randn({32, 32}, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double amp : {0.01, 0.05, 0.2}) {
    Tensor rec = add(gt, scale(noise, amp));
    double p = psnr(rec, gt);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("rmse closed forms") {
  Tensor gt = Tensor::zeros({5, 5});
  CHECK(rmse(gt, gt) == 0.0);
  Tensor off = Tensor::full({5, 5}, 0.2);  // MSE = 0.04
  CHECK(rmse(off, gt) == doctest::Approx(0.2).epsilon(1e-12));
  double r = rmse(off, gt);
  double m = 0.04;
  CHECK(std::abs(r * r - m) < 1e-14);
}

TEST_CASE("ssim identities and symmetry") {
  Tensor x = shepp_logan(32, 32);
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(3);
  Tensor y = clamp(add(x, Tensor::randn({32, 32}, rng, 0.05)), 0.0, 1.0);
  CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-14));
  CHECK(ssim(x, y) <= 1.0);
  CHECK(ssim(x, y) < 1.0);

  CHECK_THROWS_AS(ssim(Tensor::zeros({8, 8}), Tensor::zeros({8, 8})), ParamError);
}

TEST_CASE("ssim of two constant images is the luminance factor") {
  const double a = 0.25, b = a + 0.5;
  Tensor x = Tensor::full({16, 16}, a);
  Tensor y = Tensor::full({16, 16}, b);
  const double k1 = 0.0001;  // (0.01*L)^2
  double expect = (2 * a * b + k1) / (a * a + b * b + k1);  // contrast term is 1
  CHECK(ssim(x, y) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("fid of a set against itself is zero") {
  Rng rng(8);
  std::vector<Tensor> set;
  for (int i = 0; i < 6; ++i) set.push_back(Tensor::randn({1, 1, 16, 16}, rng));
  FeatureExtractor fx = FeatureExtractor::random_conv(1, 17);
  CHECK(std::abs(fid(set, set, fx)) < 1e-8);
}

TEST_CASE("fid is symmetric within matrix-root tolerance") {
  Rng rng(9);
  std::vector<Tensor> a, b;
  for (int i = 0; i < 8; ++i) {
    a.push_back(Tensor::randn({1, 1, 16, 16}, rng));
    b.push_back(clamp(Tensor::randn({1, 1, 16, 16}, rng), -0.5, 0.5));
  }
  FeatureExtractor fx = FeatureExtractor::random_conv(1, 17);
  double ab = fid(a, b, fx), ba = fid(b, a, fx);
  CHECK(std::abs(ab - ba) < 1e-6 * std::max(1.0, std::abs(ab)));
}

TEST_CASE("fid closed-form Gaussian separations") {
  // identity embedder over 2-element tensors; n = 1e4 samples per set
  const size_t n = 10000;
  Rng rng(123);
  std::vector<Tensor> a, b, c;
  for (size_t i = 0; i < n; ++i) {
    a.push_back(Tensor::from({2}, {rng.normal(), rng.normal()}));
    b.push_back(Tensor::from({2}, {1.0 + rng.normal(), rng.normal()}));
    c.push_back(Tensor::from({2}, {2.0 * rng.normal(), 2.0 * rng.normal()}));
  }
  FeatureExtractor id = FeatureExtractor::identity();
  // equal covariances, ||dmu||^2 = 1
  CHECK(fid(a, b, id) == doctest::Approx(1.0).epsilon(0.05));
  // equal means, Sigma_a = I, Sigma_c = 4I: Tr(5I - 2*2I) = 2 in 2-D
  CHECK(fid(a, c, id) == doctest::Approx(2.0).epsilon(0.05));

  CHECK_THROWS_AS(fid({}, a, id), ParamError);
}

TEST_CASE("small sets fall back to shrinkage instead of failing") {
  Rng rng(2);
  std::vector<Tensor> tiny_a, tiny_b;
  for (int i = 0; i < 3; ++i) {
    tiny_a.push_back(Tensor::randn({1, 1, 16, 16}, rng));
    tiny_b.push_back(Tensor::randn({1, 1, 16, 16}, rng));
  }
  FeatureExtractor fx = FeatureExtractor::random_conv(1, 17);  // 64-dim, n=3
  double v = fid(tiny_a, tiny_b, fx);
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
}

TEST_CASE("metrics report aggregates and psnr capping") {
  MetricsReport rep;
  rep.add_image(std::numeric_limits<double>::infinity(), 1.0, 0.0);
  rep.add_image(30.0, 0.9, 0.02);
  Aggregate p = rep.psnr();
  CHECK(p.count == 2);
  CHECK(p.mean == doctest::Approx((kPsnrCap + 30.0) / 2.0));
  CHECK(p.stdev >= 0.0);
  Aggregate s = rep.ssim();
  CHECK(s.mean == doctest::Approx(0.95));

  MetricsReport empty;
  CHECK_THROWS_AS(empty.psnr(), ContractError);
}
