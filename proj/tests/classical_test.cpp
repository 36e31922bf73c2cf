#include <cmath>
#include <fstream>

#include "doctest.h"
#include "mrigan/classical.hpp"
#include "mrigan/metrics.hpp"

using namespace mrigan;

TEST_CASE("tv config validation") {
  TvConfig bad;
  bad.lambda = -1;
  Mask m = full_mask(8, 8);
  Tensor y = forward(to_complex(Tensor::full({8, 8}, 0.5)), m);
  CHECK_THROWS_AS(tv_reconstruct(y, m, bad), ParamError);
}

TEST_CASE("tv with a full mask and dominant data term returns the data") {
  Tensor x = shepp_logan(32, 32);
  Mask full = full_mask(32, 32);
  Tensor y = forward(x, full);
  TvConfig cfg;
  cfg.lambda = 1e6;
  cfg.step = 1e-7;  // stability bound scales with 1/lambda
  cfg.iters = 50;
  TvResult r = tv_reconstruct(y, full, cfg);
  CHECK(max_abs_diff(r.image, x) < 1e-3);
}

TEST_CASE("tv recovers a constant image exactly through the DC sample") {
  Tensor x = Tensor::full({16, 16}, 0.6);
  Mask m = make_mask(MaskScheme::cartesian, 16, 16, 4.0, 0.1, 3);
  Tensor y = forward(x, m);
  TvConfig cfg;
  cfg.iters = 300;
  TvResult r = tv_reconstruct(y, m, cfg);
  CHECK(max_abs_diff(r.image, x) < 1e-6);
}

TEST_CASE("tv beats zero-filled by 2 dB on the radial phantom case") {
  Tensor x = shepp_logan(64, 64);
  Mask m = make_mask(MaskScheme::radial, 64, 64, 0.3, 0.08, 7);
  Tensor y = forward(x, m);
  Tensor zf = clamp(abs(zero_fill(y)), 0.0, 1.0);
  TvResult r = tv_reconstruct(y, m, TvConfig{});
  Tensor tv = clamp(r.image, 0.0, 1.0);
  double p_zf = psnr(zf, x), p_tv = psnr(tv, x);
  CHECK(p_tv >= p_zf + 2.0);

  // objective trace is non-increasing
  for (size_t i = 1; i < r.objective.size(); ++i)
    CHECK(r.objective[i] <= r.objective[i - 1] + 1e-12);
  CHECK(r.objective.size() == r.data_term.size());
  CHECK(r.objective.size() == r.tv_term.size());
}

TEST_CASE("masked residual decreases monotonically in lambda") {
  Tensor x = shepp_logan(48, 48);
  Mask m = make_mask(MaskScheme::cartesian, 48, 48, 4.0, 0.08, 5);
  Tensor y = forward(x, m);
  double prev = 1e300;
  for (double lambda : {1.0, 10.0, 100.0}) {
    TvConfig cfg;
    cfg.lambda = lambda;
    TvResult r = tv_reconstruct(y, m, cfg);
    double resid = l2norm(sub(mul(m.grid, fft2(to_complex(r.image))), y));
    CHECK(resid < prev);
    prev = resid;
  }
}

TEST_CASE("tv divergence raises SolverError carrying the trace") {
  Tensor x = shepp_logan(16, 16);
  Mask m = full_mask(16, 16);
  Tensor y = forward(x, m);
  TvConfig cfg;
  cfg.lambda = 1e8;
  cfg.step = 10.0;
  cfg.max_backtracks = 0;  // forbid the rescue halvings
  try {
    tv_reconstruct(y, m, cfg);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(!e.objective_trace.empty());
  }
}

TEST_CASE("objective trace CSV") {
  Tensor x = shepp_logan(16, 16);
  Mask m = full_mask(16, 16);
  TvConfig cfg;
  cfg.iters = 3;
  TvResult r = tv_reconstruct(forward(x, m), m, cfg);
  write_objective_csv(r, "t_trace.csv");
  std::ifstream in("t_trace.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,objective,data_term,tv_term");
}

TEST_CASE("dictionary reconstruction recovers a spanned image under full sampling") {
  // image built from two known atoms
  const size_t hw = 12;
  Tensor x = Tensor::zeros({hw, hw});
  for (size_t i = 0; i < hw; ++i)
    for (size_t j = 0; j < hw; ++j)
      x.at({i, j}) = 0.4 + 0.3 * ((i / 3 + j / 3) % 2 == 0 ? 1.0 : 0.0);
  Mask full = full_mask(hw, hw);
  DictConfig cfg;
  cfg.patch = 4;
  cfg.atoms = 16;
  cfg.sparsity = 2;
  cfg.outer_iters = 2;
  Tensor rec = dict_reconstruct(forward(x, full), full, cfg);
  CHECK(max_abs_diff(rec, x) < 1e-8);
}

TEST_CASE("sparsity 0 degenerates to the zero-filled image") {
  Tensor x = shepp_logan(24, 24);
  Mask m = make_mask(MaskScheme::cartesian, 24, 24, 2.0, 0.1, 2);
  Tensor y = forward(x, m);
  DictConfig cfg;
  cfg.patch = 4;
  cfg.atoms = 16;
  cfg.sparsity = 0;
  cfg.outer_iters = 3;
  Tensor rec = dict_reconstruct(y, m, cfg);
  CHECK(max_abs_diff(rec, real(zero_fill(y))) < 1e-12);
}

TEST_CASE("dictionary recon does not lose to zero-fill on a blocky phantom") {
  const size_t hw = 32;
  Tensor x = Tensor::zeros({hw, hw});
  for (size_t i = 8; i < 24; ++i)
    for (size_t j = 8; j < 24; ++j) x.at({i, j}) = 0.8;
  for (size_t i = 12; i < 20; ++i)
    for (size_t j = 12; j < 20; ++j) x.at({i, j}) = 0.3;
  Mask m = make_mask(MaskScheme::cartesian, hw, hw, 2.0, 0.08, 4);
  Tensor y = forward(x, m);
  Tensor zf = clamp(abs(zero_fill(y)), 0.0, 1.0);
  DictConfig cfg;
  Tensor rec = clamp(dict_reconstruct(y, m, cfg), 0.0, 1.0);
  CHECK(psnr(rec, x) >= psnr(zf, x));
}

TEST_CASE("dictionary columns stay unit-norm through the updates") {
  Tensor x = shepp_logan(24, 24);
  Mask m = make_mask(MaskScheme::radial, 24, 24, 0.4, 0.08, 6);
  DictConfig cfg;
  cfg.patch = 4;
  cfg.atoms = 24;
  cfg.outer_iters = 3;
  DictResult r = dict_reconstruct_full(forward(x, m), m, cfg);
  const size_t P = cfg.patch * cfg.patch;
  for (size_t k = 0; k < cfg.atoms; ++k) {
    double n = 0;
    for (size_t i = 0; i < P; ++i) {
      double v = r.dictionary.at({i, k});
      n += v * v;
    }
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-10);
  }
}
