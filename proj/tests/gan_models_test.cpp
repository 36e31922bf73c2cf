#include <cmath>

#include "doctest.h"
#include "mrigan/gan_models.hpp"

using namespace mrigan;

namespace {

ModelSpec test_spec(GanFamily fam, size_t image = 32, size_t depth = 3,
                    size_t base = 8, uint64_t seed = 1) {
  ModelSpec s;
  s.family = fam;
  s.depth = depth;
  s.base_channels = base;
  s.image_size = image;
  s.seed = seed;
  return s;
}

void zero_heads(GanModel& m) {
  for (const auto& p : m.head_params()) p->value = Tensor::zeros(p->value.shape());
}

std::vector<AcqPair> phantom_pairs(size_t n, size_t hw, const Mask& mask,
                                   uint64_t seed) {
  std::vector<AcqPair> out;
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i) {
    Tensor base = shepp_logan(hw, hw);
    Tensor jit = Tensor::randn({hw, hw}, rng, 0.01);
    out.push_back(acquire(clamp(add(base, jit), 0.0, 1.0), mask));
  }
  return out;
}

}  // namespace

TEST_CASE("spec validation") {
  ModelSpec s = test_spec(GanFamily::dagan, 48);
  CHECK_THROWS_AS(resolve_spec(s), ParamError);  // not a power of two
  s.image_size = 4;
  s.depth = 3;
  CHECK_THROWS_AS(resolve_spec(s), ParamError);  // < 2^depth
  ModelSpec d;
  d.family = GanFamily::dagan;
  ModelSpec r = resolve_spec(d);
  CHECK(r.depth == 8);
  CHECK(r.base_channels == 64);
  CHECK(r.image_size == 256);
  CHECK_THROWS_AS(build_dagan(test_spec(GanFamily::kigan)), ParamError);
}

TEST_CASE("dagan zero-headed generator is the identity pre-clamp") {
  auto model = build_dagan(test_spec(GanFamily::dagan));
  zero_heads(*model);
  Mask m = make_mask(MaskScheme::cartesian, 32, 32, 4.0, 0.08, 2);
  auto pairs = phantom_pairs(2, 32, m, 3);
  Batch b = assemble_batch(GanFamily::dagan, pairs, {0, 1});
  GenForward fwd = model->generator(b, ad::Mode::eval);
  CHECK(max_abs_diff(fwd.recon_pre->value, b.input) < 1e-12);
  CHECK(max_abs_diff(fwd.recon->value, clamp(b.input, -1.0, 1.0)) < 1e-12);
}

TEST_CASE("dagan shapes and discriminator range") {
  auto model = build_dagan(test_spec(GanFamily::dagan));
  Mask m = make_mask(MaskScheme::cartesian, 32, 32, 4.0, 0.08, 2);
  auto pairs = phantom_pairs(3, 32, m, 4);
  Batch b = assemble_batch(GanFamily::dagan, pairs, {0, 1, 2});
  GenForward fwd = model->generator(b, ad::Mode::train);
  CHECK(fwd.recon->value.shape() == std::vector<size_t>{3, 1, 32, 32});
  for (size_t i = 0; i < fwd.recon->value.numel(); ++i) {
    CHECK(fwd.recon->value.r(i) >= -1.0);
    CHECK(fwd.recon->value.r(i) <= 1.0);
  }
  ad::Var d = model->discriminate(model->disc_input(fwd), ad::Mode::train);
  CHECK(d->value.shape() == std::vector<size_t>{3, 1});
  for (size_t i = 0; i < 3; ++i) {
    CHECK(d->value.r(i) > 0.0);
    CHECK(d->value.r(i) < 1.0);
  }
}

TEST_CASE("kigan pipeline: exact k-space oracle plus zero head recovers x_t") {
  auto spec = test_spec(GanFamily::kigan);
  KiganModel model(spec);
  for (const auto& p : model.head_params()) p->value = Tensor::zeros(p->value.shape());

  Mask m = make_mask(MaskScheme::radial, 32, 32, 0.3, 0.08, 5);
  auto pairs = phantom_pairs(3, 32, m, 6);
  Batch b = assemble_batch(GanFamily::kigan, pairs, {1});

  // oracle: the exact fully sampled k-space of the centre slice
  Tensor oracle = Tensor::zeros({1, 2, 32, 32});
  Tensor f = fft2(pairs[1].x_t);
  for (size_t i = 0; i < f.numel(); ++i) {
    oracle.r(i) = f.c(i).real();
    oracle.r(f.numel() + i) = f.c(i).imag();
  }
  GenForward fwd = model.recon_from_pred_k(ad::constant(oracle), b, ad::Mode::eval);
  CHECK(max_abs_diff(fwd.recon->value, b.target) < 1e-12);
  CHECK(max_abs_diff(fwd.pred_k->value, oracle) < 1e-12);
}

TEST_CASE("kigan data consistency ignores the prediction under a full mask") {
  KiganModel model(test_spec(GanFamily::kigan));
  Mask full = full_mask(32, 32);
  auto pairs = phantom_pairs(3, 32, full, 7);
  Batch b = assemble_batch(GanFamily::kigan, pairs, {1});
  Rng rng(1);
  Tensor junk1 = Tensor::randn({1, 2, 32, 32}, rng);
  Tensor junk2 = Tensor::randn({1, 2, 32, 32}, rng);
  GenForward a = model.recon_from_pred_k(ad::constant(junk1), b, ad::Mode::eval);
  GenForward c = model.recon_from_pred_k(ad::constant(junk2), b, ad::Mode::eval);
  CHECK(max_abs_diff(a.pred_k->value, c.pred_k->value) == 0.0);
}

TEST_CASE("kigan end-to-end shapes from 3 slices") {
  auto model = build_kigan(test_spec(GanFamily::kigan));
  Mask m = make_mask(MaskScheme::spiral, 32, 32, 0.3, 0.08, 8);
  auto pairs = phantom_pairs(3, 32, m, 9);
  Batch b = assemble_batch(GanFamily::kigan, pairs, {0, 1, 2});
  CHECK(b.input.shape() == std::vector<size_t>{3, 6, 32, 32});
  GenForward fwd = model->generator(b, ad::Mode::train);
  CHECK(fwd.recon->value.shape() == std::vector<size_t>{3, 2, 32, 32});
  auto recs = model->reconstruct(b, false);
  CHECK(recs.size() == 3);
  CHECK(recs[0].shape() == std::vector<size_t>{32, 32});

  std::vector<AcqPair> two(pairs.begin(), pairs.begin() + 2);
  CHECK_THROWS_AS(assemble_batch(GanFamily::kigan, two, {0}), ParamError);
}

TEST_CASE("recon/refine zero-headed generators are the identity") {
  auto model = build_recon_refine(test_spec(GanFamily::recon_refine));
  zero_heads(*model);
  Mask m = make_mask(MaskScheme::cartesian, 32, 32, 2.0, 0.08, 3);
  auto pairs = phantom_pairs(2, 32, m, 10);
  Batch b = assemble_batch(GanFamily::recon_refine, pairs, {0, 1});
  GenForward fwd = model->generator(b, ad::Mode::eval);
  CHECK(max_abs_diff(fwd.recon_mid->value, b.input) < 1e-12);
  CHECK(max_abs_diff(fwd.recon->value, b.input) < 1e-12);
}

TEST_CASE("residual block with zeroed convs is the identity") {
  ad::ParamSet ps;
  Rng root(3);
  models::ResBlock res(ps, "res", 4, root);
  for (auto name : {"res/c1/w", "res/c1/b", "res/c2/w", "res/c2/b", "res/c3/w",
                    "res/c3/b"}) {
    auto p = ps.find(name);
    REQUIRE(p);
    p->value = Tensor::zeros(p->value.shape());
  }
  Rng rng(5);
  Tensor x = Tensor::randn({2, 4, 8, 8}, rng);
  for (auto mode : {ad::Mode::train, ad::Mode::eval}) {
    ad::Var y = res(ad::constant(x), mode);
    CHECK(max_abs_diff(y->value, x) < 1e-12);
  }
}

TEST_CASE("parameter count grows from test scale to the published scale") {
  auto small = build_recon_refine(test_spec(GanFamily::recon_refine));
  ModelSpec published;
  published.family = GanFamily::recon_refine;  // defaults: 4 blocks, base 64
  auto full = build_recon_refine(published);
  CHECK(full->parameter_count() > small->parameter_count());
}

TEST_CASE("discriminator probabilities stay in (0,1) across families") {
  Rng rng(31);
  for (auto fam : {GanFamily::dagan, GanFamily::kigan, GanFamily::recon_refine}) {
    auto model = build_gan(test_spec(fam));
    size_t ch = fam == GanFamily::dagan ? 1 : fam == GanFamily::kigan ? 1 : 2;
    Tensor x = Tensor::randn({4, ch, 32, 32}, rng);
    ad::Var d = model->discriminate(ad::constant(x), ad::Mode::train);
    for (size_t i = 0; i < d->value.numel(); ++i) {
      CHECK(d->value.r(i) > 0.0);
      CHECK(d->value.r(i) < 1.0);
    }
  }
}

TEST_CASE("built models are differentiable end to end") {
  // tiny scale keeps the finite-difference loop affordable
  for (auto fam : {GanFamily::dagan, GanFamily::kigan, GanFamily::recon_refine}) {
    auto model = build_gan(test_spec(fam, 8, 2, 2, 7));
    Mask m = make_mask(MaskScheme::cartesian, 8, 8, 2.0, 0.1, 1);
    auto pairs = phantom_pairs(3, 8, m, 11);
    Batch b = assemble_batch(fam, pairs, {0});
    auto f = [&] {
      GenForward fwd = model->generator(b, ad::Mode::train);
      return l_imse(b.target, fwd.recon);
    };
    // a slice of parameters from each depth of the generator
    auto all = model->gen_params().trainable();
    std::vector<ad::ParamPtr> probe;
    for (size_t i = 0; i < all.size(); i += std::max<size_t>(1, all.size() / 5))
      probe.push_back(all[i]);
    auto rep = ad::gradcheck(f, probe, 1e-6, 6);
    INFO("family " << to_string(fam) << " worst " << rep.worst_coord);
    CHECK(rep.max_rel_err < 1e-4);
  }
}

TEST_CASE("assemble_batch representations") {
  Mask m = make_mask(MaskScheme::cartesian, 32, 32, 2.0, 0.08, 12);
  auto pairs = phantom_pairs(3, 32, m, 12);

  Batch d = assemble_batch(GanFamily::dagan, pairs, {0});
  for (size_t i = 0; i < d.input.numel(); ++i) {
    CHECK(d.input.r(i) >= -1.0);
    CHECK(d.input.r(i) <= 1.0);
  }
  // target is the ground-truth magnitude mapped to [-1,1]
  Tensor gt = clamp(abs(pairs[0].x_t), 0.0, 1.0);
  for (size_t i = 0; i < gt.numel(); ++i)
    CHECK(d.target.r(i) == doctest::Approx(2.0 * gt.r(i) - 1.0));

  Batch rr = assemble_batch(GanFamily::recon_refine, pairs, {0});
  Tensor zf = zero_fill(pairs[0].y_u);
  for (size_t i = 0; i < zf.numel(); ++i) {
    CHECK(rr.input.r(i) == zf.c(i).real());
    CHECK(rr.input.r(zf.numel() + i) == zf.c(i).imag());
  }
}
