#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "mrigan/trainer.hpp"

using namespace mrigan;

namespace {

ad::ParamPtr make_param(const std::string& name, Tensor v) {
  return std::make_shared<ad::Param>(name, std::move(v));
}

ModelSpec tiny_spec(GanFamily fam, uint64_t seed = 1) {
  ModelSpec s;
  s.family = fam;
  s.depth = 2;
  s.base_channels = 4;
  s.image_size = 16;
  s.seed = seed;
  return s;
}

std::vector<AcqPair> tiny_dataset(size_t n, size_t hw, const Mask& m, uint64_t seed) {
  std::vector<AcqPair> out;
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i) {
    Tensor base = shepp_logan(hw, hw);
    out.push_back(acquire(clamp(add(base, Tensor::randn({hw, hw}, rng, 0.02)), 0.0, 1.0), m));
  }
  return out;
}

TrainConfig tiny_train(int steps, uint64_t seed = 1) {
  TrainConfig t;
  t.steps = steps;
  t.batch_size = 2;
  t.lr = 1e-3;
  t.seed = seed;
  t.weights = default_weights(GanFamily::dagan);
  return t;
}

std::vector<double> snapshot(const std::vector<ad::ParamPtr>& ps) {
  std::vector<double> out;
  for (const auto& p : ps)
    out.insert(out.end(), p->value.raw().begin(), p->value.raw().end());
  return out;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  auto p = make_param("p", Tensor::from({3}, {1.0, -2.0, 3.0}));
  Tensor before = p->value;
  p->zero_grad();
  Adam opt({p}, 0.1, 0.9, 0.999, 1e-8);
  opt.step();
  CHECK(p->value.raw() == before.raw());
}

TEST_CASE("adam: first step with constant gradient moves by -lr*g/(|g|+eps)") {
  auto p = make_param("p", Tensor::from({3}, {0.0, 0.0, 0.0}));
  p->zero_grad();
  p->grad = Tensor::from({3}, {0.5, -2.0, 1e-3});
  const double lr = 0.01, eps = 1e-8;
  Adam opt({p}, lr, 0.9, 0.999, eps);
  opt.step();
  for (size_t i = 0; i < 3; ++i) {
    double g = (i == 0 ? 0.5 : i == 1 ? -2.0 : 1e-3);
    CHECK(p->value.r(i) ==
          doctest::Approx(-lr * g / (std::abs(g) + eps)).epsilon(1e-12));
  }
}

TEST_CASE("training is bit-deterministic under a fixed seed") {
  Mask m = make_mask(MaskScheme::cartesian, 16, 16, 2.0, 0.1, 4);
  auto data = tiny_dataset(4, 16, m, 5);
  auto run = [&] {
    auto model = build_dagan(tiny_spec(GanFamily::dagan, 9));
    train(*model, data, tiny_train(5, 7));
    return snapshot(model->gen_params().all());
  };
  CHECK(run() == run());
}

TEST_CASE("frozen networks keep the losses constant across steps") {
  Mask m = make_mask(MaskScheme::cartesian, 16, 16, 2.0, 0.1, 4);
  auto data = tiny_dataset(1, 16, m, 6);  // single item: every batch identical
  auto model = build_dagan(tiny_spec(GanFamily::dagan, 2));
  TrainConfig cfg = tiny_train(4);
  cfg.lr = 0.0;
  cfg.batch_size = 1;
  cfg.d_steps_per_g_step = 1;
  TrainState st = train(*model, data, cfg);
  REQUIRE(st.curve.size() == 4);
  for (size_t i = 1; i < st.curve.size(); ++i) {
    CHECK(st.curve[i].total == doctest::Approx(st.curve[0].total).epsilon(1e-12));
    CHECK(st.curve[i].adv_d == doctest::Approx(st.curve[0].adv_d).epsilon(1e-12));
  }
}

TEST_CASE("resume from checkpoint reproduces the uninterrupted run bit-exactly") {
  Mask m = make_mask(MaskScheme::cartesian, 16, 16, 2.0, 0.1, 4);
  auto data = tiny_dataset(3, 16, m, 8);

  TrainConfig cfg = tiny_train(8, 21);
  cfg.checkpoint_every = 4;
  cfg.checkpoint_dir = "t_ckpt";
  auto full_model = build_dagan(tiny_spec(GanFamily::dagan, 33));
  train(*full_model, data, cfg);
  auto expect = snapshot(full_model->gen_params().all());
  auto expect_d = snapshot(full_model->disc_params().all());

  TrainConfig resume_cfg = tiny_train(8, 21);
  resume_cfg.resume_from = "t_ckpt/ckpt_4.mbc";
  auto resumed = build_dagan(tiny_spec(GanFamily::dagan, 99));  // different init
  train(*resumed, data, resume_cfg);
  CHECK(snapshot(resumed->gen_params().all()) == expect);
  CHECK(snapshot(resumed->disc_params().all()) == expect_d);
}

TEST_CASE("optimizer updates stay within their own parameter set") {
  Mask m = make_mask(MaskScheme::cartesian, 16, 16, 2.0, 0.1, 4);
  auto data = tiny_dataset(2, 16, m, 3);
  auto model = build_dagan(tiny_spec(GanFamily::dagan, 5));
  auto gen_before = snapshot(model->gen_params().trainable());
  auto disc_before = snapshot(model->disc_params().trainable());

  // one discriminator update only
  Adam opt_d(model->disc_params().trainable(), 1e-3, 0.5, 0.999, 1e-8);
  Batch b = assemble_batch(GanFamily::dagan, data, {0, 1});
  GenForward fwd = model->generator(b, ad::Mode::train);
  ad::Var loss_d = l_adv_d(
      model->discriminate(ad::constant(model->disc_real(b)), ad::Mode::train),
      model->discriminate(ad::detach(model->disc_input(fwd)), ad::Mode::train));
  ad::backprop(loss_d);
  opt_d.step();
  CHECK(snapshot(model->gen_params().trainable()) == gen_before);
  CHECK(snapshot(model->disc_params().trainable()) != disc_before);

  // one generator update only
  auto disc_mid = snapshot(model->disc_params().trainable());
  Adam opt_g(model->gen_params().trainable(), 1e-3, 0.5, 0.999, 1e-8);
  GenForward fwd2 = model->generator(b, ad::Mode::train);
  ad::Var loss_g = ad::add(
      l_imse(b.target, fwd2.recon),
      l_adv_g(model->discriminate(model->disc_input(fwd2), ad::Mode::train)));
  ad::backprop(loss_g);
  opt_g.step();
  CHECK(snapshot(model->disc_params().trainable()) == disc_mid);
  CHECK(snapshot(model->gen_params().trainable()) != gen_before);
}

TEST_CASE("pure reconstruction training drives the iMSE down") {
  Mask m = make_mask(MaskScheme::cartesian, 16, 16, 2.0, 0.1, 4);
  auto data = tiny_dataset(6, 16, m, 10);
  auto model = build_dagan(tiny_spec(GanFamily::dagan, 11));
  double before = validation_imse(*model, data);
  TrainConfig cfg = tiny_train(40, 2);
  cfg.weights = LossWeights{15.0, 0.1, 0.0, 0.0};  // no adversarial term
  train(*model, data, cfg);
  double after = validation_imse(*model, data);
  CHECK(after < before);
}

TEST_CASE("identity generator on the full mask evaluates to capped PSNR") {
  Mask full = full_mask(16, 16);
  auto data = tiny_dataset(3, 16, full, 12);
  auto model = build_dagan(tiny_spec(GanFamily::dagan, 13));
  for (const auto& p : model->head_params()) p->value = Tensor::zeros(p->value.shape());
  MetricsReport rep = evaluate(*model, data);
  REQUIRE(rep.psnr_values.size() == 3);
  for (double p : rep.psnr_values) CHECK(p > kPsnrCap);  // fp-roundtrip exactness
  CHECK(rep.psnr().mean == doctest::Approx(kPsnrCap));
}

TEST_CASE("evaluating twice yields identical reports") {
  Mask m = make_mask(MaskScheme::radial, 16, 16, 0.4, 0.1, 9);
  auto data = tiny_dataset(4, 16, m, 14);
  auto model = build_dagan(tiny_spec(GanFamily::dagan, 15));
  EvalConfig ec;
  ec.with_fid = true;
  MetricsReport a = evaluate(*model, data, ec);
  MetricsReport b = evaluate(*model, data, ec);
  CHECK(a.psnr_values == b.psnr_values);
  CHECK(a.ssim_values == b.ssim_values);
  CHECK(a.rmse_values == b.rmse_values);
  CHECK(*a.fid_value == *b.fid_value);
}

TEST_CASE("non-finite loss aborts with a diagnostic dump") {
  Mask m = make_mask(MaskScheme::cartesian, 16, 16, 2.0, 0.1, 4);
  auto data = tiny_dataset(2, 16, m, 16);
  auto model = build_dagan(tiny_spec(GanFamily::dagan, 17));
  // poison one discriminator weight so its output turns NaN
  auto params = model->disc_params().trainable();
  params[0]->value.r(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train(*model, data, tiny_train(2)), SolverError);
  CHECK(std::ifstream("train_abort_dump.mbc").good());
  std::remove("train_abort_dump.mbc");
}

TEST_CASE("loss curve CSV format") {
  Mask m = make_mask(MaskScheme::cartesian, 16, 16, 2.0, 0.1, 4);
  auto data = tiny_dataset(2, 16, m, 18);
  auto model = build_dagan(tiny_spec(GanFamily::dagan, 19));
  TrainState st = train(*model, data, tiny_train(3));
  write_loss_csv(st, "t_loss.csv");
  std::ifstream in("t_loss.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,l_imse,l_fmse,l_perc,l_adv_g,l_adv_d,l_total");
  size_t rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("early stopping halts after a validation plateau") {
  Mask m = make_mask(MaskScheme::cartesian, 16, 16, 2.0, 0.1, 4);
  auto data = tiny_dataset(2, 16, m, 22);
  auto model = build_dagan(tiny_spec(GanFamily::dagan, 23));
  TrainConfig cfg = tiny_train(50);
  cfg.lr = 0.0;  // frozen: validation PSNR can never improve
  cfg.eval_every = 1;
  cfg.patience = 3;
  TrainState st = train(*model, data, cfg, &data);
  CHECK(st.early_stopped);
  CHECK(st.step < 50);
}

TEST_CASE("training rejects invalid configs") {
  Mask m = make_mask(MaskScheme::cartesian, 16, 16, 2.0, 0.1, 4);
  auto data = tiny_dataset(2, 16, m, 20);
  auto model = build_dagan(tiny_spec(GanFamily::dagan, 21));
  TrainConfig bad = tiny_train(0);
  CHECK_THROWS_AS(train(*model, data, bad), ParamError);
  CHECK_THROWS_AS(train(*model, {}, tiny_train(1)), ParamError);
}
