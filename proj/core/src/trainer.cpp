#include "mrigan/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mrigan/io.hpp"

namespace mrigan {

// ---- Adam ---------------------------------------------------------------------------

Adam::Adam(std::vector<ad::ParamPtr> params, double lr, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (lr_ < 0) throw ParamError("Adam: lr must be non-negative");  // 0 freezes
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(Tensor::zeros(p->value.shape()));
    v_.push_back(Tensor::zeros(p->value.shape()));
  }
}

void adam_step(const std::vector<ad::ParamPtr>& params, std::vector<Tensor>& m,
               std::vector<Tensor>& v, int t, double lr, double beta1,
               double beta2, double eps) {
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    ad::Param& p = *params[i];
    if (p.grad.empty()) continue;
    for (size_t j = 0; j < p.value.numel(); ++j) {
      const double g = p.grad.r(j);
      m[i].r(j) = beta1 * m[i].r(j) + (1.0 - beta1) * g;
      v[i].r(j) = beta2 * v[i].r(j) + (1.0 - beta2) * g * g;
      const double mhat = m[i].r(j) / bc1;
      const double vhat = v[i].r(j) / bc2;
      p.value.r(j) -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void Adam::step() {
  ++t_;
  adam_step(params_, m_, v_, t_, lr_, beta1_, beta2_, eps_);
}

void Adam::save_into(std::map<std::string, Tensor>& out) const {
  for (size_t i = 0; i < params_.size(); ++i) {
    out.emplace("adam/" + params_[i]->name + "/m", m_[i]);
    out.emplace("adam/" + params_[i]->name + "/v", v_[i]);
  }
  out.emplace("adam/" + (params_.empty() ? std::string("empty") : params_[0]->name) + "/t",
              Tensor::from({1}, {static_cast<double>(t_)}));
}

void Adam::load_from(const std::map<std::string, Tensor>& in) {
  for (size_t i = 0; i < params_.size(); ++i) {
    auto mi = in.find("adam/" + params_[i]->name + "/m");
    auto vi = in.find("adam/" + params_[i]->name + "/v");
    if (mi == in.end() || vi == in.end())
      throw ContractError("checkpoint missing Adam moments for " + params_[i]->name);
    m_[i] = mi->second;
    v_[i] = vi->second;
  }
  auto ti = in.find("adam/" + (params_.empty() ? std::string("empty") : params_[0]->name) + "/t");
  if (ti == in.end()) throw ContractError("checkpoint missing Adam step counter");
  t_ = static_cast<int>(ti->second.r(0));
}

// ---- checkpoints ----------------------------------------------------------------------

void save_checkpoint(GanModel& gan, const Adam& opt_g, const Adam& opt_d,
                     int step, const std::string& path) {
  std::map<std::string, Tensor> entries = gan.gen_params().state();
  for (auto& [k, t] : gan.disc_params().state()) entries.emplace(k, t);
  opt_g.save_into(entries);
  opt_d.save_into(entries);
  entries.emplace("meta/step", Tensor::from({1}, {static_cast<double>(step)}));
  save_mbc(entries, path);
}

int load_checkpoint(GanModel& gan, Adam& opt_g, Adam& opt_d,
                    const std::string& path) {
  auto entries = load_mbc(path);
  gan.gen_params().load_state(entries);
  gan.disc_params().load_state(entries);
  opt_g.load_from(entries);
  opt_d.load_from(entries);
  auto it = entries.find("meta/step");
  if (it == entries.end()) throw ContractError("checkpoint missing meta/step");
  return static_cast<int>(it->second.r(0));
}

// ---- training loop ----------------------------------------------------------------------

namespace {

std::vector<size_t> draw_indices(uint64_t seed, int step, uint64_t tag,
                                 size_t batch, size_t n) {
  Rng rng = Rng(seed).derive("data").derive(static_cast<uint64_t>(step)).derive(tag);
  std::vector<size_t> idx(batch);
  for (auto& i : idx) i = static_cast<size_t>(rng.uniform_int(n));
  return idx;
}

struct GenLoss {
  ad::Var total;
  LossRow row;
};

GenLoss generator_loss(GanModel& gan, const Batch& b, const TrainConfig& cfg,
                       const FeatureExtractor* fx, int step) {
  GenForward fwd = gan.generator(b, ad::Mode::train);
  LossParts parts;
  switch (gan.family()) {
    case GanFamily::dagan:
      parts.imse = l_imse(b.target, fwd.recon);
      parts.fmse = l_fmse(b.target, fwd.recon);
      if (fx) parts.perc = l_perceptual(b.target, fwd.recon, *fx);
      break;
    case GanFamily::kigan:
      parts.imse = l_imse(b.target, fwd.recon);
      parts.fmse = l_fmse_k(b.target_k, fwd.pred_k);
      break;
    case GanFamily::recon_refine:
      // both checkpoints contribute their image-domain losses
      parts.imse = ad::add(l_imse(b.target, fwd.recon_mid),
                           l_imse(b.target, fwd.recon));
      parts.fmse = ad::add(l_fmse(b.target, fwd.recon_mid),
                           l_fmse(b.target, fwd.recon));
      break;
  }
  ad::Var d_fake = gan.discriminate(gan.disc_input(fwd), ad::Mode::train);
  parts.adv = l_adv_g(d_fake, cfg.saturating_adv);
  GenLoss out;
  out.total = l_total(gan.family(), cfg.weights, parts);
  out.row.step = step;
  out.row.imse = parts.imse ? parts.imse->value.r(0) : 0.0;
  out.row.fmse = parts.fmse ? parts.fmse->value.r(0) : 0.0;
  out.row.perc = parts.perc ? parts.perc->value.r(0) : 0.0;
  out.row.adv_g = parts.adv->value.r(0);
  out.row.total = out.total->value.r(0);
  return out;
}

}  // namespace

TrainState train(GanModel& gan, const std::vector<AcqPair>& data,
                 const TrainConfig& cfg, const std::vector<AcqPair>* validation) {
  if (cfg.steps <= 0 || cfg.batch_size == 0 || cfg.d_steps_per_g_step <= 0)
    throw ParamError("train: counts must be positive");
  if (data.empty()) throw ParamError("train: empty dataset");

  Adam opt_g(gan.gen_params().trainable(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  Adam opt_d(gan.disc_params().trainable(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);

  TrainState state;
  int start_step = 0;
  if (!cfg.resume_from.empty())
    start_step = load_checkpoint(gan, opt_g, opt_d, cfg.resume_from);

  std::optional<FeatureExtractor> fx;
  if (gan.family() == GanFamily::dagan && cfg.weights.gamma > 0)
    fx = FeatureExtractor::random_conv(1, cfg.fx_seed);

  int stale_evals = 0;
  for (int step = start_step; step < cfg.steps; ++step) {
    double adv_d_val = 0.0;
    for (int k = 0; k < cfg.d_steps_per_g_step; ++k) {
      Batch b = assemble_batch(gan.family(), data,
                               draw_indices(cfg.seed, step, 1000 + k,
                                            cfg.batch_size, data.size()));
      GenForward fwd = gan.generator(b, ad::Mode::train);
      ad::Var fake = ad::detach(gan.disc_input(fwd));
      ad::Var d_real = gan.discriminate(ad::constant(gan.disc_real(b)), ad::Mode::train);
      ad::Var d_fake = gan.discriminate(fake, ad::Mode::train);
      if (!d_real->value.all_finite() || !d_fake->value.all_finite()) {
        save_checkpoint(gan, opt_g, opt_d, step, "train_abort_dump.mbc");
        throw SolverError("train: non-finite discriminator output at step " +
                              std::to_string(step),
                          {});
      }
      ad::Var loss_d = l_adv_d(d_real, d_fake);
      adv_d_val = loss_d->value.r(0);
      if (!std::isfinite(adv_d_val)) {
        save_checkpoint(gan, opt_g, opt_d, step, "train_abort_dump.mbc");
        throw SolverError("train: non-finite discriminator loss at step " +
                              std::to_string(step),
                          {});
      }
      ad::backprop(loss_d);
      opt_d.step();
    }

    Batch b = assemble_batch(gan.family(), data,
                             draw_indices(cfg.seed, step, 2000,
                                          cfg.batch_size, data.size()));
    GenLoss gl = generator_loss(gan, b, cfg, fx ? &*fx : nullptr, step);
    gl.row.adv_d = adv_d_val;
    if (!std::isfinite(gl.row.total)) {
      save_checkpoint(gan, opt_g, opt_d, step, "train_abort_dump.mbc");
      throw SolverError("train: non-finite generator loss at step " +
                            std::to_string(step),
                        {});
    }
    ad::backprop(gl.total);
    opt_g.step();
    state.curve.push_back(gl.row);
    state.step = step + 1;

    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0) {
      std::filesystem::create_directories(cfg.checkpoint_dir.empty()
                                              ? "."
                                              : cfg.checkpoint_dir);
      std::string dir = cfg.checkpoint_dir.empty() ? "." : cfg.checkpoint_dir;
      save_checkpoint(gan, opt_g, opt_d, step + 1,
                      dir + "/ckpt_" + std::to_string(step + 1) + ".mbc");
    }

    if (cfg.eval_every > 0 && validation && (step + 1) % cfg.eval_every == 0) {
      MetricsReport rep = evaluate(gan, *validation);
      double p = rep.psnr().mean;
      if (p > state.best_val_psnr) {
        state.best_val_psnr = p;
        state.best_val_step = step + 1;
        stale_evals = 0;
      } else if (++stale_evals >= cfg.patience) {
        state.early_stopped = true;
        break;
      }
    }
  }
  return state;
}

void write_loss_csv(const TrainState& state, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << "step,l_imse,l_fmse,l_perc,l_adv_g,l_adv_d,l_total\n";
  for (const LossRow& r : state.curve)
    out << r.step << ',' << fmt_fixed(r.imse, 9) << ',' << fmt_fixed(r.fmse, 9)
        << ',' << fmt_fixed(r.perc, 9) << ',' << fmt_fixed(r.adv_g, 9) << ','
        << fmt_fixed(r.adv_d, 9) << ',' << fmt_fixed(r.total, 9) << '\n';
}

// ---- evaluation ----------------------------------------------------------------------

MetricsReport evaluate(GanModel& gan, const std::vector<AcqPair>& test,
                       const EvalConfig& cfg) {
  if (test.empty()) throw ParamError("evaluate: empty test set");
  MetricsReport rep;
  std::vector<Tensor> recs, gts;
  for (size_t i = 0; i < test.size(); ++i) {
    Batch b = assemble_batch(gan.family(), test, {i});
    Tensor rec = gan.reconstruct(b, cfg.mid_checkpoint)[0];
    Tensor gt = clamp(abs(test[i].x_t), 0.0, 1.0);
    rep.add_image(psnr(rec, gt), ssim(rec, gt), rmse(rec, gt));
    if (cfg.with_fid) {
      recs.push_back(rec.reshaped({1, 1, rec.extent(0), rec.extent(1)}));
      gts.push_back(gt.reshaped({1, 1, gt.extent(0), gt.extent(1)}));
    }
  }
  if (cfg.with_fid)
    rep.fid_value = fid(recs, gts, FeatureExtractor::random_conv(1, cfg.fx_seed));
  return rep;
}

double validation_imse(GanModel& gan, const std::vector<AcqPair>& data,
                       bool mid_checkpoint) {
  if (data.empty()) throw ParamError("validation_imse: empty dataset");
  double acc = 0.0;
  for (size_t i = 0; i < data.size(); ++i) {
    Batch b = assemble_batch(gan.family(), data, {i});
    GenForward fwd = gan.generator(b, ad::Mode::eval);
    const ad::Var& out = mid_checkpoint && fwd.recon_mid ? fwd.recon_mid : fwd.recon;
    Tensor diff = sub(out->value, b.target);
    double n2 = l2norm(diff);
    acc += 0.5 * n2 * n2;
  }
  return acc / static_cast<double>(data.size());
}

}  // namespace mrigan
