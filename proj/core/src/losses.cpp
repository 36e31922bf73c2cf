#include "mrigan/losses.hpp"

#include <cmath>

#include "mrigan/rng.hpp"

namespace mrigan {

std::string to_string(GanFamily f) {
  switch (f) {
    case GanFamily::dagan: return "dagan";
    case GanFamily::kigan: return "kigan";
    case GanFamily::recon_refine: return "recon_refine";
  }
  return "?";
}

LossWeights default_weights(GanFamily family) {
  LossWeights w;  // dagan values
  switch (family) {
    case GanFamily::dagan: break;
    case GanFamily::kigan:
      w.gamma = 0.0;
      break;
    case GanFamily::recon_refine:
      w.alpha = 10.0;
      w.gamma = 0.0;
      break;
  }
  return w;
}

// ---- feature extractor ---------------------------------------------------------

FeatureExtractor::FeatureExtractor(Kind k, uint64_t seed, size_t in_channels)
    : kind_(k), seed_(seed), in_channels_(in_channels) {
  if (kind_ == Kind::random_conv) {
    const size_t widths[4] = {in_channels, 16, 32, 64};
    Rng root(seed);
    for (int l = 0; l < 3; ++l) {
      Rng rng = root.derive("fx/conv" + std::to_string(l) + "/w");
      double stddev = std::sqrt(2.0 / static_cast<double>(widths[l] * 9));
      kernels_.push_back(Tensor::randn({widths[l + 1], widths[l], 3, 3}, rng, stddev));
    }
  }
}

FeatureExtractor FeatureExtractor::identity() {
  return FeatureExtractor(Kind::identity, 0, 1);
}

FeatureExtractor FeatureExtractor::random_conv(size_t in_channels, uint64_t seed) {
  return FeatureExtractor(Kind::random_conv, seed, in_channels);
}

ad::Var FeatureExtractor::operator()(const ad::Var& x) const {
  if (kind_ == Kind::identity) return x;
  if (x->value.rank() != 4 || x->value.extent(1) != in_channels_)
    throw ShapeError("FeatureExtractor: input channels do not match");
  ad::Var h = x;
  for (size_t l = 0; l < kernels_.size(); ++l) {
    ad::Var w = ad::constant(kernels_[l]);
    ad::Var b = ad::constant(Tensor::zeros({kernels_[l].extent(0)}));
    h = ad::conv2d(h, w, b, 2, 1);
    if (l + 1 < kernels_.size()) h = ad::lrelu(h, 0.2);
  }
  return h;
}

std::vector<double> FeatureExtractor::embed(const Tensor& image) const {
  if (kind_ == Kind::identity) {
    std::vector<double> f(image.numel());
    for (size_t i = 0; i < image.numel(); ++i) f[i] = image.val(i).real();
    return f;
  }
  Tensor batch = image.rank() == 4
                     ? image
                     : image.reshaped({1, in_channels_, image.extent(0),
                                       image.numel() / image.extent(0) / in_channels_});
  ad::Var out = (*this)(ad::constant(batch));
  const Tensor& v = out->value;
  const size_t C = v.extent(1), plane = v.extent(2) * v.extent(3);
  std::vector<double> f(C, 0.0);
  for (size_t c = 0; c < C; ++c) {
    const double* p = v.data() + c * plane;
    for (size_t i = 0; i < plane; ++i) f[c] += p[i];
    f[c] /= static_cast<double>(plane);
  }
  return f;
}

// ---- MSE family -------------------------------------------------------------------

namespace {

double batch_count(const ad::Var& pred) {
  return pred->value.rank() == 4 ? static_cast<double>(pred->value.extent(0)) : 1.0;
}

void require_match(const Tensor& target, const ad::Var& pred, const char* op) {
  if (target.shape() != pred->value.shape())
    throw ShapeError(std::string(op) + ": target/prediction shape mismatch");
  if (target.is_complex())
    throw ShapeError(std::string(op) + ": use (re,im) channel pairs, not complex dtype");
}

ad::Var half_sse(const ad::Var& diff, double nbatch) {
  return ad::scale(ad::sum(ad::mul(diff, diff)), 0.5 / nbatch);
}

// Promote to (re,im) channel pairs: rank-2 becomes 1x1xHxW first; a single
// real channel gains a zero imaginary channel.
ad::Var as_pairs(const ad::Var& x) {
  ad::Var v = x;
  if (v->value.rank() == 2)
    v = ad::reshape(v, {1, 1, v->value.extent(0), v->value.extent(1)});
  if (v->value.rank() != 4) throw ShapeError("l_fmse: rank-2 or rank-4 input required");
  size_t c = v->value.extent(1);
  if (c == 1) {
    Tensor z = Tensor::zeros(v->value.shape());
    return ad::concat_ch(v, ad::constant(z));
  }
  if (c % 2 != 0) throw ShapeError("l_fmse: odd channel count cannot form (re,im) pairs");
  return v;
}

}  // namespace

ad::Var l_imse(const Tensor& target, const ad::Var& pred) {
  require_match(target, pred, "l_imse");
  return half_sse(ad::sub(pred, ad::constant(target)), batch_count(pred));
}

ad::Var l_fmse(const Tensor& target, const ad::Var& pred) {
  require_match(target, pred, "l_fmse");
  ad::Var pk = ad::fft2c(as_pairs(pred));
  ad::Var tk = ad::fft2c(as_pairs(ad::constant(target)));
  return half_sse(ad::sub(pk, ad::detach(tk)), batch_count(pred));
}

ad::Var l_fmse_k(const Tensor& target_k, const ad::Var& pred_k) {
  require_match(target_k, pred_k, "l_fmse_k");
  return half_sse(ad::sub(pred_k, ad::constant(target_k)), batch_count(pred_k));
}

ad::Var l_perceptual(const Tensor& target, const ad::Var& pred,
                     const FeatureExtractor& fx) {
  ad::Var fp = fx(pred);
  ad::Var ft = fx(ad::constant(target));
  if (!fp->value.same_shape(ft->value))
    throw ContractError("l_perceptual: extractor output shapes differ");
  return half_sse(ad::sub(fp, ad::detach(ft)), batch_count(pred));
}

// ---- adversarial -------------------------------------------------------------------

namespace {

constexpr double kProbEps = 1e-7;

void require_probs(const ad::Var& p, const char* who) {
  for (size_t i = 0; i < p->value.numel(); ++i) {
    double v = p->value.r(i);
    if (!(v >= 0.0 && v <= 1.0))
      throw ContractError(std::string(who) + ": probability outside [0,1]");
  }
}

ad::Var mean_log(const ad::Var& p) {
  return ad::mean(ad::log_op(ad::clamp_op(p, kProbEps, 1.0 - kProbEps)));
}

ad::Var one_minus(const ad::Var& p) {
  return ad::sub(ad::constant(Tensor::full(p->value.shape(), 1.0)), p);
}

}  // namespace

ad::Var l_adv_d(const ad::Var& d_real, const ad::Var& d_fake) {
  require_probs(d_real, "l_adv_d");
  require_probs(d_fake, "l_adv_d");
  return ad::sub(ad::scale(mean_log(d_real), -1.0), mean_log(one_minus(d_fake)));
}

ad::Var l_adv_g(const ad::Var& d_fake, bool saturating) {
  require_probs(d_fake, "l_adv_g");
  if (saturating) return mean_log(one_minus(d_fake));
  return ad::scale(mean_log(d_fake), -1.0);
}

ad::Var l_total(GanFamily family, const LossWeights& w, const LossParts& parts) {
  if (w.alpha < 0 || w.beta < 0 || w.gamma < 0 || w.adv < 0)
    throw ParamError("l_total: weights must be non-negative");
  if (w.alpha == 0 && w.beta == 0 && w.gamma == 0 && w.adv == 0)
    throw ParamError("l_total: at least one loss term must have positive weight");
  ad::Var total = ad::constant(Tensor::zeros({1}));
  auto accumulate = [&](const ad::Var& part, double weight) {
    if (part && weight != 0.0) total = ad::add(total, ad::scale(part, weight));
  };
  accumulate(parts.imse, w.alpha);
  accumulate(parts.fmse, w.beta);
  if (family == GanFamily::dagan) accumulate(parts.perc, w.gamma);
  accumulate(parts.adv, w.adv);
  return total;
}

}  // namespace mrigan
