#pragma once

#include <cstdint>
#include <vector>

#include "mrigan/autodiff.hpp"

namespace mrigan {

enum class GanFamily { dagan, kigan, recon_refine };
std::string to_string(GanFamily f);

struct LossWeights {
  double alpha = 15.0;   // image-domain MSE
  double beta = 0.1;     // frequency-domain MSE
  double gamma = 0.0025; // perceptual term (dagan only)
  double adv = 1.0;      // adversarial term
};

// Published weightings: dagan (15, 0.1, 0.0025), recon_refine (10, 0.1);
// kigan keeps the dagan pair without the perceptual term.
LossWeights default_weights(GanFamily family);

// Fixed (never trained) differentiable feature map used by the perceptual loss
// and as the FID embedder. `identity` passes the image through; `random_conv`
// is three seed-pinned random 3x3 conv layers with LReLU in between.
class FeatureExtractor {
public:
  enum class Kind { identity, random_conv };

  static FeatureExtractor identity();
  static FeatureExtractor random_conv(size_t in_channels, uint64_t seed);

  Kind kind() const { return kind_; }
  uint64_t seed() const { return seed_; }

  // Differentiable map over N x C x H x W graphs.
  ad::Var operator()(const ad::Var& x) const;
  // Fixed-length embedding for FID: flattened pixels (identity) or the
  // 64-dim global average pool of the conv stack (random_conv).
  std::vector<double> embed(const Tensor& image) const;

private:
  FeatureExtractor(Kind k, uint64_t seed, size_t in_channels);
  Kind kind_;
  uint64_t seed_ = 0;
  size_t in_channels_ = 1;
  std::vector<Tensor> kernels_;
};

// 0.5 * ||target - pred||^2, averaged over the leading batch axis of rank-4
// inputs. Gradient w.r.t. pred is (pred - target) for a single image.
ad::Var l_imse(const Tensor& target, const ad::Var& pred);

// 0.5 * ||F target - F pred||^2 under the unitary transform. Channels are
// treated as (re,im) pairs; single-channel input gets a zero imaginary part.
// Equal to l_imse for full-image transforms (Parseval).
ad::Var l_fmse(const Tensor& target, const ad::Var& pred);

// KIGAN variant: plain half-SSE between k-space tensors that are already in
// the frequency domain (the masked merge breaks the Parseval identity).
ad::Var l_fmse_k(const Tensor& target_k, const ad::Var& pred_k);

// 0.5 * ||fx(target) - fx(pred)||^2.
ad::Var l_perceptual(const Tensor& target, const ad::Var& pred,
                     const FeatureExtractor& fx);

// Discriminator loss -mean log D(real) - mean log(1 - D(fake)) and the
// generator's term. Probabilities are clamped to [eps, 1-eps], eps = 1e-7;
// values outside [0,1] raise ContractError. The default generator loss is the
// non-saturating -mean log D(fake); `saturating` selects mean log(1-D(fake)).
ad::Var l_adv_d(const ad::Var& d_real, const ad::Var& d_fake);
ad::Var l_adv_g(const ad::Var& d_fake, bool saturating = false);

struct LossParts {
  ad::Var imse, fmse, perc, adv;  // null parts contribute zero
};

// alpha*iMSE + beta*fMSE [+ gamma*perc for dagan] + adv_weight*adv.
ad::Var l_total(GanFamily family, const LossWeights& w, const LossParts& parts);

}  // namespace mrigan
