#pragma once

#include <memory>
#include <vector>

#include "mrigan/kspace.hpp"
#include "mrigan/layers.hpp"
#include "mrigan/losses.hpp"

namespace mrigan {

// Declarative scale of a generator/discriminator pair. Zero depth/channel
// fields resolve to the family defaults (dagan: depth 8; kigan: depth 5;
// recon_refine: 4 encoder blocks; base_channels 64, image_size 256).
struct ModelSpec {
  GanFamily family = GanFamily::dagan;
  size_t depth = 0;
  size_t base_channels = 0;
  size_t image_size = 0;  // H == W, power of two >= 2^depth
  uint64_t seed = 0;      // parameter-init stream seed
};
ModelSpec resolve_spec(ModelSpec spec);

// Family-specific network tensors assembled from acquisition pairs.
struct Batch {
  Tensor input;      // dagan: 1ch magnitude in [-1,1]; recon_refine: 2ch (re,im)
                     // zero-filled image; kigan: 6ch stacked k-space slices
  Tensor target;     // ground truth in the same representation as the output
  Tensor target_k;   // kigan: 2ch ground-truth centre-slice k-space
  Tensor yu;         // kigan: 2ch measured centre-slice k-space
  Tensor mask_grid;  // kigan: sampling mask (H x W)
};

// Build a batch for `family` from dataset slices at the given indices.
// KIGAN uses index-adjacent slices (clamped at the volume ends) and requires
// at least 3 slices.
Batch assemble_batch(GanFamily family, const std::vector<AcqPair>& slices,
                     const std::vector<size_t>& indices);

struct GenForward {
  ad::Var recon;      // final output in network representation
  ad::Var recon_pre;  // before the output clamp where one applies
  ad::Var recon_mid;  // recon_refine: ReconGAN checkpoint (else null)
  ad::Var pred_k;     // kigan: data-consistency-merged k-space (else null)
};

class GanModel {
public:
  virtual ~GanModel() = default;
  GanFamily family() const { return spec_.family; }
  const ModelSpec& spec() const { return spec_; }
  ad::ParamSet& gen_params() { return gen_; }
  ad::ParamSet& disc_params() { return disc_; }
  // Final generator layer(s); zeroing them makes the model the identity map.
  const std::vector<ad::ParamPtr>& head_params() const { return heads_; }
  size_t parameter_count() const {
    return gen_.total_elements() + disc_.total_elements();
  }

  virtual GenForward generator(const Batch& b, ad::Mode mode) = 0;
  // Probability in (0,1) per sample for an input already in disc space.
  virtual ad::Var discriminate(const ad::Var& x, ad::Mode mode) = 0;
  // Map a generator forward to discriminator input space (magnitude for kigan).
  virtual ad::Var disc_input(const GenForward& fwd) const = 0;
  virtual Tensor disc_real(const Batch& b) const = 0;
  // Eval-mode [0,1] magnitude reconstructions, one per batch sample.
  // `mid_checkpoint` selects the ReconGAN output of the chained family.
  virtual std::vector<Tensor> reconstruct(const Batch& b, bool mid_checkpoint = false) = 0;

protected:
  explicit GanModel(ModelSpec spec) : spec_(std::move(spec)) {}
  // Generator heads start at zero so every refinement-shortcut model begins
  // as the identity map and learns only the residual.
  void zero_init_heads() {
    for (const auto& p : heads_) p->value = Tensor::zeros(p->value.shape());
  }
  ModelSpec spec_;
  ad::ParamSet gen_, disc_;
  std::vector<ad::ParamPtr> heads_;
};

std::unique_ptr<GanModel> build_dagan(const ModelSpec& spec);
std::unique_ptr<GanModel> build_kigan(const ModelSpec& spec);
std::unique_ptr<GanModel> build_recon_refine(const ModelSpec& spec);
std::unique_ptr<GanModel> build_gan(const ModelSpec& spec);  // family dispatch

namespace models {

// U-shaped generator: `depth` stride-2 conv stages (conv+BN+LReLU) mirrored by
// `depth` deconv stages (deconv+BN+ReLU) with skip concatenation, then a 3x3
// conv head (optionally tanh).
struct UNet {
  struct Enc {
    ad::Conv2d conv;
    ad::BatchNorm2d bn;
  };
  struct Dec {
    ad::Deconv2d deconv;
    ad::BatchNorm2d bn;
  };
  std::vector<Enc> enc;
  std::vector<Dec> dec;
  ad::Conv2d head;
  bool tanh_head = false;

  UNet() = default;
  UNet(ad::ParamSet& ps, const std::string& path, size_t depth, size_t in_ch,
       size_t out_ch, size_t base, bool tanh_head, const Rng& root);
  ad::Var operator()(const ad::Var& x, ad::Mode mode) const;
};

// Plain conv(+BN+LReLU) classifier backbone with a dense+sigmoid head.
struct ConvStack {
  struct L {
    ad::Conv2d conv;
    ad::BatchNorm2d bn;
  };
  std::vector<L> layers;
  ad::Dense fc;

  ConvStack() = default;
  ConvStack(ad::ParamSet& ps, const std::string& path, size_t n_layers,
            size_t in_ch, size_t base, size_t image_size, const Rng& root);
  ad::Var operator()(const ad::Var& x, ad::Mode mode) const;
};

// Three convs with a half-width middle layer and an additive shortcut.
struct ResBlock {
  ad::Conv2d c1, c2, c3;
  ad::BatchNorm2d b1, b2, b3;
  ResBlock() = default;
  ResBlock(ad::ParamSet& ps, const std::string& path, size_t ch, const Rng& root);
  ad::Var operator()(const ad::Var& x, ad::Mode mode) const;
};

// Encoder block: stride-2 conv, residual block, stride-1 conv.
struct EncoderBlock {
  ad::Conv2d c1, c2;
  ad::BatchNorm2d b1, b2;
  ResBlock res;
  EncoderBlock() = default;
  EncoderBlock(ad::ParamSet& ps, const std::string& path, size_t in_ch,
               size_t out_ch, const Rng& root);
  ad::Var operator()(const ad::Var& x, ad::Mode mode) const;
};

// Decoder block: stride-1 deconv, residual block, stride-2 deconv.
struct DecoderBlock {
  ad::Deconv2d d1, d2;
  ad::BatchNorm2d b1, b2;
  ResBlock res;
  DecoderBlock() = default;
  DecoderBlock(ad::ParamSet& ps, const std::string& path, size_t in_ch,
               size_t out_ch, const Rng& root);
  ad::Var operator()(const ad::Var& x, ad::Mode mode) const;
};

}  // namespace models

// Concrete model classes are exposed so tests can reach family-specific seams.

class DaganModel : public GanModel {
public:
  explicit DaganModel(const ModelSpec& spec);
  GenForward generator(const Batch& b, ad::Mode mode) override;
  ad::Var discriminate(const ad::Var& x, ad::Mode mode) override;
  ad::Var disc_input(const GenForward& fwd) const override { return fwd.recon; }
  Tensor disc_real(const Batch& b) const override { return b.target; }
  std::vector<Tensor> reconstruct(const Batch& b, bool mid_checkpoint) override;

private:
  models::UNet g_;
  models::ConvStack d_;
};

class KiganModel : public GanModel {
public:
  explicit KiganModel(const ModelSpec& spec);
  GenForward generator(const Batch& b, ad::Mode mode) override;
  // Data consistency + ifft + image generator, starting from an arbitrary
  // k-space prediction (oracle injection point).
  GenForward recon_from_pred_k(const ad::Var& pred_k, const Batch& b, ad::Mode mode);
  ad::Var discriminate(const ad::Var& x, ad::Mode mode) override;
  ad::Var disc_input(const GenForward& fwd) const override;
  Tensor disc_real(const Batch& b) const override;
  std::vector<Tensor> reconstruct(const Batch& b, bool mid_checkpoint) override;

private:
  models::UNet gk_, gim_;
  models::ConvStack d_;
};

class ReconRefineModel : public GanModel {
public:
  explicit ReconRefineModel(const ModelSpec& spec);
  GenForward generator(const Batch& b, ad::Mode mode) override;
  ad::Var discriminate(const ad::Var& x, ad::Mode mode) override;
  ad::Var disc_input(const GenForward& fwd) const override { return fwd.recon; }
  Tensor disc_real(const Batch& b) const override { return b.target; }
  std::vector<Tensor> reconstruct(const Batch& b, bool mid_checkpoint) override;

private:
  struct Gen {
    std::vector<models::EncoderBlock> enc;
    std::vector<models::DecoderBlock> dec;
    ad::Conv2d head;
  };
  Gen g1_, g2_;
  std::vector<models::EncoderBlock> d_enc_;
  ad::Dense d_fc_;
  ad::Var gen_forward(const Gen& g, const ad::Var& x, ad::Mode mode) const;
};

}  // namespace mrigan
