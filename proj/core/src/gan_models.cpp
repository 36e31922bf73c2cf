#include "mrigan/gan_models.hpp"

#include <algorithm>
#include <cmath>

namespace mrigan {

namespace {

size_t stage_width(size_t base, size_t i) {
  return std::min(base << i, base * 8);
}

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void check_image_input(const Tensor& x, size_t channels, size_t image_size,
                       const char* who) {
  if (x.rank() != 4) throw ShapeError(std::string(who) + ": rank-4 batch required");
  if (x.extent(1) != channels)
    throw ShapeError(std::string(who) + ": expected " + std::to_string(channels) +
                     " input channels");
  if (x.extent(2) != image_size || x.extent(3) != image_size)
    throw ShapeError(std::string(who) + ": spatial extents do not match the configured image size");
}

Tensor clamp01(const Tensor& t) { return clamp(t, 0.0, 1.0); }

// (re,im) channel pair per sample -> [0,1] magnitude image.
Tensor pair_sample_magnitude(const Tensor& v, size_t n) {
  const size_t h = v.extent(2), w = v.extent(3), plane = h * w;
  Tensor out = Tensor::zeros({h, w});
  const double* re = v.data() + n * 2 * plane;
  const double* im = re + plane;
  for (size_t i = 0; i < plane; ++i)
    out.r(i) = std::min(1.0, std::max(0.0, std::hypot(re[i], im[i])));
  return out;
}

}  // namespace

ModelSpec resolve_spec(ModelSpec spec) {
  if (spec.depth == 0) {
    switch (spec.family) {
      case GanFamily::dagan: spec.depth = 8; break;
      case GanFamily::kigan: spec.depth = 5; break;
      case GanFamily::recon_refine: spec.depth = 4; break;
    }
  }
  if (spec.base_channels == 0) spec.base_channels = 64;
  if (spec.image_size == 0) spec.image_size = 256;
  if (!is_pow2(spec.image_size) || spec.image_size < (size_t{1} << spec.depth))
    throw ParamError("ModelSpec: image_size must be a power of two >= 2^depth");
  return spec;
}

// ---- batch assembly -----------------------------------------------------------------

Batch assemble_batch(GanFamily family, const std::vector<AcqPair>& slices,
                     const std::vector<size_t>& indices) {
  if (slices.empty() || indices.empty())
    throw ParamError("assemble_batch: empty dataset or index list");
  for (size_t idx : indices)
    if (idx >= slices.size()) throw ParamError("assemble_batch: index out of range");
  const size_t h = slices[0].x_t.extent(0), w = slices[0].x_t.extent(1);
  const size_t N = indices.size(), plane = h * w;
  Batch b;

  auto put_pair = [plane](Tensor& dst, size_t n, size_t pair, const Tensor& z) {
    double* re = dst.data() + (n * dst.extent(1) + 2 * pair) * plane;
    double* im = re + plane;
    for (size_t i = 0; i < plane; ++i) {
      re[i] = z.c(i).real();
      im[i] = z.c(i).imag();
    }
  };

  switch (family) {
    case GanFamily::dagan: {
      b.input = Tensor::zeros({N, 1, h, w});
      b.target = Tensor::zeros({N, 1, h, w});
      for (size_t n = 0; n < N; ++n) {
        const AcqPair& p = slices[indices[n]];
        Tensor zf = clamp01(abs(zero_fill(p.y_u)));
        Tensor gt = clamp01(abs(p.x_t));
        for (size_t i = 0; i < plane; ++i) {
          b.input.data()[n * plane + i] = 2.0 * zf.r(i) - 1.0;
          b.target.data()[n * plane + i] = 2.0 * gt.r(i) - 1.0;
        }
      }
      break;
    }
    case GanFamily::recon_refine: {
      b.input = Tensor::zeros({N, 2, h, w});
      b.target = Tensor::zeros({N, 2, h, w});
      for (size_t n = 0; n < N; ++n) {
        const AcqPair& p = slices[indices[n]];
        put_pair(b.input, n, 0, zero_fill(p.y_u));
        put_pair(b.target, n, 0, p.x_t);
      }
      break;
    }
    case GanFamily::kigan: {
      if (slices.size() < 3)
        throw ParamError("assemble_batch: kigan requires at least 3 adjacent slices");
      b.input = Tensor::zeros({N, 6, h, w});
      b.target = Tensor::zeros({N, 2, h, w});
      b.target_k = Tensor::zeros({N, 2, h, w});
      b.yu = Tensor::zeros({N, 2, h, w});
      for (size_t n = 0; n < N; ++n) {
        const size_t l = indices[n];
        const size_t lm = l == 0 ? 0 : l - 1;
        const size_t lp = std::min(l + 1, slices.size() - 1);
        put_pair(b.input, n, 0, slices[lm].y_u);
        put_pair(b.input, n, 1, slices[l].y_u);
        put_pair(b.input, n, 2, slices[lp].y_u);
        put_pair(b.yu, n, 0, slices[l].y_u);
        put_pair(b.target, n, 0, slices[l].x_t);
        put_pair(b.target_k, n, 0, fft2(slices[l].x_t));
      }
      b.mask_grid = slices[indices[0]].mask.grid;
      break;
    }
  }
  return b;
}

// ---- shared blocks --------------------------------------------------------------------

namespace models {

UNet::UNet(ad::ParamSet& ps, const std::string& path, size_t depth, size_t in_ch,
           size_t out_ch, size_t base, bool tanh, const Rng& root)
    : tanh_head(tanh) {
  for (size_t i = 0; i < depth; ++i) {
    size_t in = i == 0 ? in_ch : stage_width(base, i - 1);
    size_t out = stage_width(base, i);
    std::string p = path + "/enc" + std::to_string(i);
    enc.push_back({ad::Conv2d(ps, p + "/conv", in, out, 4, 2, 1, root),
                   ad::BatchNorm2d(ps, p + "/bn", out)});
  }
  for (size_t j = 0; j < depth; ++j) {
    size_t in = j == 0 ? stage_width(base, depth - 1)
                       : 2 * stage_width(base, depth - 1 - j);
    size_t out = j == depth - 1 ? base : stage_width(base, depth - 2 - j);
    std::string p = path + "/dec" + std::to_string(j);
    dec.push_back({ad::Deconv2d(ps, p + "/deconv", in, out, 4, 2, 1, root),
                   ad::BatchNorm2d(ps, p + "/bn", out)});
  }
  head = ad::Conv2d(ps, path + "/head", base, out_ch, 3, 1, 1, root);
}

ad::Var UNet::operator()(const ad::Var& x, ad::Mode mode) const {
  std::vector<ad::Var> skips;
  ad::Var h = x;
  for (const Enc& e : enc) {
    h = ad::lrelu(e.bn(e.conv(h), mode), 0.2);
    skips.push_back(h);
  }
  const size_t depth = enc.size();
  ad::Var d = skips[depth - 1];
  for (size_t j = 0; j < dec.size(); ++j) {
    if (j > 0) d = ad::concat_ch(d, skips[depth - 1 - j]);
    d = ad::relu(dec[j].bn(dec[j].deconv(d), mode));
  }
  ad::Var o = head(d);
  return tanh_head ? ad::tanh_op(o) : o;
}

ConvStack::ConvStack(ad::ParamSet& ps, const std::string& path, size_t n_layers,
                     size_t in_ch, size_t base, size_t image_size, const Rng& root) {
  size_t s = image_size;
  size_t ch = in_ch;
  for (size_t i = 0; i < n_layers; ++i) {
    size_t out = stage_width(base, i);
    std::string p = path + "/conv" + std::to_string(i);
    if (s > 4) {
      layers.push_back({ad::Conv2d(ps, p, ch, out, 4, 2, 1, root),
                        ad::BatchNorm2d(ps, p + "/bn", out)});
      s /= 2;
    } else {
      layers.push_back({ad::Conv2d(ps, p, ch, out, 3, 1, 1, root),
                        ad::BatchNorm2d(ps, p + "/bn", out)});
    }
    ch = out;
  }
  fc = ad::Dense(ps, path + "/fc", ch * s * s, 1, root);
}

ad::Var ConvStack::operator()(const ad::Var& x, ad::Mode mode) const {
  ad::Var h = x;
  for (const L& l : layers) h = ad::lrelu(l.bn(l.conv(h), mode), 0.2);
  return ad::sigmoid(fc(ad::flatten(h)));
}

ResBlock::ResBlock(ad::ParamSet& ps, const std::string& path, size_t ch,
                   const Rng& root) {
  size_t half = std::max<size_t>(ch / 2, 1);
  c1 = ad::Conv2d(ps, path + "/c1", ch, ch, 3, 1, 1, root);
  b1 = ad::BatchNorm2d(ps, path + "/b1", ch);
  c2 = ad::Conv2d(ps, path + "/c2", ch, half, 3, 1, 1, root);
  b2 = ad::BatchNorm2d(ps, path + "/b2", half);
  c3 = ad::Conv2d(ps, path + "/c3", half, ch, 3, 1, 1, root);
  b3 = ad::BatchNorm2d(ps, path + "/b3", ch);
}

ad::Var ResBlock::operator()(const ad::Var& x, ad::Mode mode) const {
  ad::Var h = ad::lrelu(b1(c1(x), mode), 0.2);
  h = ad::lrelu(b2(c2(h), mode), 0.2);
  h = b3(c3(h), mode);
  return ad::add(x, h);
}

EncoderBlock::EncoderBlock(ad::ParamSet& ps, const std::string& path, size_t in_ch,
                           size_t out_ch, const Rng& root) {
  c1 = ad::Conv2d(ps, path + "/c1", in_ch, out_ch, 4, 2, 1, root);
  b1 = ad::BatchNorm2d(ps, path + "/b1", out_ch);
  res = ResBlock(ps, path + "/res", out_ch, root);
  c2 = ad::Conv2d(ps, path + "/c2", out_ch, out_ch, 3, 1, 1, root);
  b2 = ad::BatchNorm2d(ps, path + "/b2", out_ch);
}

ad::Var EncoderBlock::operator()(const ad::Var& x, ad::Mode mode) const {
  ad::Var h = ad::lrelu(b1(c1(x), mode), 0.2);
  h = res(h, mode);
  return ad::lrelu(b2(c2(h), mode), 0.2);
}

DecoderBlock::DecoderBlock(ad::ParamSet& ps, const std::string& path, size_t in_ch,
                           size_t out_ch, const Rng& root) {
  d1 = ad::Deconv2d(ps, path + "/d1", in_ch, out_ch, 3, 1, 1, root);
  b1 = ad::BatchNorm2d(ps, path + "/b1", out_ch);
  res = ResBlock(ps, path + "/res", out_ch, root);
  d2 = ad::Deconv2d(ps, path + "/d2", out_ch, out_ch, 4, 2, 1, root);
  b2 = ad::BatchNorm2d(ps, path + "/b2", out_ch);
}

ad::Var DecoderBlock::operator()(const ad::Var& x, ad::Mode mode) const {
  ad::Var h = ad::lrelu(b1(d1(x), mode), 0.2);
  h = res(h, mode);
  return ad::lrelu(b2(d2(h), mode), 0.2);
}

}  // namespace models

// ---- DAGAN -------------------------------------------------------------------------------

DaganModel::DaganModel(const ModelSpec& spec_in) : GanModel(resolve_spec(spec_in)) {
  Rng root(spec_.seed);
  g_ = models::UNet(gen_, "dagan/g", spec_.depth, 1, 1, spec_.base_channels, true,
                    root.derive("gen"));
  d_ = models::ConvStack(disc_, "dagan/d", spec_.depth + 3, 1, spec_.base_channels,
                         spec_.image_size, root.derive("disc"));
  heads_ = {g_.head.w, g_.head.b};
  zero_init_heads();
}

GenForward DaganModel::generator(const Batch& b, ad::Mode mode) {
  check_image_input(b.input, 1, spec_.image_size, "dagan");
  ad::Var x = ad::constant(b.input);
  ad::Var pre = ad::add(g_(x, mode), x);
  GenForward fwd;
  fwd.recon = ad::clamp_op(pre, -1.0, 1.0);
  fwd.recon_pre = pre;
  return fwd;
}

ad::Var DaganModel::discriminate(const ad::Var& x, ad::Mode mode) {
  return d_(x, mode);
}

std::vector<Tensor> DaganModel::reconstruct(const Batch& b, bool) {
  GenForward fwd = generator(b, ad::Mode::eval);
  const Tensor& v = fwd.recon->value;
  const size_t N = v.extent(0), h = v.extent(2), w = v.extent(3), plane = h * w;
  std::vector<Tensor> out;
  for (size_t n = 0; n < N; ++n) {
    Tensor img = Tensor::zeros({h, w});
    const double* p = v.data() + n * plane;
    for (size_t i = 0; i < plane; ++i)
      img.r(i) = std::min(1.0, std::max(0.0, (p[i] + 1.0) / 2.0));
    out.push_back(std::move(img));
  }
  return out;
}

// ---- KIGAN -------------------------------------------------------------------------------

KiganModel::KiganModel(const ModelSpec& spec_in) : GanModel(resolve_spec(spec_in)) {
  Rng root(spec_.seed);
  gk_ = models::UNet(gen_, "kigan/gk", spec_.depth, 6, 2, spec_.base_channels, false,
                     root.derive("gen_k"));
  gim_ = models::UNet(gen_, "kigan/gim", spec_.depth, 2, 2, spec_.base_channels, true,
                      root.derive("gen_im"));
  d_ = models::ConvStack(disc_, "kigan/d", 2 * spec_.depth - 1, 1, spec_.base_channels,
                         spec_.image_size, root.derive("disc"));
  heads_ = {gim_.head.w, gim_.head.b};
  zero_init_heads();
  // G_K starts at zero as well: the merge then passes pure measurements and
  // the initial reconstruction is the zero-filled image.
  gk_.head.w->value = Tensor::zeros(gk_.head.w->value.shape());
  gk_.head.b->value = Tensor::zeros(gk_.head.b->value.shape());
}

GenForward KiganModel::generator(const Batch& b, ad::Mode mode) {
  check_image_input(b.input, 6, spec_.image_size, "kigan");
  ad::Var pk = gk_(ad::constant(b.input), mode);
  return recon_from_pred_k(pk, b, mode);
}

GenForward KiganModel::recon_from_pred_k(const ad::Var& pred_k, const Batch& b,
                                         ad::Mode mode) {
  if (b.yu.empty() || b.mask_grid.empty())
    throw ParamError("kigan: batch lacks measured k-space or mask");
  const Tensor& pv = pred_k->value;
  if (pv.rank() != 4 || pv.extent(1) != 2)
    throw ShapeError("kigan: predicted k-space must be a 2-channel pair");
  const size_t N = pv.extent(0), h = pv.extent(2), w = pv.extent(3), plane = h * w;
  Tensor keep = Tensor::zeros({N, 2, h, w});   // 1 where prediction passes through
  Tensor meas = Tensor::zeros({N, 2, h, w});   // measured values at sampled spots
  for (size_t n = 0; n < N; ++n)
    for (size_t c = 0; c < 2; ++c) {
      double* kp = keep.data() + (n * 2 + c) * plane;
      double* mp = meas.data() + (n * 2 + c) * plane;
      const double* yu = b.yu.data() + (n * 2 + c) * plane;
      for (size_t i = 0; i < plane; ++i) {
        const bool sampled = b.mask_grid.r(i) != 0.0;
        kp[i] = sampled ? 0.0 : 1.0;
        mp[i] = sampled ? yu[i] : 0.0;
      }
    }
  ad::Var merged = ad::add(ad::mul(pred_k, ad::constant(keep)), ad::constant(meas));
  ad::Var xt = ad::ifft2c(merged);
  ad::Var pre = ad::add(gim_(xt, mode), xt);
  GenForward fwd;
  fwd.recon = pre;
  fwd.recon_pre = pre;
  fwd.pred_k = merged;
  return fwd;
}

ad::Var KiganModel::discriminate(const ad::Var& x, ad::Mode mode) {
  return d_(x, mode);
}

ad::Var KiganModel::disc_input(const GenForward& fwd) const {
  return ad::magnitude(fwd.recon);
}

Tensor KiganModel::disc_real(const Batch& b) const {
  const size_t N = b.target.extent(0), h = b.target.extent(2), w = b.target.extent(3);
  const size_t plane = h * w;
  Tensor out = Tensor::zeros({N, 1, h, w});
  for (size_t n = 0; n < N; ++n) {
    const double* re = b.target.data() + n * 2 * plane;
    const double* im = re + plane;
    double* o = out.data() + n * plane;
    for (size_t i = 0; i < plane; ++i) o[i] = std::hypot(re[i], im[i]);
  }
  return out;
}

std::vector<Tensor> KiganModel::reconstruct(const Batch& b, bool) {
  GenForward fwd = generator(b, ad::Mode::eval);
  const Tensor& v = fwd.recon->value;
  std::vector<Tensor> out;
  for (size_t n = 0; n < v.extent(0); ++n)
    out.push_back(pair_sample_magnitude(v, n));
  return out;
}

// ---- ReconGAN / RefineGAN ------------------------------------------------------------------

ReconRefineModel::ReconRefineModel(const ModelSpec& spec_in)
    : GanModel(resolve_spec(spec_in)) {
  Rng root(spec_.seed);
  const size_t B = spec_.depth, base = spec_.base_channels;
  auto build_gen = [&](Gen& g, const std::string& path, const Rng& r) {
    for (size_t i = 0; i < B; ++i) {
      size_t in = i == 0 ? 2 : stage_width(base, i - 1);
      g.enc.emplace_back(gen_, path + "/eb" + std::to_string(i), in,
                         stage_width(base, i), r);
    }
    for (size_t j = 0; j < B; ++j) {
      size_t in = j == 0 ? stage_width(base, B - 1)
                         : 2 * stage_width(base, B - 1 - j);
      size_t out = j == B - 1 ? base : stage_width(base, B - 2 - j);
      g.dec.emplace_back(gen_, path + "/db" + std::to_string(j), in, out, r);
    }
    g.head = ad::Conv2d(gen_, path + "/head", base, 2, 3, 1, 1, r);
  };
  build_gen(g1_, "rr/g1", root.derive("gen1"));
  build_gen(g2_, "rr/g2", root.derive("gen2"));
  Rng dr = root.derive("disc");
  for (size_t i = 0; i < B; ++i) {
    size_t in = i == 0 ? 2 : stage_width(base, i - 1);
    d_enc_.emplace_back(disc_, "rr/d/eb" + std::to_string(i), in,
                        stage_width(base, i), dr);
  }
  size_t s = spec_.image_size >> B;
  d_fc_ = ad::Dense(disc_, "rr/d/fc", stage_width(base, B - 1) * s * s, 1, dr);
  heads_ = {g1_.head.w, g1_.head.b, g2_.head.w, g2_.head.b};
  zero_init_heads();
}

ad::Var ReconRefineModel::gen_forward(const Gen& g, const ad::Var& x,
                                      ad::Mode mode) const {
  std::vector<ad::Var> skips;
  ad::Var h = x;
  for (const auto& blk : g.enc) {
    h = blk(h, mode);
    skips.push_back(h);
  }
  const size_t B = g.enc.size();
  ad::Var d = skips[B - 1];
  for (size_t j = 0; j < B; ++j) {
    if (j > 0) d = ad::concat_ch(d, skips[B - 1 - j]);
    d = g.dec[j](d, mode);
  }
  return ad::tanh_op(g.head(d));
}

GenForward ReconRefineModel::generator(const Batch& b, ad::Mode mode) {
  if (b.input.rank() != 4 || b.input.extent(1) % 2 != 0)
    throw ParamError("recon_refine: input requires an even channel count");
  check_image_input(b.input, 2, spec_.image_size, "recon_refine");
  ad::Var x = ad::constant(b.input);
  ad::Var mid = ad::add(gen_forward(g1_, x, mode), x);
  ad::Var out = ad::add(gen_forward(g2_, mid, mode), mid);
  GenForward fwd;
  fwd.recon = out;
  fwd.recon_pre = out;
  fwd.recon_mid = mid;
  return fwd;
}

ad::Var ReconRefineModel::discriminate(const ad::Var& x, ad::Mode mode) {
  ad::Var h = x;
  for (const auto& blk : d_enc_) h = blk(h, mode);
  return ad::sigmoid(d_fc_(ad::flatten(h)));
}

std::vector<Tensor> ReconRefineModel::reconstruct(const Batch& b, bool mid_checkpoint) {
  GenForward fwd = generator(b, ad::Mode::eval);
  const Tensor& v = (mid_checkpoint ? fwd.recon_mid : fwd.recon)->value;
  std::vector<Tensor> out;
  for (size_t n = 0; n < v.extent(0); ++n)
    out.push_back(pair_sample_magnitude(v, n));
  return out;
}

// ---- factories ---------------------------------------------------------------------------

std::unique_ptr<GanModel> build_dagan(const ModelSpec& spec) {
  if (spec.family != GanFamily::dagan)
    throw ParamError("build_dagan: spec.family mismatch");
  return std::make_unique<DaganModel>(spec);
}

std::unique_ptr<GanModel> build_kigan(const ModelSpec& spec) {
  if (spec.family != GanFamily::kigan)
    throw ParamError("build_kigan: spec.family mismatch");
  return std::make_unique<KiganModel>(spec);
}

std::unique_ptr<GanModel> build_recon_refine(const ModelSpec& spec) {
  if (spec.family != GanFamily::recon_refine)
    throw ParamError("build_recon_refine: spec.family mismatch");
  return std::make_unique<ReconRefineModel>(spec);
}

std::unique_ptr<GanModel> build_gan(const ModelSpec& spec) {
  switch (spec.family) {
    case GanFamily::dagan: return build_dagan(spec);
    case GanFamily::kigan: return build_kigan(spec);
    case GanFamily::recon_refine: return build_recon_refine(spec);
  }
  throw ParamError("build_gan: unknown family");
}

}  // namespace mrigan
