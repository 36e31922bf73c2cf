#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrigan/tensor.hpp"

namespace mrigan {

enum class MaskScheme { cartesian, radial, spiral, full };

std::string to_string(MaskScheme s);
MaskScheme mask_scheme_from_string(const std::string& s);

// Binary k-space sampling pattern. The grid stores the DC sample at index
// (0,0) (unshifted FFT convention); fftshift is applied only for display.
struct Mask {
  Tensor grid;  // real64 H x W of {0,1}
  MaskScheme scheme = MaskScheme::full;
  double target = 1.0;  // acceleration factor (cartesian) or sampling rate
  double achieved_rate = 1.0;
  uint64_t seed = 0;

  size_t height() const { return grid.extent(0); }
  size_t width() const { return grid.extent(1); }
  bool sampled(size_t i, size_t j) const { return grid.at({i, j}) != 0.0; }
  size_t count() const;
};

// Cartesian: fully sampled central band of ceil(center_fraction*H) phase-encode
// lines plus uniformly random lines up to exactly ceil(H/AF) sampled lines.
// Radial: golden-angle (~111.246 deg) spokes through the centre, rasterized,
// added until the rate reaches `target`, then the last spoke's unique samples
// are randomly trimmed to land within +-0.5 percentage points.
// Spiral: single Archimedean arm r = a*phi with ~1px ring pitch, extended until
// the same rate criterion holds. The DC sample is always kept.
Mask make_mask(MaskScheme scheme, size_t h, size_t w, double target,
               double center_fraction, uint64_t seed);
Mask full_mask(size_t h, size_t w);

// y_u = mask .* fft2(x); unsampled positions are exactly zero.
Tensor forward(const Tensor& x, const Mask& mask);
// Zero-filled reconstruction: ifft2 of the undersampled k-space.
Tensor zero_fill(const Tensor& y_u);
// Sampled positions copied verbatim from y_u, the rest taken from pred_k.
Tensor data_consistency(const Tensor& pred_k, const Tensor& y_u, const Mask& mask);

// Ground-truth image plus its undersampled acquisition.
struct AcqPair {
  Tensor x_t;  // complex H x W image
  Tensor y_u;  // complex H x W k-space, zero where unsampled
  Mask mask;
};
AcqPair acquire(const Tensor& x_t, const Mask& mask);

// Standard 10-ellipse head phantom (modified variant with enhanced contrast),
// point-sampled at pixel centres on [-1,1]^2 and normalized to [0,1].
Tensor shepp_logan(size_t h, size_t w);

struct Ellipse {
  double intensity, ax, ay, x0, y0, phi;  // axes and centre in [-1,1] units
};
const std::vector<Ellipse>& shepp_logan_ellipses();
Tensor render_phantom(const std::vector<Ellipse>& ellipses, size_t h, size_t w);

// Centered (fftshifted) view of the mask written as binary PGM.
void save_mask_pgm(const Mask& mask, const std::string& path);

}  // namespace mrigan
