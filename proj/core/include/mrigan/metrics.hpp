#pragma once

#include <optional>
#include <vector>

#include "mrigan/losses.hpp"
#include "mrigan/tensor.hpp"

namespace mrigan {

// Finite cap used when reporting the +inf PSNR of identical images.
inline constexpr double kPsnrCap = 99.99;

// 10*log10(L^2 / MSE); +inf when the images coincide.
double psnr(const Tensor& rec, const Tensor& gt, double L = 1.0);

// Mean over sliding 11x11 Gaussian windows (sigma 1.5) of the two-factor
// similarity with k1 = (0.01 L)^2, k2 = (0.03 L)^2. Inputs in [0,1].
double ssim(const Tensor& x, const Tensor& y);

// sqrt(MSE); reports multiply by 100 when printing the x1e-2 convention.
double rmse(const Tensor& rec, const Tensor& gt);

// Frechet distance between Gaussian fits of embedded image sets:
// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}), matrix square root via
// symmetric eigendecomposition with negative eigenvalues clamped at zero.
// Covariances get eps*I shrinkage (1e-6) when the sample count is <= the
// feature dimension.
double fid(const std::vector<Tensor>& set_a, const std::vector<Tensor>& set_b,
           const FeatureExtractor& fx);

struct Aggregate {
  double mean = 0.0;
  double stdev = 0.0;  // population standard deviation
  size_t count = 0;
};

// Per-image fidelity metrics plus per-set FID for one (mask, rate, method)
// cell. PSNR entries may be +inf; aggregation caps them at kPsnrCap.
struct MetricsReport {
  std::vector<double> psnr_values;
  std::vector<double> ssim_values;
  std::vector<double> rmse_values;  // raw sqrt(MSE), not scaled by 100
  std::optional<double> fid_value;

  void add_image(double p, double s, double r);
  Aggregate psnr() const;
  Aggregate ssim() const;
  Aggregate rmse() const;
};

}  // namespace mrigan
