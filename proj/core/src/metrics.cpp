#include "mrigan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mrigan {

namespace {

double mse(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": shape mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) {
    double d = std::abs(a.val(i) - b.val(i));
    s += d * d;
  }
  return s / static_cast<double>(a.numel());
}

}  // namespace

double psnr(const Tensor& rec, const Tensor& gt, double L) {
  double m = mse(rec, gt, "psnr");
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(L * L / m);
}

double rmse(const Tensor& rec, const Tensor& gt) {
  return std::sqrt(mse(rec, gt, "rmse"));
}

double ssim(const Tensor& x, const Tensor& y) {
  if (!x.same_shape(y)) throw ShapeError("ssim: shape mismatch");
  if (x.rank() != 2 || x.is_complex() || y.is_complex())
    throw ShapeError("ssim: real rank-2 images required");
  constexpr size_t win = 11;
  constexpr double sigma = 1.5;
  constexpr double L = 1.0;
  const double k1 = (0.01 * L) * (0.01 * L);
  const double k2 = (0.03 * L) * (0.03 * L);
  const size_t h = x.extent(0), w = x.extent(1);
  if (h < win || w < win) throw ParamError("ssim: image smaller than the 11x11 window");

  double g[win][win];
  double gsum = 0;
  for (size_t i = 0; i < win; ++i)
    for (size_t j = 0; j < win; ++j) {
      double di = static_cast<double>(i) - 5.0, dj = static_cast<double>(j) - 5.0;
      g[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      gsum += g[i][j];
    }
  for (size_t i = 0; i < win; ++i)
    for (size_t j = 0; j < win; ++j) g[i][j] /= gsum;

  double acc = 0;
  size_t count = 0;
  for (size_t i = 0; i + win <= h; ++i)
    for (size_t j = 0; j + win <= w; ++j) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (size_t u = 0; u < win; ++u)
        for (size_t v = 0; v < win; ++v) {
          double a = x.r((i + u) * w + (j + v));
          double b = y.r((i + u) * w + (j + v));
          double wgt = g[u][v];
          mx += wgt * a;
          my += wgt * b;
          xx += wgt * a * a;
          yy += wgt * b * b;
          xy += wgt * a * b;
        }
      double vx = xx - mx * mx, vy = yy - my * my, cxy = xy - mx * my;
      double val = ((2 * mx * my + k1) * (2 * cxy + k2)) /
                   ((mx * mx + my * my + k1) * (vx + vy + k2));
      acc += val;
      ++count;
    }
  return acc / static_cast<double>(count);
}

// ---- FID -------------------------------------------------------------------------

namespace {

using Matrix = std::vector<double>;  // row-major d x d

// Cyclic Jacobi eigendecomposition for symmetric matrices. V columns hold the
// eigenvectors on return.
void jacobi_eigen(Matrix a, size_t d, std::vector<double>& eigvals, Matrix& V) {
  V.assign(d * d, 0.0);
  for (size_t i = 0; i < d; ++i) V[i * d + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0, diag = 0;
    for (size_t p = 0; p < d; ++p) {
      diag += a[p * d + p] * a[p * d + p];
      for (size_t q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
    }
    if (off <= 1e-26 * std::max(1.0, diag)) break;
    for (size_t p = 0; p < d; ++p)
      for (size_t q = p + 1; q < d; ++q) {
        double apq = a[p * d + q];
        if (std::abs(apq) < 1e-300) continue;
        double app = a[p * d + p], aqq = a[q * d + q];
        double tau = (aqq - app) / (2.0 * apq);
        double t = (tau >= 0 ? 1.0 : -1.0) /
                   (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        for (size_t k = 0; k < d; ++k) {
          double akp = a[k * d + p], akq = a[k * d + q];
          a[k * d + p] = c * akp - s * akq;
          a[k * d + q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < d; ++k) {
          double apk = a[p * d + k], aqk = a[q * d + k];
          a[p * d + k] = c * apk - s * aqk;
          a[q * d + k] = s * apk + c * aqk;
        }
        for (size_t k = 0; k < d; ++k) {
          double vkp = V[k * d + p], vkq = V[k * d + q];
          V[k * d + p] = c * vkp - s * vkq;
          V[k * d + q] = s * vkp + c * vkq;
        }
      }
  }
  eigvals.resize(d);
  for (size_t i = 0; i < d; ++i) eigvals[i] = a[i * d + i];
}

Matrix matmul(const Matrix& A, const Matrix& B, size_t d) {
  Matrix C(d * d, 0.0);
  for (size_t i = 0; i < d; ++i)
    for (size_t l = 0; l < d; ++l) {
      double a = A[i * d + l];
      for (size_t j = 0; j < d; ++j) C[i * d + j] += a * B[l * d + j];
    }
  return C;
}

// Symmetric PSD square root via eigendecomposition (negatives clamped).
Matrix sqrtm_psd(const Matrix& S, size_t d) {
  std::vector<double> ev;
  Matrix V;
  jacobi_eigen(S, d, ev, V);
  Matrix R(d * d, 0.0);
  for (size_t k = 0; k < d; ++k) {
    double s = std::sqrt(std::max(0.0, ev[k]));
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) R[i * d + j] += s * V[i * d + k] * V[j * d + k];
  }
  return R;
}

struct GaussianFit {
  std::vector<double> mu;
  Matrix sigma;
  size_t d = 0;
};

GaussianFit fit_gaussian(const std::vector<Tensor>& set, const FeatureExtractor& fx,
                         const char* who) {
  if (set.empty()) throw ParamError(std::string(who) + ": empty image set");
  std::vector<std::vector<double>> feats;
  feats.reserve(set.size());
  for (const Tensor& img : set) feats.push_back(fx.embed(img));
  const size_t d = feats[0].size();
  for (const auto& f : feats)
    if (f.size() != d) throw ShapeError("fid: inconsistent feature dimensions");
  GaussianFit fit;
  fit.d = d;
  fit.mu.assign(d, 0.0);
  const size_t n = feats.size();
  for (const auto& f : feats)
    for (size_t i = 0; i < d; ++i) fit.mu[i] += f[i];
  for (size_t i = 0; i < d; ++i) fit.mu[i] /= static_cast<double>(n);
  fit.sigma.assign(d * d, 0.0);
  for (const auto& f : feats)
    for (size_t i = 0; i < d; ++i) {
      const double di = f[i] - fit.mu[i];
      for (size_t j = 0; j < d; ++j)
        fit.sigma[i * d + j] += di * (f[j] - fit.mu[j]);
    }
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (double& v : fit.sigma) v /= denom;
  if (n <= d)
    for (size_t i = 0; i < d; ++i) fit.sigma[i * d + i] += 1e-6;
  return fit;
}

}  // namespace

double fid(const std::vector<Tensor>& set_a, const std::vector<Tensor>& set_b,
           const FeatureExtractor& fx) {
  GaussianFit A = fit_gaussian(set_a, fx, "fid(set_a)");
  GaussianFit B = fit_gaussian(set_b, fx, "fid(set_b)");
  if (A.d != B.d) throw ShapeError("fid: feature dimensions differ between sets");
  const size_t d = A.d;
  double dist = 0;
  for (size_t i = 0; i < d; ++i) {
    const double dm = A.mu[i] - B.mu[i];
    dist += dm * dm;
  }
  Matrix Sa_half = sqrtm_psd(A.sigma, d);
  Matrix M = matmul(matmul(Sa_half, B.sigma, d), Sa_half, d);
  // Symmetrize before taking the root; roundoff makes M slightly asymmetric.
  for (size_t i = 0; i < d; ++i)
    for (size_t j = i + 1; j < d; ++j) {
      double v = 0.5 * (M[i * d + j] + M[j * d + i]);
      M[i * d + j] = M[j * d + i] = v;
    }
  std::vector<double> ev;
  Matrix V;
  jacobi_eigen(M, d, ev, V);
  double tr_sqrt = 0;
  for (double v : ev) tr_sqrt += std::sqrt(std::max(0.0, v));
  double tr_ab = 0;
  for (size_t i = 0; i < d; ++i) tr_ab += A.sigma[i * d + i] + B.sigma[i * d + i];
  return dist + tr_ab - 2.0 * tr_sqrt;
}

// ---- report ------------------------------------------------------------------------

void MetricsReport::add_image(double p, double s, double r) {
  psnr_values.push_back(p);
  ssim_values.push_back(s);
  rmse_values.push_back(r);
}

namespace {

Aggregate aggregate(const std::vector<double>& values, bool cap_psnr) {
  if (values.empty())
    throw ContractError("MetricsReport: aggregate over an empty image set");
  Aggregate a;
  a.count = values.size();
  std::vector<double> v = values;
  if (cap_psnr)
    for (double& x : v) x = std::min(x, kPsnrCap);
  for (double x : v) a.mean += x;
  a.mean /= static_cast<double>(v.size());
  for (double x : v) a.stdev += (x - a.mean) * (x - a.mean);
  a.stdev = std::sqrt(a.stdev / static_cast<double>(v.size()));
  return a;
}

}  // namespace

Aggregate MetricsReport::psnr() const { return aggregate(psnr_values, true); }
Aggregate MetricsReport::ssim() const { return aggregate(ssim_values, false); }
Aggregate MetricsReport::rmse() const { return aggregate(rmse_values, false); }

}  // namespace mrigan
