// Unitary 2-D FFT over Tensor. Power-of-two extents use an iterative radix-2
// transform; everything else goes through Bluestein's chirp-z algorithm on a
// padded power-of-two grid, so any extent >= 1 is exact to roundoff.

#include <cmath>
#include <numbers>

#include "mrigan/tensor.hpp"

namespace mrigan {
namespace detail {

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Unnormalized in-place radix-2 Cooley-Tukey. inverse flips the twiddle sign.
void fft_pow2(std::vector<cplx>& v, bool inverse) {
  const size_t n = v.size();
  if (n <= 1) return;
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(v[i], v[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        cplx u = v[i + k];
        cplx t = v[i + k + len / 2] * w;
        v[i + k] = u + t;
        v[i + k + len / 2] = u - t;
        w *= wlen;
      }
    }
  }
}

// Unnormalized DFT of arbitrary length via chirp-z. The quadratic phase is
// reduced mod 2n before the trig call to keep the angle small and exact.
void fft_bluestein(std::vector<cplx>& v, bool inverse) {
  const size_t n = v.size();
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<cplx> chirp(n);
  for (size_t k = 0; k < n; ++k) {
    size_t k2 = (k * k) % (2 * n);
    double ang = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
  }
  const size_t m = next_pow2(2 * n - 1);
  std::vector<cplx> a(m, cplx(0, 0)), b(m, cplx(0, 0));
  for (size_t k = 0; k < n; ++k) a[k] = v[k] * chirp[k];
  for (size_t k = 0; k < n; ++k) {
    b[k] = std::conj(chirp[k]);
    if (k != 0) b[m - k] = std::conj(chirp[k]);
  }
  fft_pow2(a, false);
  fft_pow2(b, false);
  for (size_t k = 0; k < m; ++k) a[k] *= b[k];
  fft_pow2(a, true);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (size_t k = 0; k < n; ++k) v[k] = a[k] * inv_m * chirp[k];
}

void fft_raw(std::vector<cplx>& v, bool inverse) {
  if (v.size() <= 1) return;
  if (is_pow2(v.size()))
    fft_pow2(v, inverse);
  else
    fft_bluestein(v, inverse);
}

}  // namespace

void fft1d(std::vector<cplx>& v, bool inverse) {
  fft_raw(v, inverse);
  const double s = 1.0 / std::sqrt(static_cast<double>(v.size()));
  for (cplx& z : v) z *= s;
}

}  // namespace detail

namespace {

Tensor fft2_impl(const Tensor& x, bool inverse) {
  if (x.rank() != 2) throw ShapeError("fft2: rank-2 tensor required");
  if (!x.is_complex()) throw ShapeError("fft2: complex tensor required");
  const size_t h = x.extent(0), w = x.extent(1);
  Tensor out = x;
  std::vector<cplx> row(w), col(h);
  for (size_t i = 0; i < h; ++i) {
    for (size_t j = 0; j < w; ++j) row[j] = out.c(i * w + j);
    detail::fft1d(row, inverse);
    for (size_t j = 0; j < w; ++j) out.set_c(i * w + j, row[j]);
  }
  for (size_t j = 0; j < w; ++j) {
    for (size_t i = 0; i < h; ++i) col[i] = out.c(i * w + j);
    detail::fft1d(col, inverse);
    for (size_t i = 0; i < h; ++i) out.set_c(i * w + j, col[i]);
  }
  return out;
}

}  // namespace

Tensor fft2(const Tensor& x) { return fft2_impl(x, false); }
Tensor ifft2(const Tensor& y) { return fft2_impl(y, true); }

}  // namespace mrigan
