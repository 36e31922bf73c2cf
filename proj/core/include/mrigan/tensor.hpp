#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "mrigan/errors.hpp"
#include "mrigan/rng.hpp"

namespace mrigan {

using cplx = std::complex<double>;

enum class Dtype : uint8_t { real64 = 0, complex128 = 1 };

// Dense row-major n-dimensional array of real64 or complex128 elements.
// All public operations are pure: inputs are never mutated, every result is a
// fresh tensor. Complex storage is interleaved (re, im) doubles.
class Tensor {
public:
  Tensor() = default;

  static Tensor zeros(std::vector<size_t> shape, Dtype dt = Dtype::real64);
  static Tensor full(std::vector<size_t> shape, double value);
  static Tensor from(std::vector<size_t> shape, std::vector<double> values);
  static Tensor from_complex(std::vector<size_t> shape, const std::vector<cplx>& values);
  // I.i.d. N(0, stddev^2) real tensor drawn from `rng`.
  static Tensor randn(std::vector<size_t> shape, Rng& rng, double stddev = 1.0);

  Dtype dtype() const { return dtype_; }
  bool is_complex() const { return dtype_ == Dtype::complex128; }
  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t extent(size_t axis) const { return shape_[axis]; }
  size_t numel() const { return numel_; }
  bool empty() const { return numel_ == 0; }

  // Flat element access. r()/set_c() match the tensor dtype; val() reads any
  // dtype as complex.
  double r(size_t i) const { return buf_[i]; }
  double& r(size_t i) { return buf_[i]; }
  cplx c(size_t i) const { return {buf_[2 * i], buf_[2 * i + 1]}; }
  void set_c(size_t i, cplx z) {
    buf_[2 * i] = z.real();
    buf_[2 * i + 1] = z.imag();
  }
  cplx val(size_t i) const { return is_complex() ? c(i) : cplx(buf_[i], 0.0); }

  size_t offset(std::initializer_list<size_t> idx) const;
  double& at(std::initializer_list<size_t> idx) { return buf_[offset(idx)]; }
  double at(std::initializer_list<size_t> idx) const { return buf_[offset(idx)]; }
  cplx cat(std::initializer_list<size_t> idx) const { return c(offset(idx)); }
  void set_cat(std::initializer_list<size_t> idx, cplx z) { set_c(offset(idx), z); }

  // Raw real64 buffer (kernels). Throws on complex tensors.
  double* data();
  const double* data() const;
  // Underlying double storage regardless of dtype (serialization).
  const std::vector<double>& raw() const { return buf_; }
  std::vector<double>& raw() { return buf_; }

  // Same storage reinterpreted under a new shape with equal element count.
  Tensor reshaped(std::vector<size_t> shape) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

private:
  Tensor(std::vector<size_t> shape, Dtype dt);
  std::vector<size_t> shape_;
  Dtype dtype_ = Dtype::real64;
  size_t numel_ = 0;
  std::vector<double> buf_;
};

// ---- elementwise and reduction suite ----------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise (Hadamard)
Tensor scale(const Tensor& a, double s);
Tensor scale(const Tensor& a, cplx s);
Tensor conj(const Tensor& a);
Tensor abs(const Tensor& a);   // magnitude, always real64
Tensor real(const Tensor& a);  // real part, real64
Tensor imag(const Tensor& a);  // imaginary part, real64
cplx sum(const Tensor& a);
cplx mean(const Tensor& a);
double l2norm(const Tensor& a);
double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

// Zero-pad / crop a border of `n` pixels on a 2-D tensor.
Tensor pad2d(const Tensor& a, size_t n);
Tensor crop2d(const Tensor& a, size_t n);
// Concatenate N x C x H x W tensors along the channel axis.
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Real image promoted to complex with zero imaginary part.
Tensor to_complex(const Tensor& a);
// Elementwise clamp of a real tensor.
Tensor clamp(const Tensor& a, double lo, double hi);
// Swap quadrants of a 2-D tensor so index (0,0) moves to the centre.
Tensor fftshift2(const Tensor& a);

// ---- unitary 2-D FFT ---------------------------------------------------------
// Orthonormal convention: 1/sqrt(N) in both directions, so the transform is an
// isometry and fft2/ifft2 are exact inverses. Arbitrary extents are supported
// (radix-2 with a Bluestein fallback for non powers of two).
Tensor fft2(const Tensor& x);
Tensor ifft2(const Tensor& y);

namespace detail {
// In-place unitary 1-D transforms used by fft2; exposed for reuse.
void fft1d(std::vector<cplx>& v, bool inverse);
}  // namespace detail

}  // namespace mrigan
