#include "mrigan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mrigan {

namespace {

size_t checked_numel(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive");
    n *= e;
  }
  return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor::Tensor(std::vector<size_t> shape, Dtype dt)
    : shape_(std::move(shape)), dtype_(dt) {
  numel_ = checked_numel(shape_);
  buf_.assign(numel_ * (is_complex() ? 2 : 1), 0.0);
}

Tensor Tensor::zeros(std::vector<size_t> shape, Dtype dt) {
  return Tensor(std::move(shape), dt);
}

Tensor Tensor::full(std::vector<size_t> shape, double value) {
  Tensor t(std::move(shape), Dtype::real64);
  std::fill(t.buf_.begin(), t.buf_.end(), value);
  return t;
}

Tensor Tensor::from(std::vector<size_t> shape, std::vector<double> values) {
  Tensor t(std::move(shape), Dtype::real64);
  if (values.size() != t.numel_) throw ShapeError("from: value count != numel");
  t.buf_ = std::move(values);
  return t;
}

Tensor Tensor::from_complex(std::vector<size_t> shape, const std::vector<cplx>& values) {
  Tensor t(std::move(shape), Dtype::complex128);
  if (values.size() != t.numel_) throw ShapeError("from_complex: value count != numel");
  for (size_t i = 0; i < values.size(); ++i) t.set_c(i, values[i]);
  return t;
}

Tensor Tensor::randn(std::vector<size_t> shape, Rng& rng, double stddev) {
  Tensor t(std::move(shape), Dtype::real64);
  for (size_t i = 0; i < t.numel_; ++i) t.buf_[i] = stddev * rng.normal();
  return t;
}

size_t Tensor::offset(std::initializer_list<size_t> idx) const {
  if (idx.size() != rank()) throw ShapeError("index rank mismatch");
  size_t off = 0;
  size_t axis = 0;
  for (size_t i : idx) {
    if (i >= shape_[axis]) throw ShapeError("index out of range");
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double* Tensor::data() {
  if (is_complex()) throw ShapeError("data(): tensor is complex");
  return buf_.data();
}

const double* Tensor::data() const {
  if (is_complex()) throw ShapeError("data(): tensor is complex");
  return buf_.data();
}

Tensor Tensor::reshaped(std::vector<size_t> shape) const {
  if (checked_numel(shape) != numel_)
    throw ShapeError("reshaped: element count mismatch");
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : buf_)
    if (!std::isfinite(v)) return false;
  return true;
}

// ---- elementwise -------------------------------------------------------------

namespace {

template <typename F>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, F f) {
  require_same_shape(a, b, name);
  if (a.is_complex() || b.is_complex()) {
    Tensor out = Tensor::zeros(a.shape(), Dtype::complex128);
    for (size_t i = 0; i < a.numel(); ++i) out.set_c(i, f(a.val(i), b.val(i)));
    return out;
  }
  Tensor out = Tensor::zeros(a.shape(), Dtype::real64);
  for (size_t i = 0; i < a.numel(); ++i)
    out.r(i) = f(cplx(a.r(i), 0), cplx(b.r(i), 0)).real();
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "add", [](cplx x, cplx y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "sub", [](cplx x, cplx y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(a, b, "mul", [](cplx x, cplx y) { return x * y; });
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = a;
  for (double& v : out.raw()) v *= s;
  return out;
}

Tensor scale(const Tensor& a, cplx s) {
  Tensor out = a.is_complex() ? a : to_complex(a);
  for (size_t i = 0; i < out.numel(); ++i) out.set_c(i, out.c(i) * s);
  return out;
}

Tensor conj(const Tensor& a) {
  if (!a.is_complex()) return a;
  Tensor out = a;
  for (size_t i = 0; i < out.numel(); ++i) out.set_c(i, std::conj(out.c(i)));
  return out;
}

Tensor abs(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), Dtype::real64);
  for (size_t i = 0; i < a.numel(); ++i) out.r(i) = std::abs(a.val(i));
  return out;
}

Tensor real(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), Dtype::real64);
  for (size_t i = 0; i < a.numel(); ++i) out.r(i) = a.val(i).real();
  return out;
}

Tensor imag(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), Dtype::real64);
  for (size_t i = 0; i < a.numel(); ++i) out.r(i) = a.val(i).imag();
  return out;
}

cplx sum(const Tensor& a) {
  cplx s = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) s += a.val(i);
  return s;
}

cplx mean(const Tensor& a) { return sum(a) / static_cast<double>(a.numel()); }

double l2norm(const Tensor& a) {
  double s = 0.0;
  for (double v : a.raw()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.val(i)));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(a.val(i) - b.val(i)));
  return m;
}

Tensor pad2d(const Tensor& a, size_t n) {
  if (a.rank() != 2) throw ShapeError("pad2d: rank-2 tensor required");
  size_t h = a.extent(0), w = a.extent(1);
  Tensor out = Tensor::zeros({h + 2 * n, w + 2 * n}, a.dtype());
  for (size_t i = 0; i < h; ++i)
    for (size_t j = 0; j < w; ++j) {
      if (a.is_complex())
        out.set_c((i + n) * (w + 2 * n) + (j + n), a.c(i * w + j));
      else
        out.r((i + n) * (w + 2 * n) + (j + n)) = a.r(i * w + j);
    }
  return out;
}

Tensor crop2d(const Tensor& a, size_t n) {
  if (a.rank() != 2) throw ShapeError("crop2d: rank-2 tensor required");
  size_t h = a.extent(0), w = a.extent(1);
  if (h <= 2 * n || w <= 2 * n) throw ShapeError("crop2d: border too large");
  Tensor out = Tensor::zeros({h - 2 * n, w - 2 * n}, a.dtype());
  for (size_t i = 0; i < h - 2 * n; ++i)
    for (size_t j = 0; j < w - 2 * n; ++j) {
      if (a.is_complex())
        out.set_c(i * (w - 2 * n) + j, a.c((i + n) * w + (j + n)));
      else
        out.r(i * (w - 2 * n) + j) = a.r((i + n) * w + (j + n));
    }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != 4 || b.rank() != 4)
    throw ShapeError("concat_channels: rank-4 tensors required");
  if (a.dtype() != b.dtype())
    throw ShapeError("concat_channels: dtype mismatch");
  if (a.extent(0) != b.extent(0) || a.extent(2) != b.extent(2) ||
      a.extent(3) != b.extent(3))
    throw ShapeError("concat_channels: non-channel extents differ");
  size_t n = a.extent(0), ca = a.extent(1), cb = b.extent(1);
  size_t h = a.extent(2), w = a.extent(3);
  size_t plane = h * w;
  size_t mult = a.is_complex() ? 2 : 1;
  Tensor out = Tensor::zeros({n, ca + cb, h, w}, a.dtype());
  for (size_t i = 0; i < n; ++i) {
    double* dst = out.raw().data() + i * (ca + cb) * plane * mult;
    const double* pa = a.raw().data() + i * ca * plane * mult;
    const double* pb = b.raw().data() + i * cb * plane * mult;
    std::copy(pa, pa + ca * plane * mult, dst);
    std::copy(pb, pb + cb * plane * mult, dst + ca * plane * mult);
  }
  return out;
}

Tensor to_complex(const Tensor& a) {
  if (a.is_complex()) return a;
  Tensor out = Tensor::zeros(a.shape(), Dtype::complex128);
  for (size_t i = 0; i < a.numel(); ++i) out.set_c(i, cplx(a.r(i), 0.0));
  return out;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (a.is_complex()) throw ShapeError("clamp: real tensor required");
  Tensor out = a;
  for (double& v : out.raw()) v = std::min(hi, std::max(lo, v));
  return out;
}

Tensor fftshift2(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("fftshift2: rank-2 tensor required");
  size_t h = a.extent(0), w = a.extent(1);
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  for (size_t i = 0; i < h; ++i)
    for (size_t j = 0; j < w; ++j) {
      size_t si = (i + h / 2) % h, sj = (j + w / 2) % w;
      if (a.is_complex())
        out.set_c(si * w + sj, a.c(i * w + j));
      else
        out.r(si * w + sj) = a.r(i * w + j);
    }
  return out;
}

}  // namespace mrigan
