#include "mrigan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace mrigan::ad {

namespace {

Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->backward_fn = std::move(backward);
  return n;
}

void require_real(const Var& a, const char* op) {
  if (a->value.is_complex())
    throw ShapeError(std::string(op) + ": graph values must be real64");
}

// ---- small dense matmul kernels (row-major) ----------------------------------

// C (+)= A[m,k] * B[k,n]
void matmul_nn(size_t m, size_t n, size_t k, const double* A, const double* B,
               double* C, bool accum) {
  if (!accum) std::fill(C, C + m * n, 0.0);
  for (size_t i = 0; i < m; ++i) {
    const double* a = A + i * k;
    double* c = C + i * n;
    for (size_t l = 0; l < k; ++l) {
      const double av = a[l];
      const double* b = B + l * n;
      for (size_t j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

// C (+)= A^T * B where A is [k,m], B is [k,n]
void matmul_tn(size_t m, size_t n, size_t k, const double* A, const double* B,
               double* C, bool accum) {
  if (!accum) std::fill(C, C + m * n, 0.0);
  for (size_t l = 0; l < k; ++l) {
    const double* a = A + l * m;
    const double* b = B + l * n;
    for (size_t i = 0; i < m; ++i) {
      const double av = a[i];
      double* c = C + i * n;
      for (size_t j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
}

// C (+)= A * B^T where A is [m,k], B is [n,k]
void matmul_nt(size_t m, size_t n, size_t k, const double* A, const double* B,
               double* C, bool accum) {
  if (!accum) std::fill(C, C + m * n, 0.0);
  for (size_t i = 0; i < m; ++i) {
    const double* a = A + i * k;
    double* c = C + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double* b = B + j * k;
      double dot = 0.0;
      for (size_t l = 0; l < k; ++l) dot += a[l] * b[l];
      c[j] += dot;
    }
  }
}

// ---- im2col / col2im -----------------------------------------------------------

struct ConvGeom {
  size_t c, h, w;       // input planes
  size_t kh, kw;        // kernel
  size_t ho, wo;        // output planes
  int stride, pad;
};

ConvGeom conv_geom(size_t c, size_t h, size_t w, size_t kh, size_t kw,
                   int stride, int pad, const char* op) {
  if (stride < 1) throw ParamError(std::string(op) + ": stride must be >= 1");
  if (pad < 0) throw ParamError(std::string(op) + ": pad must be >= 0");
  long ho = (static_cast<long>(h) + 2 * pad - static_cast<long>(kh)) / stride + 1;
  long wo = (static_cast<long>(w) + 2 * pad - static_cast<long>(kw)) / stride + 1;
  if (ho < 1 || wo < 1 || h + 2 * static_cast<size_t>(pad) < kh ||
      w + 2 * static_cast<size_t>(pad) < kw)
    throw ShapeError(std::string(op) + ": non-positive output extent");
  return {c, h, w, kh, kw, static_cast<size_t>(ho), static_cast<size_t>(wo), stride, pad};
}

// col is [c*kh*kw, ho*wo]
void im2col(const double* x, const ConvGeom& g, double* col) {
  const size_t cols = g.ho * g.wo;
  for (size_t c = 0; c < g.c; ++c) {
    const double* plane = x + c * g.h * g.w;
    for (size_t u = 0; u < g.kh; ++u) {
      for (size_t v = 0; v < g.kw; ++v) {
        double* row = col + ((c * g.kh + u) * g.kw + v) * cols;
        for (size_t i = 0; i < g.ho; ++i) {
          const long yi = static_cast<long>(i) * g.stride - g.pad + static_cast<long>(u);
          if (yi < 0 || yi >= static_cast<long>(g.h)) {
            std::fill(row + i * g.wo, row + (i + 1) * g.wo, 0.0);
            continue;
          }
          const double* src = plane + static_cast<size_t>(yi) * g.w;
          for (size_t j = 0; j < g.wo; ++j) {
            const long xj = static_cast<long>(j) * g.stride - g.pad + static_cast<long>(v);
            row[i * g.wo + j] =
                (xj < 0 || xj >= static_cast<long>(g.w)) ? 0.0 : src[xj];
          }
        }
      }
    }
  }
}

// Adjoint of im2col; accumulates into x.
void col2im(const double* col, const ConvGeom& g, double* x) {
  const size_t cols = g.ho * g.wo;
  for (size_t c = 0; c < g.c; ++c) {
    double* plane = x + c * g.h * g.w;
    for (size_t u = 0; u < g.kh; ++u) {
      for (size_t v = 0; v < g.kw; ++v) {
        const double* row = col + ((c * g.kh + u) * g.kw + v) * cols;
        for (size_t i = 0; i < g.ho; ++i) {
          const long yi = static_cast<long>(i) * g.stride - g.pad + static_cast<long>(u);
          if (yi < 0 || yi >= static_cast<long>(g.h)) continue;
          double* dst = plane + static_cast<size_t>(yi) * g.w;
          for (size_t j = 0; j < g.wo; ++j) {
            const long xj = static_cast<long>(j) * g.stride - g.pad + static_cast<long>(v);
            if (xj >= 0 && xj < static_cast<long>(g.w))
              dst[xj] += row[i * g.wo + j];
          }
        }
      }
    }
  }
}

}  // namespace

// ---- leaves ---------------------------------------------------------------------

Var constant(Tensor v) {
  if (v.is_complex()) throw ShapeError("constant: graph values must be real64");
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

Var leaf(const ParamPtr& p) {
  auto n = std::make_shared<Node>();
  n->value = p->value;
  n->param = p;
  return n;
}

Var detach(const Var& a) { return constant(a->value); }

// ---- elementwise ------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  require_real(a, "add");
  require_real(b, "add");
  return make_node(mrigan::add(a->value, b->value), {a, b}, [](Node& n) {
    n.parents[0]->grad = mrigan::add(n.parents[0]->grad, n.grad);
    n.parents[1]->grad = mrigan::add(n.parents[1]->grad, n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_real(a, "sub");
  require_real(b, "sub");
  return make_node(mrigan::sub(a->value, b->value), {a, b}, [](Node& n) {
    n.parents[0]->grad = mrigan::add(n.parents[0]->grad, n.grad);
    n.parents[1]->grad = mrigan::sub(n.parents[1]->grad, n.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  require_real(a, "mul");
  require_real(b, "mul");
  return make_node(mrigan::mul(a->value, b->value), {a, b}, [](Node& n) {
    n.parents[0]->grad = mrigan::add(n.parents[0]->grad,
                                     mrigan::mul(n.grad, n.parents[1]->value));
    n.parents[1]->grad = mrigan::add(n.parents[1]->grad,
                                     mrigan::mul(n.grad, n.parents[0]->value));
  });
}

Var scale(const Var& a, double s) {
  require_real(a, "scale");
  return make_node(mrigan::scale(a->value, s), {a}, [s](Node& n) {
    n.parents[0]->grad =
        mrigan::add(n.parents[0]->grad, mrigan::scale(n.grad, s));
  });
}

Var sum(const Var& a) {
  require_real(a, "sum");
  Tensor v = Tensor::from({1}, {mrigan::sum(a->value).real()});
  return make_node(std::move(v), {a}, [](Node& n) {
    double g = n.grad.r(0);
    Tensor& pg = n.parents[0]->grad;
    for (size_t i = 0; i < pg.numel(); ++i) pg.r(i) += g;
  });
}

Var mean(const Var& a) {
  require_real(a, "mean");
  double inv = 1.0 / static_cast<double>(a->value.numel());
  Tensor v = Tensor::from({1}, {mrigan::sum(a->value).real() * inv});
  return make_node(std::move(v), {a}, [inv](Node& n) {
    double g = n.grad.r(0) * inv;
    Tensor& pg = n.parents[0]->grad;
    for (size_t i = 0; i < pg.numel(); ++i) pg.r(i) += g;
  });
}

namespace {

// Elementwise helper: fwd(x) and dfdx(x, y) where y = fwd(x).
template <typename Fwd, typename Dfdx>
Var unary_ew(const Var& a, const char* name, Fwd fwd, Dfdx dfdx) {
  require_real(a, name);
  Tensor v = a->value;
  for (double& x : v.raw()) x = fwd(x);
  Tensor saved = v;
  return make_node(std::move(v), {a}, [dfdx, saved](Node& n) {
    Tensor& pg = n.parents[0]->grad;
    const Tensor& x = n.parents[0]->value;
    for (size_t i = 0; i < pg.numel(); ++i)
      pg.r(i) += n.grad.r(i) * dfdx(x.r(i), saved.r(i));
  });
}

}  // namespace

Var relu(const Var& a) {
  return unary_ew(
      a, "relu", [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var lrelu(const Var& a, double slope) {
  return unary_ew(
      a, "lrelu", [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var tanh_op(const Var& a) {
  return unary_ew(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary_ew(
      a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var log_op(const Var& a) {
  return unary_ew(
      a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var clamp_op(const Var& a, double lo, double hi) {
  return unary_ew(
      a, "clamp",
      [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// ---- conv / deconv ------------------------------------------------------------------

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  require_real(x, "conv2d");
  require_real(w, "conv2d");
  require_real(b, "conv2d");
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  const Tensor& bv = b->value;
  if (xv.rank() != 4 || wv.rank() != 4 || bv.rank() != 1)
    throw ShapeError("conv2d: expected x rank 4, w rank 4, b rank 1");
  if (xv.extent(1) != wv.extent(1))
    throw ShapeError("conv2d: channel mismatch between input and weights");
  if (bv.extent(0) != wv.extent(0))
    throw ShapeError("conv2d: bias size != output channels");
  const size_t N = xv.extent(0), K = wv.extent(0);
  ConvGeom g = conv_geom(xv.extent(1), xv.extent(2), xv.extent(3),
                         wv.extent(2), wv.extent(3), stride, pad, "conv2d");
  const size_t ckk = g.c * g.kh * g.kw, cols = g.ho * g.wo;

  Tensor out = Tensor::zeros({N, K, g.ho, g.wo});
  std::vector<double> col(ckk * cols);
  for (size_t n = 0; n < N; ++n) {
    im2col(xv.data() + n * g.c * g.h * g.w, g, col.data());
    double* o = out.data() + n * K * cols;
    matmul_nn(K, cols, ckk, wv.data(), col.data(), o, false);
    for (size_t k = 0; k < K; ++k) {
      const double bias = bv.r(k);
      for (size_t i = 0; i < cols; ++i) o[k * cols + i] += bias;
    }
  }

  return make_node(std::move(out), {x, w, b}, [g, N, K, ckk, cols](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const Tensor& wv = n.parents[1]->value;
    Tensor& dx = n.parents[0]->grad;
    Tensor& dw = n.parents[1]->grad;
    Tensor& db = n.parents[2]->grad;
    std::vector<double> col(ckk * cols), dcol(ckk * cols);
    for (size_t s = 0; s < N; ++s) {
      const double* go = n.grad.data() + s * K * cols;
      im2col(xv.data() + s * g.c * g.h * g.w, g, col.data());
      matmul_nt(K, ckk, cols, go, col.data(), dw.data(), true);
      matmul_tn(ckk, cols, K, wv.data(), go, dcol.data(), false);
      col2im(dcol.data(), g, dx.data() + s * g.c * g.h * g.w);
      for (size_t k = 0; k < K; ++k) {
        double acc = 0.0;
        for (size_t i = 0; i < cols; ++i) acc += go[k * cols + i];
        db.r(k) += acc;
      }
    }
  });
}

Var deconv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  require_real(x, "deconv2d");
  require_real(w, "deconv2d");
  require_real(b, "deconv2d");
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  const Tensor& bv = b->value;
  if (xv.rank() != 4 || wv.rank() != 4 || bv.rank() != 1)
    throw ShapeError("deconv2d: expected x rank 4, w rank 4, b rank 1");
  if (xv.extent(1) != wv.extent(0))
    throw ShapeError("deconv2d: channel mismatch between input and weights");
  if (bv.extent(0) != wv.extent(1))
    throw ShapeError("deconv2d: bias size != output channels");
  const size_t N = xv.extent(0), K = wv.extent(0), C = wv.extent(1);
  const size_t kh = wv.extent(2), kw = wv.extent(3);
  const size_t hi = xv.extent(2), wi = xv.extent(3);
  const long ho = static_cast<long>(stride) * (static_cast<long>(hi) - 1) +
                  static_cast<long>(kh) - 2 * pad;
  const long wo = static_cast<long>(stride) * (static_cast<long>(wi) - 1) +
                  static_cast<long>(kw) - 2 * pad;
  if (ho < 1 || wo < 1) throw ShapeError("deconv2d: non-positive output extent");
  // The deconv output plays the role of the conv input in this geometry.
  ConvGeom g = conv_geom(C, static_cast<size_t>(ho), static_cast<size_t>(wo),
                         kh, kw, stride, pad, "deconv2d");
  const size_t ckk = C * kh * kw, cols = g.ho * g.wo;  // cols == hi*wi

  Tensor out = Tensor::zeros({N, C, static_cast<size_t>(ho), static_cast<size_t>(wo)});
  std::vector<double> col(ckk * cols);
  for (size_t n = 0; n < N; ++n) {
    matmul_tn(ckk, cols, K, wv.data(), xv.data() + n * K * cols, col.data(), false);
    double* o = out.data() + n * C * g.h * g.w;
    col2im(col.data(), g, o);
    for (size_t c = 0; c < C; ++c) {
      const double bias = bv.r(c);
      for (size_t i = 0; i < g.h * g.w; ++i) o[c * g.h * g.w + i] += bias;
    }
  }

  return make_node(std::move(out), {x, w, b}, [g, N, K, ckk, cols](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const Tensor& wv = n.parents[1]->value;
    Tensor& dx = n.parents[0]->grad;
    Tensor& dw = n.parents[1]->grad;
    Tensor& db = n.parents[2]->grad;
    const size_t C = g.c;
    std::vector<double> colg(ckk * cols);
    for (size_t s = 0; s < N; ++s) {
      const double* go = n.grad.data() + s * C * g.h * g.w;
      im2col(go, g, colg.data());
      matmul_nn(K, cols, ckk, wv.data(), colg.data(), dx.data() + s * K * cols, true);
      matmul_nt(K, ckk, cols, xv.data() + s * K * cols, colg.data(), dw.data(), true);
      for (size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (size_t i = 0; i < g.h * g.w; ++i) acc += go[c * g.h * g.w + i];
        db.r(c) += acc;
      }
    }
  });
}

Var dense(const Var& x, const Var& w, const Var& b) {
  require_real(x, "dense");
  require_real(w, "dense");
  require_real(b, "dense");
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  const Tensor& bv = b->value;
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1)
    throw ShapeError("dense: expected x rank 2, w rank 2, b rank 1");
  if (xv.extent(1) != wv.extent(0))
    throw ShapeError("dense: inner dimension mismatch");
  if (bv.extent(0) != wv.extent(1)) throw ShapeError("dense: bias size mismatch");
  const size_t N = xv.extent(0), F = xv.extent(1), G = wv.extent(1);
  Tensor out = Tensor::zeros({N, G});
  matmul_nn(N, G, F, xv.data(), wv.data(), out.data(), false);
  for (size_t n = 0; n < N; ++n)
    for (size_t j = 0; j < G; ++j) out.r(n * G + j) += bv.r(j);
  return make_node(std::move(out), {x, w, b}, [N, F, G](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const Tensor& wv = n.parents[1]->value;
    matmul_nt(N, F, G, n.grad.data(), wv.data(), n.parents[0]->grad.data(), true);
    matmul_tn(F, G, N, xv.data(), n.grad.data(), n.parents[1]->grad.data(), true);
    Tensor& db = n.parents[2]->grad;
    for (size_t s = 0; s < N; ++s)
      for (size_t j = 0; j < G; ++j) db.r(j) += n.grad.r(s * G + j);
  });
}

Var reshape(const Var& x, std::vector<size_t> shape) {
  require_real(x, "reshape");
  Tensor v = x->value.reshaped(std::move(shape));
  return make_node(std::move(v), {x}, [](Node& n) {
    Tensor g = n.grad.reshaped(n.parents[0]->value.shape());
    n.parents[0]->grad = mrigan::add(n.parents[0]->grad, g);
  });
}

Var flatten(const Var& x) {
  if (x->value.rank() < 2) throw ShapeError("flatten: rank >= 2 required");
  size_t n = x->value.extent(0);
  return reshape(x, {n, x->value.numel() / n});
}

Var concat_ch(const Var& a, const Var& b) {
  require_real(a, "concat_ch");
  require_real(b, "concat_ch");
  Tensor v = concat_channels(a->value, b->value);
  size_t ca = a->value.extent(1);
  return make_node(std::move(v), {a, b}, [ca](Node& n) {
    const size_t N = n.grad.extent(0), C = n.grad.extent(1);
    const size_t plane = n.grad.extent(2) * n.grad.extent(3);
    Tensor& ga = n.parents[0]->grad;
    Tensor& gb = n.parents[1]->grad;
    const size_t cb = C - ca;
    for (size_t s = 0; s < N; ++s) {
      const double* src = n.grad.data() + s * C * plane;
      double* da = ga.data() + s * ca * plane;
      double* db = gb.data() + s * cb * plane;
      for (size_t i = 0; i < ca * plane; ++i) da[i] += src[i];
      for (size_t i = 0; i < cb * plane; ++i) db[i] += src[ca * plane + i];
    }
  });
}

// ---- batch normalization -------------------------------------------------------------

Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta,
                const ParamPtr& running_mean, const ParamPtr& running_var,
                Mode mode, double momentum, double eps) {
  require_real(x, "batchnorm2d");
  if (eps <= 0) throw ParamError("batchnorm2d: eps must be > 0");
  const Tensor& xv = x->value;
  if (xv.rank() != 4) throw ShapeError("batchnorm2d: rank-4 input required");
  const size_t N = xv.extent(0), C = xv.extent(1);
  const size_t plane = xv.extent(2) * xv.extent(3);
  if (gamma->value.numel() != C || beta->value.numel() != C)
    throw ShapeError("batchnorm2d: affine parameter size != channels");
  const size_t m = N * plane;

  Tensor mean_c = Tensor::zeros({C});
  Tensor invstd_c = Tensor::zeros({C});
  if (mode == Mode::train) {
    for (size_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (size_t n = 0; n < N; ++n) {
        const double* p = xv.data() + (n * C + c) * plane;
        for (size_t i = 0; i < plane; ++i) acc += p[i];
      }
      const double mu = acc / static_cast<double>(m);
      double var = 0.0;
      for (size_t n = 0; n < N; ++n) {
        const double* p = xv.data() + (n * C + c) * plane;
        for (size_t i = 0; i < plane; ++i) var += (p[i] - mu) * (p[i] - mu);
      }
      var /= static_cast<double>(m);
      mean_c.r(c) = mu;
      invstd_c.r(c) = 1.0 / std::sqrt(var + eps);
      running_mean->value.r(c) = momentum * running_mean->value.r(c) + (1 - momentum) * mu;
      running_var->value.r(c) = momentum * running_var->value.r(c) + (1 - momentum) * var;
    }
  } else {
    for (size_t c = 0; c < C; ++c) {
      mean_c.r(c) = running_mean->value.r(c);
      invstd_c.r(c) = 1.0 / std::sqrt(running_var->value.r(c) + eps);
    }
  }

  Tensor out = Tensor::zeros(xv.shape());
  for (size_t n = 0; n < N; ++n)
    for (size_t c = 0; c < C; ++c) {
      const double* p = xv.data() + (n * C + c) * plane;
      double* o = out.data() + (n * C + c) * plane;
      const double mu = mean_c.r(c), is = invstd_c.r(c);
      const double gc = gamma->value.r(c), bc = beta->value.r(c);
      for (size_t i = 0; i < plane; ++i) o[i] = gc * (p[i] - mu) * is + bc;
    }

  const bool train = mode == Mode::train;
  return make_node(std::move(out), {x, gamma, beta},
                   [mean_c, invstd_c, N, C, plane, m, train](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    const Tensor& gv = n.parents[1]->value;
    Tensor& dx = n.parents[0]->grad;
    Tensor& dgamma = n.parents[1]->grad;
    Tensor& dbeta = n.parents[2]->grad;
    for (size_t c = 0; c < C; ++c) {
      const double mu = mean_c.r(c), is = invstd_c.r(c), gc = gv.r(c);
      double sum_g = 0.0, sum_gx = 0.0;
      for (size_t s = 0; s < N; ++s) {
        const double* g = n.grad.data() + (s * C + c) * plane;
        const double* p = xv.data() + (s * C + c) * plane;
        for (size_t i = 0; i < plane; ++i) {
          sum_g += g[i];
          sum_gx += g[i] * (p[i] - mu) * is;
        }
      }
      dbeta.r(c) += sum_g;
      dgamma.r(c) += sum_gx;
      const double inv_m = 1.0 / static_cast<double>(m);
      for (size_t s = 0; s < N; ++s) {
        const double* g = n.grad.data() + (s * C + c) * plane;
        const double* p = xv.data() + (s * C + c) * plane;
        double* d = dx.data() + (s * C + c) * plane;
        for (size_t i = 0; i < plane; ++i) {
          const double xhat = (p[i] - mu) * is;
          if (train)
            d[i] += gc * is * (g[i] - inv_m * sum_g - xhat * inv_m * sum_gx);
          else
            d[i] += gc * is * g[i];
        }
      }
    }
  });
}

// ---- FFT over channel pairs ------------------------------------------------------------

namespace {

Tensor fftc_apply(const Tensor& x, bool inverse) {
  if (x.rank() != 4) throw ShapeError("fft2c: rank-4 input required");
  if (x.extent(1) % 2 != 0)
    throw ShapeError("fft2c: even channel count required (re,im pairs)");
  const size_t N = x.extent(0), C = x.extent(1) / 2;
  const size_t h = x.extent(2), w = x.extent(3), plane = h * w;
  Tensor out = Tensor::zeros(x.shape());
  Tensor buf = Tensor::zeros({h, w}, Dtype::complex128);
  for (size_t n = 0; n < N; ++n)
    for (size_t c = 0; c < C; ++c) {
      const double* re = x.data() + (n * 2 * C + 2 * c) * plane;
      const double* im = x.data() + (n * 2 * C + 2 * c + 1) * plane;
      for (size_t i = 0; i < plane; ++i) buf.set_c(i, cplx(re[i], im[i]));
      Tensor f = inverse ? ifft2(buf) : fft2(buf);
      double* ore = out.data() + (n * 2 * C + 2 * c) * plane;
      double* oim = out.data() + (n * 2 * C + 2 * c + 1) * plane;
      for (size_t i = 0; i < plane; ++i) {
        ore[i] = f.c(i).real();
        oim[i] = f.c(i).imag();
      }
    }
  return out;
}

Var fftc_node(const Var& x, bool inverse) {
  require_real(x, "fft2c");
  Tensor v = fftc_apply(x->value, inverse);
  return make_node(std::move(v), {x}, [inverse](Node& n) {
    // Orthogonal real-linear map: Jacobian transpose is the inverse map.
    Tensor g = fftc_apply(n.grad, !inverse);
    n.parents[0]->grad = mrigan::add(n.parents[0]->grad, g);
  });
}

}  // namespace

Var fft2c(const Var& x) { return fftc_node(x, false); }
Var ifft2c(const Var& x) { return fftc_node(x, true); }

Var magnitude(const Var& x, double eps) {
  require_real(x, "magnitude");
  const Tensor& xv = x->value;
  if (xv.rank() != 4 || xv.extent(1) % 2 != 0)
    throw ShapeError("magnitude: rank-4 input with re,im channel pairs required");
  const size_t N = xv.extent(0), C = xv.extent(1) / 2;
  const size_t plane = xv.extent(2) * xv.extent(3);
  Tensor out = Tensor::zeros({N, C, xv.extent(2), xv.extent(3)});
  for (size_t n = 0; n < N; ++n)
    for (size_t c = 0; c < C; ++c) {
      const double* re = xv.data() + (n * 2 * C + 2 * c) * plane;
      const double* im = xv.data() + (n * 2 * C + 2 * c + 1) * plane;
      double* o = out.data() + (n * C + c) * plane;
      for (size_t i = 0; i < plane; ++i)
        o[i] = std::sqrt(re[i] * re[i] + im[i] * im[i] + eps);
    }
  Tensor saved = out;
  return make_node(std::move(out), {x}, [saved, N, C, plane](Node& n) {
    const Tensor& xv = n.parents[0]->value;
    Tensor& dx = n.parents[0]->grad;
    for (size_t s = 0; s < N; ++s)
      for (size_t c = 0; c < C; ++c) {
        const double* re = xv.data() + (s * 2 * C + 2 * c) * plane;
        const double* im = xv.data() + (s * 2 * C + 2 * c + 1) * plane;
        const double* y = saved.data() + (s * C + c) * plane;
        const double* g = n.grad.data() + (s * C + c) * plane;
        double* dre = dx.data() + (s * 2 * C + 2 * c) * plane;
        double* dim = dx.data() + (s * 2 * C + 2 * c + 1) * plane;
        for (size_t i = 0; i < plane; ++i) {
          dre[i] += g[i] * re[i] / y[i];
          dim[i] += g[i] * im[i] / y[i];
        }
      }
  });
}

// ---- backprop ---------------------------------------------------------------------------

void backprop(const Var& loss) {
  if (!loss) throw ContractError("backprop: null loss");
  if (loss->value.numel() != 1 || loss->value.is_complex())
    throw ContractError("backprop: loss must be a real scalar");

  // Iterative post-order DFS; `order` lists inputs before consumers.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* n;
    size_t next;
  };
  std::vector<Frame> stack{{loss.get(), 0}};
  visited.insert(loss.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Node* p = f.n->parents[f.next++].get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad = Tensor::zeros(n->value.shape());
  std::unordered_set<Param*> seen;
  for (Node* n : order)
    if (n->param && seen.insert(n->param.get()).second) n->param->zero_grad();

  loss->grad.r(0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);

  for (Node* n : order)
    if (n->param) n->param->grad = mrigan::add(n->param->grad, n->grad);
}

// ---- gradcheck ---------------------------------------------------------------------------

GradcheckReport gradcheck(const std::function<Var()>& f,
                          const std::vector<ParamPtr>& params, double h,
                          size_t max_coords) {
  if (h < 1e-7 || h > 1e-4)
    throw ParamError("gradcheck: h must lie in [1e-7, 1e-4]");
  Var loss = f();
  backprop(loss);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p->grad);

  auto eval = [&]() { return f()->value.r(0); };

  GradcheckReport rep;
  Rng rng(0x67adc0deULL);
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    const size_t n = p->value.numel();
    std::vector<size_t> coords;
    if (n <= max_coords) {
      coords.resize(n);
      for (size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (size_t i = 0; i < max_coords; ++i)
        coords.push_back(static_cast<size_t>(rng.uniform_int(n)));
    }
    for (size_t c : coords) {
      const double orig = p->value.r(c);
      p->value.r(c) = orig + h;
      const double f1 = eval();
      p->value.r(c) = orig - h;
      const double f2 = eval();
      p->value.r(c) = orig;
      const double numeric = (f1 - f2) / (2.0 * h);
      const double exact = analytic[pi].r(c);
      const double rel = std::abs(numeric - exact) /
                         std::max({1.0, std::abs(numeric), std::abs(exact)});
      ++rep.coords_checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_coord = p->name + "[" + std::to_string(c) + "]";
      }
    }
  }
  return rep;
}

}  // namespace mrigan::ad
