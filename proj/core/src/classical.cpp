#include "mrigan/classical.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "mrigan/io.hpp"
#include "mrigan/rng.hpp"

namespace mrigan {

namespace {

// 0.5*lambda*||mask.*Fx - y_u||^2 and the smoothed anisotropic TV term.
struct Objective {
  double data = 0, tv = 0;
  double total() const { return data + tv; }
};

Objective tv_objective(const Tensor& x, const Tensor& y_u, const Mask& mask,
                       const TvConfig& cfg) {
  Objective o;
  Tensor r = sub(mul(mask.grid, fft2(to_complex(x))), y_u);
  double e = l2norm(r);
  o.data = 0.5 * cfg.lambda * e * e;
  const size_t h = x.extent(0), w = x.extent(1);
  for (size_t i = 0; i < h; ++i)
    for (size_t j = 0; j < w; ++j) {
      double gx = x.at({i, (j + 1) % w}) - x.at({i, j});
      double gy = x.at({(i + 1) % h, j}) - x.at({i, j});
      o.tv += std::sqrt(gx * gx + cfg.mu * cfg.mu) +
              std::sqrt(gy * gy + cfg.mu * cfg.mu);
    }
  return o;
}

Tensor tv_gradient(const Tensor& x, const Tensor& y_u, const Mask& mask,
                   const TvConfig& cfg) {
  // Data term: lambda * Re(F^H (mask.*Fx - y_u)) under the unitary transform.
  Tensor resid = sub(mul(mask.grid, fft2(to_complex(x))), y_u);
  Tensor g = scale(real(ifft2(resid)), cfg.lambda);
  const size_t h = x.extent(0), w = x.extent(1);
  auto dphi = [&](double v) { return v / std::sqrt(v * v + cfg.mu * cfg.mu); };
  for (size_t i = 0; i < h; ++i)
    for (size_t j = 0; j < w; ++j) {
      double gx = x.at({i, (j + 1) % w}) - x.at({i, j});
      double gy = x.at({(i + 1) % h, j}) - x.at({i, j});
      double gxm = x.at({i, j}) - x.at({i, (j + w - 1) % w});
      double gym = x.at({i, j}) - x.at({(i + h - 1) % h, j});
      g.at({i, j}) += dphi(gxm) + dphi(gym) - dphi(gx) - dphi(gy);
    }
  return g;
}

}  // namespace

TvResult tv_reconstruct(const Tensor& y_u, const Mask& mask, const TvConfig& cfg) {
  if (cfg.lambda <= 0 || cfg.step <= 0 || cfg.iters <= 0 || cfg.tol <= 0)
    throw ParamError("tv_reconstruct: config values must be positive");
  if (y_u.rank() != 2 || y_u.shape() != mask.grid.shape())
    throw ShapeError("tv_reconstruct: k-space and mask shapes differ");

  TvResult res;
  Tensor x = real(zero_fill(y_u));
  Objective f = tv_objective(x, y_u, mask, cfg);
  res.objective.push_back(f.total());
  res.data_term.push_back(f.data);
  res.tv_term.push_back(f.tv);

  for (int it = 0; it < cfg.iters; ++it) {
    Tensor g = tv_gradient(x, y_u, mask, cfg);
    double step = cfg.step;
    Tensor cand;
    Objective fc;
    bool accepted = false;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      cand = sub(x, scale(g, step));
      fc = tv_objective(cand, y_u, mask, cfg);
      if (fc.total() <= f.total()) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      throw SolverError("tv_reconstruct: objective increased after max backtracks",
                        res.objective);
    double rel = std::abs(f.total() - fc.total()) / std::max(1.0, std::abs(f.total()));
    x = std::move(cand);
    f = fc;
    res.objective.push_back(f.total());
    res.data_term.push_back(f.data);
    res.tv_term.push_back(f.tv);
    if (rel < cfg.tol) break;
  }
  res.image = std::move(x);
  return res;
}

void write_objective_csv(const TvResult& r, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << "iteration,objective,data_term,tv_term\n";
  for (size_t i = 0; i < r.objective.size(); ++i)
    out << i << ',' << fmt_fixed(r.objective[i], 9) << ','
        << fmt_fixed(r.data_term[i], 9) << ',' << fmt_fixed(r.tv_term[i], 9) << '\n';
}

// ---- dictionary learning --------------------------------------------------------

namespace {

// Overcomplete 2-D DCT dictionary: outer products of 1-D DCT-like vectors.
std::vector<double> dct_dictionary(size_t patch, size_t atoms) {
  size_t grid = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(atoms))));
  std::vector<std::vector<double>> basis(grid, std::vector<double>(patch));
  for (size_t k = 0; k < grid; ++k) {
    for (size_t i = 0; i < patch; ++i)
      basis[k][i] = std::cos(std::numbers::pi * static_cast<double>(k) *
                             (static_cast<double>(i) + 0.5) / static_cast<double>(patch));
    if (k > 0) {
      double m = 0;
      for (double v : basis[k]) m += v;
      m /= static_cast<double>(patch);
      for (double& v : basis[k]) v -= m;
    }
  }
  const size_t p2 = patch * patch;
  std::vector<double> d(p2 * atoms);
  for (size_t a = 0; a < atoms; ++a) {
    size_t ky = a / grid, kx = a % grid;
    double norm = 0;
    for (size_t i = 0; i < patch; ++i)
      for (size_t j = 0; j < patch; ++j) {
        double v = basis[ky][i] * basis[kx][j];
        d[(i * patch + j) * atoms + a] = v;
        norm += v * v;
      }
    norm = std::sqrt(norm);
    if (norm < 1e-12) norm = 1.0;
    for (size_t i = 0; i < p2; ++i) d[i * atoms + a] /= norm;
  }
  return d;  // row-major P x K, unit-norm columns
}

// Orthogonal matching pursuit for one patch; returns the sparse code.
void omp_code(const std::vector<double>& D, size_t P, size_t K,
              const double* patch, size_t sparsity, double* code) {
  std::fill(code, code + K, 0.0);
  if (sparsity == 0) return;
  std::vector<double> resid(patch, patch + P);
  std::vector<size_t> support;
  std::vector<double> coef;
  for (size_t t = 0; t < sparsity; ++t) {
    double best = 0;
    size_t best_k = K;
    for (size_t k = 0; k < K; ++k) {
      bool used = false;
      for (size_t s : support)
        if (s == k) used = true;
      if (used) continue;
      double dot = 0;
      for (size_t i = 0; i < P; ++i) dot += D[i * K + k] * resid[i];
      if (std::abs(dot) > std::abs(best)) {
        best = dot;
        best_k = k;
      }
    }
    if (best_k == K || std::abs(best) < 1e-14) break;
    support.push_back(best_k);
    // Least squares on the support via normal equations (size <= sparsity).
    const size_t m = support.size();
    std::vector<double> G(m * m, 0.0), rhs(m, 0.0);
    for (size_t a = 0; a < m; ++a) {
      for (size_t b = 0; b <= a; ++b) {
        double dot = 0;
        for (size_t i = 0; i < P; ++i)
          dot += D[i * K + support[a]] * D[i * K + support[b]];
        G[a * m + b] = G[b * m + a] = dot;
      }
      double dot = 0;
      for (size_t i = 0; i < P; ++i) dot += D[i * K + support[a]] * patch[i];
      rhs[a] = dot;
    }
    // Gaussian elimination with partial pivoting.
    coef = rhs;
    std::vector<double> A = G;
    for (size_t col = 0; col < m; ++col) {
      size_t piv = col;
      for (size_t rrow = col + 1; rrow < m; ++rrow)
        if (std::abs(A[rrow * m + col]) > std::abs(A[piv * m + col])) piv = rrow;
      if (std::abs(A[piv * m + col]) < 1e-12) {
        A[piv * m + col] = 1e-12;
      }
      if (piv != col) {
        for (size_t j = 0; j < m; ++j) std::swap(A[col * m + j], A[piv * m + j]);
        std::swap(coef[col], coef[piv]);
      }
      for (size_t rrow = col + 1; rrow < m; ++rrow) {
        double f = A[rrow * m + col] / A[col * m + col];
        for (size_t j = col; j < m; ++j) A[rrow * m + j] -= f * A[col * m + j];
        coef[rrow] -= f * coef[col];
      }
    }
    for (size_t col = m; col-- > 0;) {
      for (size_t j = col + 1; j < m; ++j) coef[col] -= A[col * m + j] * coef[j];
      coef[col] /= A[col * m + col];
    }
    for (size_t i = 0; i < P; ++i) {
      double rec = 0;
      for (size_t a = 0; a < m; ++a) rec += D[i * K + support[a]] * coef[a];
      resid[i] = patch[i] - rec;
    }
    double rn = 0;
    for (double v : resid) rn += v * v;
    if (rn < 1e-24) break;
  }
  for (size_t a = 0; a < support.size(); ++a) code[support[a]] = coef[a];
}

}  // namespace

Tensor dict_reconstruct(const Tensor& y_u, const Mask& mask, const DictConfig& cfg) {
  return dict_reconstruct_full(y_u, mask, cfg).image;
}

DictResult dict_reconstruct_full(const Tensor& y_u, const Mask& mask,
                                 const DictConfig& cfg) {
  if (cfg.patch == 0 || cfg.atoms == 0 || cfg.outer_iters <= 0)
    throw ParamError("dict_reconstruct: config values must be positive");
  if (y_u.rank() != 2 || y_u.shape() != mask.grid.shape())
    throw ShapeError("dict_reconstruct: k-space and mask shapes differ");
  const size_t h = y_u.extent(0), w = y_u.extent(1);
  if (cfg.patch > h || cfg.patch > w)
    throw ParamError("dict_reconstruct: patch larger than image");

  const size_t P = cfg.patch * cfg.patch, K = cfg.atoms;
  const size_t nph = h - cfg.patch + 1, npw = w - cfg.patch + 1;
  const size_t np = nph * npw;
  std::vector<double> D = dct_dictionary(cfg.patch, K);
  std::vector<double> codes(np * K);
  std::vector<double> patches(np * P);
  Rng rng = Rng(cfg.seed).derive("dict");

  Tensor x = real(zero_fill(y_u));
  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    // (a) extract + sparse-code every overlapping patch
    for (size_t pi = 0; pi < nph; ++pi)
      for (size_t pj = 0; pj < npw; ++pj) {
        double* p = patches.data() + (pi * npw + pj) * P;
        for (size_t u = 0; u < cfg.patch; ++u)
          for (size_t v = 0; v < cfg.patch; ++v)
            p[u * cfg.patch + v] = x.at({pi + u, pj + v});
        omp_code(D, P, K, p, cfg.sparsity, codes.data() + (pi * npw + pj) * K);
      }

    // (b) per-atom least-squares update with renormalization
    if (cfg.sparsity > 0) {
      for (size_t k = 0; k < K; ++k) {
        std::vector<double> num(P, 0.0);
        double den = 0.0;
        for (size_t n = 0; n < np; ++n) {
          const double ck = codes[n * K + k];
          if (ck == 0.0) continue;
          const double* p = patches.data() + n * P;
          // residual excluding atom k
          for (size_t i = 0; i < P; ++i) {
            double rec = 0;
            for (size_t a = 0; a < K; ++a)
              if (a != k) rec += D[i * K + a] * codes[n * K + a];
            num[i] += ck * (p[i] - rec);
          }
          den += ck * ck;
        }
        double norm = 0;
        if (den > 1e-12)
          for (double v : num) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-10) {
          // rank-deficient: re-seed from a random residual patch
          const double* p = patches.data() + rng.uniform_int(np) * P;
          norm = 0;
          for (size_t i = 0; i < P; ++i) norm += p[i] * p[i];
          norm = std::sqrt(std::max(norm, 1e-12));
          for (size_t i = 0; i < P; ++i) D[i * K + k] = p[i] / norm;
        } else {
          for (size_t i = 0; i < P; ++i) D[i * K + k] = num[i] / norm;
        }
      }
    }

    // (c) average overlapping reconstructions, then re-impose measured k-space
    Tensor acc = Tensor::zeros({h, w});
    Tensor cover = Tensor::zeros({h, w});
    for (size_t pi = 0; pi < nph; ++pi)
      for (size_t pj = 0; pj < npw; ++pj) {
        const double* ck = codes.data() + (pi * npw + pj) * K;
        for (size_t u = 0; u < cfg.patch; ++u)
          for (size_t v = 0; v < cfg.patch; ++v) {
            double rec = 0;
            for (size_t a = 0; a < K; ++a)
              if (ck[a] != 0.0) rec += D[(u * cfg.patch + v) * K + a] * ck[a];
            acc.at({pi + u, pj + v}) += rec;
            cover.at({pi + u, pj + v}) += 1.0;
          }
      }
    for (size_t i = 0; i < acc.numel(); ++i)
      acc.r(i) = cover.r(i) > 0 ? acc.r(i) / cover.r(i) : 0.0;
    x = real(ifft2(data_consistency(fft2(to_complex(acc)), y_u, mask)));
  }
  DictResult res;
  res.image = std::move(x);
  res.dictionary = Tensor::from({P, K}, std::move(D));
  return res;
}

}  // namespace mrigan
