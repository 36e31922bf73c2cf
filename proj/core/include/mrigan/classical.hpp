#pragma once

#include <string>
#include <vector>

#include "mrigan/kspace.hpp"
#include "mrigan/tensor.hpp"

namespace mrigan {

struct TvConfig {
  double lambda = 100.0;  // data-fidelity weight
  double step = 0.05;     // initial gradient step
  int iters = 200;
  double tol = 1e-6;      // relative-objective stop threshold
  double mu = 1e-6;       // smoothing of |g| as sqrt(g^2 + mu^2)
  int max_backtracks = 30;
};

struct TvResult {
  Tensor image;  // real64
  std::vector<double> objective;  // per accepted iteration, starting value first
  std::vector<double> data_term;
  std::vector<double> tv_term;
};

// Minimizes (lambda/2)||y_u - mask.*F x||^2 + sum sqrt(g^2 + mu^2) over real
// images by gradient descent with step-halving backtracking, started from the
// zero-filled reconstruction. Forward differences with circular boundary.
// The objective trace is non-increasing; exhausting the backtracks raises
// SolverError carrying the trace.
TvResult tv_reconstruct(const Tensor& y_u, const Mask& mask, const TvConfig& cfg);

// "iteration,objective,data_term,tv_term" CSV.
void write_objective_csv(const TvResult& r, const std::string& path);

struct DictConfig {
  size_t patch = 6;      // patch side, stride-1 overlapping extraction
  size_t atoms = 64;     // dictionary columns, unit L2 norm
  size_t sparsity = 4;   // max nonzeros per code (OMP)
  int outer_iters = 10;
  uint64_t seed = 0;
};

struct DictResult {
  Tensor image;       // real64
  Tensor dictionary;  // P x K, unit-norm columns
};

// Simplified dictionary-learning reconstruction: alternate OMP sparse coding,
// per-atom least-squares dictionary update with renormalization, and an image
// update that averages the overlapping patch reconstructions and re-imposes
// the measured k-space coefficients. Rank-deficient atoms are re-seeded from a
// random residual patch. Dictionary initialized with an overcomplete DCT.
Tensor dict_reconstruct(const Tensor& y_u, const Mask& mask, const DictConfig& cfg);
DictResult dict_reconstruct_full(const Tensor& y_u, const Mask& mask,
                                 const DictConfig& cfg);

}  // namespace mrigan
