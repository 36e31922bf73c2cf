#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mrigan/tensor.hpp"

namespace mrigan::ad {

// Trainable (or tracked, e.g. batch-norm running stats) tensor with a slot for
// the gradient produced by backprop.
struct Param {
  std::string name;  // hierarchical path, e.g. "dagan/g/enc0/conv/w"
  Tensor value;
  Tensor grad;  // empty until the first backprop touches this parameter
  bool trainable = true;

  Param(std::string n, Tensor v, bool train = true)
      : name(std::move(n)), value(std::move(v)), trainable(train) {}
  void zero_grad() { grad = Tensor::zeros(value.shape()); }
};
using ParamPtr = std::shared_ptr<Param>;

// One recorded operation result. The record is acyclic by construction: a node
// only ever references nodes that existed before it.
class Node {
public:
  Tensor value;
  Tensor grad;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward_fn;
  ParamPtr param;  // set on parameter leaves
};
using Var = std::shared_ptr<Node>;

enum class Mode { train, eval };

Var constant(Tensor v);
Var leaf(const ParamPtr& p);
// Value copied out of the graph; gradients do not flow past this point.
Var detach(const Var& a);

// ---- elementwise and reductions ----------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var sum(const Var& a);   // scalar node, shape {1}
Var mean(const Var& a);  // scalar node, shape {1}
Var relu(const Var& a);
Var lrelu(const Var& a, double slope = 0.2);
Var tanh_op(const Var& a);
Var sigmoid(const Var& a);
Var log_op(const Var& a);
Var clamp_op(const Var& a, double lo, double hi);

// ---- structured ops ------------------------------------------------------------
// x: N x C x H x W, w: K x C x kh x kw, b: K. Cross-correlation with bias.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// Transpose of conv2d's linear map. x: N x K x H x W, w: K x C x kh x kw,
// b: C. Output extent s*(H-1) + kh - 2p.
Var deconv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// x: N x F, w: F x G, b: G.
Var dense(const Var& x, const Var& w, const Var& b);
// N x C x H x W -> N x (C*H*W).
Var flatten(const Var& x);
Var reshape(const Var& x, std::vector<size_t> shape);
Var concat_ch(const Var& a, const Var& b);

// Per-channel batch normalization over (N, H, W). Train mode normalizes by
// batch statistics and updates the running stats in place; eval mode uses the
// running stats. Backward through the batch statistics is exact.
Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta,
                const ParamPtr& running_mean, const ParamPtr& running_var,
                Mode mode, double momentum, double eps);

// Unitary 2-D FFT over channel pairs: channels (2c, 2c+1) hold (re, im).
// As a real-linear map this is orthogonal, so backward applies the inverse.
Var fft2c(const Var& x);
Var ifft2c(const Var& x);
// N x 2C x H x W -> N x C x H x W, sqrt(re^2 + im^2 + eps).
Var magnitude(const Var& x, double eps = 1e-12);

// ---- backprop -------------------------------------------------------------------
// Zeroes the gradients of every reachable node and parameter, then accumulates
// exactly one gradient per parameter. `loss` must be scalar.
void backprop(const Var& loss);

// ---- finite-difference gradient checker ------------------------------------------
struct GradcheckReport {
  double max_rel_err = 0.0;
  std::string worst_coord;  // "param[i]" of the worst coordinate
  size_t coords_checked = 0;
  bool pass(double tol) const { return max_rel_err < tol; }
};

// Central differences against backprop for f() rebuilt per evaluation.
// Coordinates are subsampled deterministically above `max_coords` per param.
GradcheckReport gradcheck(const std::function<Var()>& f,
                          const std::vector<ParamPtr>& params, double h,
                          size_t max_coords = 32);

}  // namespace mrigan::ad
