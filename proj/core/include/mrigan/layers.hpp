#pragma once

#include <map>
#include <string>
#include <vector>

#include "mrigan/autodiff.hpp"
#include "mrigan/rng.hpp"

namespace mrigan::ad {

// Owns every parameter of a model, keyed by hierarchical path. Initialization
// is drawn from a named Rng stream per path, so a seeded build is reproducible
// regardless of construction order.
class ParamSet {
public:
  ParamPtr create(const std::string& path, Tensor init, bool trainable = true);
  const std::vector<ParamPtr>& all() const { return params_; }
  std::vector<ParamPtr> trainable() const;
  ParamPtr find(const std::string& path) const;  // nullptr if absent
  size_t total_elements() const;

  // Checkpoint bridge: parameter values keyed by path.
  std::map<std::string, Tensor> state() const;
  // Strict load: every owned parameter must be present with matching shape.
  void load_state(const std::map<std::string, Tensor>& state);

private:
  std::vector<ParamPtr> params_;
};

struct Conv2d {
  ParamPtr w, b;
  int stride = 1, pad = 0;
  Conv2d() = default;
  // He fan-in init from rng stream `<path>/w`.
  Conv2d(ParamSet& ps, const std::string& path, size_t in_ch, size_t out_ch,
         size_t k, int stride, int pad, const Rng& root);
  Var operator()(const Var& x) const;
};

struct Deconv2d {
  ParamPtr w, b;  // w: in_ch x out_ch x k x k (conv-adjoint layout)
  int stride = 2, pad = 0;
  Deconv2d() = default;
  Deconv2d(ParamSet& ps, const std::string& path, size_t in_ch, size_t out_ch,
           size_t k, int stride, int pad, const Rng& root);
  Var operator()(const Var& x) const;
};

struct BatchNorm2d {
  ParamPtr gamma, beta, running_mean, running_var;
  double momentum = 0.9;
  double eps = 1e-5;
  BatchNorm2d() = default;
  BatchNorm2d(ParamSet& ps, const std::string& path, size_t channels);
  Var operator()(const Var& x, Mode mode) const;
};

struct Dense {
  ParamPtr w, b;
  Dense() = default;
  Dense(ParamSet& ps, const std::string& path, size_t in_features,
        size_t out_features, const Rng& root);
  Var operator()(const Var& x) const;
};

}  // namespace mrigan::ad
