#include "mrigan/layers.hpp"

#include <cmath>

namespace mrigan::ad {

ParamPtr ParamSet::create(const std::string& path, Tensor init, bool trainable) {
  if (find(path)) throw ContractError("duplicate parameter path: " + path);
  auto p = std::make_shared<Param>(path, std::move(init), trainable);
  params_.push_back(p);
  return p;
}

std::vector<ParamPtr> ParamSet::trainable() const {
  std::vector<ParamPtr> out;
  for (const auto& p : params_)
    if (p->trainable) out.push_back(p);
  return out;
}

ParamPtr ParamSet::find(const std::string& path) const {
  for (const auto& p : params_)
    if (p->name == path) return p;
  return nullptr;
}

size_t ParamSet::total_elements() const {
  size_t n = 0;
  for (const auto& p : params_) n += p->value.numel();
  return n;
}

std::map<std::string, Tensor> ParamSet::state() const {
  std::map<std::string, Tensor> out;
  for (const auto& p : params_) out.emplace(p->name, p->value);
  return out;
}

void ParamSet::load_state(const std::map<std::string, Tensor>& state) {
  for (const auto& p : params_) {
    auto it = state.find(p->name);
    if (it == state.end())
      throw ContractError("checkpoint missing parameter " + p->name);
    if (it->second.shape() != p->value.shape())
      throw ShapeError("checkpoint shape mismatch for " + p->name);
    p->value = it->second;
  }
}

namespace {

Tensor he_normal(std::vector<size_t> shape, size_t fan_in, const Rng& root,
                 const std::string& stream) {
  Rng rng = root.derive(stream);
  double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  return Tensor::randn(std::move(shape), rng, stddev);
}

}  // namespace

Conv2d::Conv2d(ParamSet& ps, const std::string& path, size_t in_ch,
               size_t out_ch, size_t k, int stride_, int pad_, const Rng& root)
    : stride(stride_), pad(pad_) {
  w = ps.create(path + "/w",
                he_normal({out_ch, in_ch, k, k}, in_ch * k * k, root, path + "/w"));
  b = ps.create(path + "/b", Tensor::zeros({out_ch}));
}

Var Conv2d::operator()(const Var& x) const {
  return conv2d(x, leaf(w), leaf(b), stride, pad);
}

Deconv2d::Deconv2d(ParamSet& ps, const std::string& path, size_t in_ch,
                   size_t out_ch, size_t k, int stride_, int pad_, const Rng& root)
    : stride(stride_), pad(pad_) {
  w = ps.create(path + "/w",
                he_normal({in_ch, out_ch, k, k}, in_ch * k * k, root, path + "/w"));
  b = ps.create(path + "/b", Tensor::zeros({out_ch}));
}

Var Deconv2d::operator()(const Var& x) const {
  return deconv2d(x, leaf(w), leaf(b), stride, pad);
}

BatchNorm2d::BatchNorm2d(ParamSet& ps, const std::string& path, size_t channels) {
  gamma = ps.create(path + "/gamma", Tensor::full({channels}, 1.0));
  beta = ps.create(path + "/beta", Tensor::zeros({channels}));
  running_mean = ps.create(path + "/running_mean", Tensor::zeros({channels}), false);
  running_var = ps.create(path + "/running_var", Tensor::full({channels}, 1.0), false);
}

Var BatchNorm2d::operator()(const Var& x, Mode mode) const {
  return batchnorm2d(x, leaf(gamma), leaf(beta), running_mean, running_var,
                     mode, momentum, eps);
}

Dense::Dense(ParamSet& ps, const std::string& path, size_t in_features,
             size_t out_features, const Rng& root) {
  w = ps.create(path + "/w",
                he_normal({in_features, out_features}, in_features, root, path + "/w"));
  b = ps.create(path + "/b", Tensor::zeros({out_features}));
}

Var Dense::operator()(const Var& x) const {
  return dense(x, leaf(w), leaf(b));
}

}  // namespace mrigan::ad
