#include "layers.h"

#include <cmath>

#include "errors.h"

namespace uie {

void ParamStore::add(std::string name, Tensor* value) {
  items_.emplace_back(std::move(name), value);
}

Tensor* ParamStore::find(const std::string& name) const {
  for (const auto& [n, t] : items_)
    if (n == name) return t;
  return nullptr;
}

int64_t ParamStore::scalar_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : items_) n += t->size();
  return n;
}

void init_uniform(Tensor& t, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
}

void Conv2d::init(int cin, int cout, int k, Rng& rng, int stride_, int pad_) {
  stride = stride_;
  pad = pad_ < 0 ? k / 2 : pad_;
  w = Tensor({cout, cin, k, k});
  b = Tensor({cout});
  const int fan_in = cin * k * k;
  init_uniform(w, fan_in, rng);
  init_uniform(b, fan_in, rng);
}

Var Conv2d::fwd(Tape& t, Var x) const {
  return t.conv2d(x, t.leaf(w, &w), t.leaf(b, &b), stride, pad);
}

void Conv2d::reg(ParamStore& ps, const std::string& name) {
  ps.add(name + ".w", &w);
  ps.add(name + ".b", &b);
}

void Conv2d::zero() {
  w.fill(0.0);
  b.fill(0.0);
}

void ConvTranspose2d::init(int cin, int cout, int k, Rng& rng, int stride_) {
  stride = stride_;
  w = Tensor({cin, cout, k, k});
  b = Tensor({cout});
  const int fan_in = cin * k * k;
  init_uniform(w, fan_in, rng);
  init_uniform(b, fan_in, rng);
}

Var ConvTranspose2d::fwd(Tape& t, Var x) const {
  return t.conv_transpose2d(x, t.leaf(w, &w), t.leaf(b, &b), stride);
}

void ConvTranspose2d::reg(ParamStore& ps, const std::string& name) {
  ps.add(name + ".w", &w);
  ps.add(name + ".b", &b);
}

void DepthwiseConv2d::init(int channels, int k, Rng& rng, int pad_) {
  pad = pad_ < 0 ? k / 2 : pad_;
  w = Tensor({channels, k, k});
  b = Tensor({channels});
  const int fan_in = k * k;
  init_uniform(w, fan_in, rng);
  init_uniform(b, fan_in, rng);
}

Var DepthwiseConv2d::fwd(Tape& t, Var x) const {
  return t.depthwise_conv2d(x, t.leaf(w, &w), t.leaf(b, &b), pad);
}

void DepthwiseConv2d::reg(ParamStore& ps, const std::string& name) {
  ps.add(name + ".w", &w);
  ps.add(name + ".b", &b);
}

void ChannelLayerNorm::init(int channels) {
  gamma = Tensor::full({channels}, 1.0);
  beta = Tensor({channels});
}

Var ChannelLayerNorm::fwd(Tape& t, Var x) const {
  return t.layernorm_channels(x, t.leaf(gamma, &gamma), t.leaf(beta, &beta), eps);
}

void ChannelLayerNorm::reg(ParamStore& ps, const std::string& name) {
  ps.add(name + ".gamma", &gamma);
  ps.add(name + ".beta", &beta);
}

}  // namespace uie
