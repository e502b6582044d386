#pragma once

#include <string>
#include <utility>
#include <vector>

#include "autodiff.h"
#include "rng.h"
#include "tensor.h"

namespace uie {

// Ordered registry of named parameter tensors. The registration order is the
// checkpoint and optimizer order, so it must be deterministic.
class ParamStore {
 public:
  void add(std::string name, Tensor* value);
  Tensor* find(const std::string& name) const;
  size_t count() const { return items_.size(); }
  int64_t scalar_count() const;
  const std::vector<std::pair<std::string, Tensor*>>& items() const { return items_; }

 private:
  std::vector<std::pair<std::string, Tensor*>> items_;
};

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
void init_uniform(Tensor& t, int fan_in, Rng& rng);

struct Conv2d {
  Tensor w;  // {Co,Ci,k,k}
  Tensor b;  // {Co}
  int stride = 1;
  int pad = 0;

  // pad < 0 means "same" padding (k/2).
  void init(int cin, int cout, int k, Rng& rng, int stride_ = 1, int pad_ = -1);
  Var fwd(Tape& t, Var x) const;
  void reg(ParamStore& ps, const std::string& name);
  void zero();  // zero weight and bias (used to neutralize residual branches)
};

struct ConvTranspose2d {
  Tensor w;  // {Ci,Co,k,k}
  Tensor b;  // {Co}
  int stride = 2;

  void init(int cin, int cout, int k, Rng& rng, int stride_ = 2);
  Var fwd(Tape& t, Var x) const;
  void reg(ParamStore& ps, const std::string& name);
};

struct DepthwiseConv2d {
  Tensor w;  // {C,k,k}
  Tensor b;  // {C}
  int pad = 0;

  void init(int channels, int k, Rng& rng, int pad_ = -1);
  Var fwd(Tape& t, Var x) const;
  void reg(ParamStore& ps, const std::string& name);
};

struct ChannelLayerNorm {
  Tensor gamma;
  Tensor beta;
  double eps = 1e-6;

  void init(int channels);
  Var fwd(Tape& t, Var x) const;
  void reg(ParamStore& ps, const std::string& name);
};

}  // namespace uie
