#pragma once

#include <cstdint>
#include <vector>

#include "layers.h"
#include "tensor.h"

namespace uie {

// Cosine-annealed learning rate over [0, total_steps): exactly `lr` at step 0
// and exactly `lr_floor` at the final step. A positive restart_period P
// instead repeats a full cycle every P steps.
double cosine_lr(int64_t step, int64_t total_steps, double lr, double lr_floor,
                 int64_t restart_period = 0);

// Adam with decoupled weight decay. Moment buffers follow the parameter
// registration order; `t` counts completed steps for bias correction.
class AdamW {
 public:
  AdamW(double beta1 = 0.9, double beta2 = 0.999, double weight_decay = 1e-4, double eps = 1e-8);

  // grads[i] pairs with params.items()[i]; lr is supplied per step.
  void step(ParamStore& params, const std::vector<Tensor>& grads, double lr);

  int64_t steps_done() const { return t_; }
  const std::vector<Tensor>& m() const { return m_; }
  const std::vector<Tensor>& v() const { return v_; }
  // Restores state (checkpoint resume).
  void restore(std::vector<Tensor> m, std::vector<Tensor> v, int64_t t);

  double beta1, beta2, weight_decay, eps;

 private:
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

}  // namespace uie
