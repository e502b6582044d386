#include "optimizer.h"

#include <cmath>

#include "errors.h"

namespace uie {

double cosine_lr(int64_t step, int64_t total_steps, double lr, double lr_floor,
                 int64_t restart_period) {
  int64_t span = total_steps - 1;
  int64_t pos = step;
  if (restart_period > 0) {
    span = restart_period;
    pos = step % restart_period;
  }
  if (span <= 0) return lr;
  const double progress = static_cast<double>(pos) / static_cast<double>(span);
  return lr_floor + 0.5 * (lr - lr_floor) * (1.0 + std::cos(M_PI * progress));
}

AdamW::AdamW(double beta1_, double beta2_, double weight_decay_, double eps_)
    : beta1(beta1_), beta2(beta2_), weight_decay(weight_decay_), eps(eps_) {}

void AdamW::step(ParamStore& params, const std::vector<Tensor>& grads, double lr) {
  const auto& items = params.items();
  if (grads.size() != items.size())
    throw ShapeError("optimizer: got " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(items.size()) + " parameters");
  if (m_.empty()) {
    m_.reserve(items.size());
    v_.reserve(items.size());
    for (const auto& [name, p] : items) {
      m_.push_back(Tensor::zeros(p->shape()));
      v_.push_back(Tensor::zeros(p->shape()));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (size_t i = 0; i < items.size(); ++i) {
    Tensor& p = *items[i].second;
    const Tensor& g = grads[i];
    if (!g.same_shape(p))
      throw ShapeError("optimizer: gradient shape mismatch for " + items[i].first);
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (int64_t k = 0; k < p.size(); ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p[k]);
    }
  }
}

void AdamW::restore(std::vector<Tensor> m, std::vector<Tensor> v, int64_t t) {
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

}  // namespace uie
