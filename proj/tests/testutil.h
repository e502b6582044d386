#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "autodiff.h"
#include "layers.h"
#include "rng.h"
#include "tensor.h"

namespace uie::test {

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Scalarizes a tensor-valued function through a fixed random projection so
// that no gradient component cancels by symmetry.
struct Projection {
  Tensor weights;
  explicit Projection(const std::vector<int>& shape, uint64_t seed = 7) {
    Rng rng = Rng::derive(seed, {0x70726f6aull});
    weights = random_tensor(shape, rng, -1.0, 1.0);
  }
  Var apply(Tape& t, Var x) const { return t.sum(t.mul(x, t.constant(weights))); }
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;
  int64_t checked = 0;
};

// Central finite differences (step 1e-4, double precision) over every scalar
// of every parameter, compared against the tape gradient. `build` constructs
// the scalar objective on the given tape from the current parameter values.
inline GradCheckResult grad_check(const ParamStore& params,
                                  const std::function<Var(Tape&)>& build, double step = 1e-4) {
  GradCheckResult res;
  Tape t0;
  Var root = build(t0);
  t0.backward(root);
  auto value = [&build]() {
    Tape t;
    Var r = build(t);
    return t.val(r)[0];
  };
  for (const auto& [name, tensor] : params.items()) {
    Tensor g = t0.grad_for(tensor);
    const bool untouched = g.empty();
    for (int64_t i = 0; i < tensor->size(); ++i) {
      const double keep = (*tensor)[i];
      (*tensor)[i] = keep + step;
      const double hi = value();
      (*tensor)[i] = keep - step;
      const double lo = value();
      (*tensor)[i] = keep;
      const double fd = (hi - lo) / (2.0 * step);
      const double ad = untouched ? 0.0 : g[i];
      const double denom = std::max({std::abs(fd), std::abs(ad), 1e-6});
      const double rel = std::abs(fd - ad) / denom;
      ++res.checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

// Gradient with respect to an input tensor (for checks on non-parameter
// arguments such as loss predictions).
inline GradCheckResult grad_check_input(Tensor& input, const std::function<Var(Tape&)>& build,
                                        double step = 1e-4) {
  ParamStore ps;
  ps.add("input", &input);
  return grad_check(ps, build, step);
}

}  // namespace uie::test
