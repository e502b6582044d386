#pragma once

#include <vector>

#include "autodiff.h"
#include "config.h"
#include "tensor.h"

namespace uie {

// Normalized 2-D Gaussian window used for the windowed structural similarity.
Tensor gaussian_window(int size, double sigma);

// Mean squared error over all elements.
Var mse_loss(Tape& t, Var pred, Var target);

// Mean windowed structural similarity (Gaussian window, valid positions,
// averaged over channels). Differentiable; also used as the evaluation
// metric so reported numbers match the trained objective. On constant
// images every window degenerates to the global-statistics form.
Var ssim(Tape& t, Var a, Var b, const LossConfig& cfg);

struct LossParts {
  Var total;      // mse_part + lambda * ssim_part
  Var mse_part;   // sum_s w_s * MSE(out_s, target)
  Var ssim_part;  // sum_s w_s * (1 - SSIM(out_s, target))
};

// Deep-supervised objective over all stage outputs.
LossParts total_loss(Tape& t, const std::vector<Var>& outputs, Var target, const LossConfig& cfg);

// ---- plain (no-gradient) metric entry points ----

double mse_metric(const Tensor& a, const Tensor& b);
double ssim_metric(const Tensor& a, const Tensor& b, const LossConfig& cfg = LossConfig{});
// 10*log10(1/MSE) for unit dynamic range; +infinity when images are equal.
double psnr(const Tensor& a, const Tensor& b);

}  // namespace uie
