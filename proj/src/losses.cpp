#include "losses.h"

#include <cmath>
#include <limits>

#include "errors.h"

namespace uie {

Tensor gaussian_window(int size, double sigma) {
  Tensor w({size, size});
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double d2 = (y - c) * (y - c) + (x - c) * (x - c);
      const double v = std::exp(-d2 / (2.0 * sigma * sigma));
      w.at(y, x) = v;
      total += v;
    }
  for (int64_t i = 0; i < w.size(); ++i) w[i] /= total;
  return w;
}

Var mse_loss(Tape& t, Var pred, Var target) {
  const Tensor &tp = t.val(pred), &tt = t.val(target);
  if (!tp.same_shape(tt))
    throw ShapeError("mse: shape mismatch " + tp.shape_str() + " vs " + tt.shape_str());
  return t.mean(t.square(t.sub(pred, target)));
}

namespace {

// Depthwise valid convolution with the (constant) Gaussian window.
Var window_mean(Tape& t, Var x, Var kernel) {
  return t.depthwise_conv2d(x, kernel, Tape::kNoVar, /*pad=*/0);
}

}  // namespace

Var ssim(Tape& t, Var a, Var b, const LossConfig& cfg) {
  const Tensor &ta = t.val(a), &tb = t.val(b);
  if (!ta.same_shape(tb))
    throw ShapeError("ssim: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  if (ta.ndim() != 3) throw ShapeError("ssim: expected CHW images, got " + ta.shape_str());
  if (ta.dim(1) < cfg.window || ta.dim(2) < cfg.window)
    throw ShapeError("ssim: image " + ta.shape_str() + " smaller than window " +
                     std::to_string(cfg.window));

  const int c = ta.dim(0);
  Tensor win = gaussian_window(cfg.window, cfg.sigma);
  Tensor kt({c, cfg.window, cfg.window});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < cfg.window * cfg.window; ++i)
      kt[static_cast<int64_t>(ch) * cfg.window * cfg.window + i] = win[i];
  Var kernel = t.constant(std::move(kt));

  Var mu_a = window_mean(t, a, kernel);
  Var mu_b = window_mean(t, b, kernel);
  Var mu_aa = t.mul(mu_a, mu_a);
  Var mu_bb = t.mul(mu_b, mu_b);
  Var mu_ab = t.mul(mu_a, mu_b);
  Var var_a = t.sub(window_mean(t, t.square(a), kernel), mu_aa);
  Var var_b = t.sub(window_mean(t, t.square(b), kernel), mu_bb);
  Var cov = t.sub(window_mean(t, t.mul(a, b), kernel), mu_ab);

  Var num = t.mul(t.affine(mu_ab, 2.0, cfg.c1), t.affine(cov, 2.0, cfg.c2));
  Var den = t.mul(t.affine(t.add(mu_aa, mu_bb), 1.0, cfg.c1), t.affine(t.add(var_a, var_b), 1.0, cfg.c2));
  return t.mean(t.div(num, den));
}

LossParts total_loss(Tape& t, const std::vector<Var>& outputs, Var target, const LossConfig& cfg) {
  if (outputs.empty()) throw ShapeError("total_loss: no outputs");
  Var mse_part = Tape::kNoVar;
  Var ssim_part = Tape::kNoVar;
  for (size_t i = 0; i < outputs.size(); ++i) {
    const double w = cfg.stage_weight(i);
    Var m = t.affine(mse_loss(t, outputs[i], target), w, 0.0);
    Var s = t.affine(ssim(t, outputs[i], target, cfg), -w, w);  // w * (1 - ssim)
    mse_part = (mse_part == Tape::kNoVar) ? m : t.add(mse_part, m);
    ssim_part = (ssim_part == Tape::kNoVar) ? s : t.add(ssim_part, s);
  }
  Var total = t.add(mse_part, t.affine(ssim_part, cfg.lambda, 0.0));
  return LossParts{total, mse_part, ssim_part};
}

double mse_metric(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("mse: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  double acc = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double ssim_metric(const Tensor& a, const Tensor& b, const LossConfig& cfg) {
  Tape t;
  return t.val(ssim(t, t.constant(a), t.constant(b), cfg))[0];
}

double psnr(const Tensor& a, const Tensor& b) {
  const double m = mse_metric(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

}  // namespace uie
