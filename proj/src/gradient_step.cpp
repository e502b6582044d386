#include "gradient_step.h"

#include "errors.h"

namespace uie {

void GatedResBlock::init(int channels, int expansion, int dw_kernel, Rng& rng) {
  const int wide = channels * expansion;
  norm.init(channels);
  expand.init(channels, wide, 1, rng, 1, 0);
  dw.init(wide, dw_kernel, rng);
  proj.init(wide / 2, channels, 1, rng, 1, 0);
}

Var GatedResBlock::fwd(Tape& t, Var f) const {
  const int wide = expand.w.dim(0);
  Var h = dw.fwd(t, expand.fwd(t, norm.fwd(t, f)));
  Var gated = t.mul(t.slice_channels(h, 0, wide / 2), t.slice_channels(h, wide / 2, wide));
  return t.add(f, proj.fwd(t, gated));
}

void GatedResBlock::reg(ParamStore& ps, const std::string& name) {
  norm.reg(ps, name + ".norm");
  expand.reg(ps, name + ".expand");
  dw.reg(ps, name + ".dw");
  proj.reg(ps, name + ".proj");
}

void GradientStepStage::init(const GradientConfig& cfg, Rng& rng) {
  op_fwd.init(3, cfg.expansion, cfg.dw_kernel, rng);
  op_adj.init(3, cfg.expansion, cfg.dw_kernel, rng);
  omega = Tensor::scalar(cfg.step_init);
}

Var GradientStepStage::fwd(Tape& t, Var x_prev, Var y, Var prior) const {
  const Tensor &tx = t.val(x_prev), &ty = t.val(y), &tp = t.val(prior);
  if (!tx.same_shape(ty) || !tx.same_shape(tp))
    throw ShapeError("gradient step: mismatched inputs " + tx.shape_str() + ", " + ty.shape_str() +
                     ", " + tp.shape_str());
  Var w = t.leaf(omega, &omega);
  return unfold_gradient_update(
      t, x_prev, y, prior, w,
      [this](Tape& tt, Var v) { return op_fwd.fwd(tt, v); },
      [this](Tape& tt, Var v) { return op_adj.fwd(tt, v); });
}

void GradientStepStage::reg(ParamStore& ps, const std::string& name) {
  op_fwd.reg(ps, name + ".op_fwd");
  op_adj.reg(ps, name + ".op_adj");
  ps.add(name + ".omega", &omega);
}

}  // namespace uie
