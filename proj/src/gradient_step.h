#pragma once

#include "config.h"
#include "layers.h"

namespace uie {

// Residual block whose nonlinearity is a multiplicative channel-split gate:
// norm -> 1x1 expand -> depthwise conv -> split halves and multiply ->
// 1x1 project -> additive skip. `proj` is the terminal projection; zeroing it
// makes the block the identity. Operates on 3-channel images here.
struct GatedResBlock {
  ChannelLayerNorm norm;
  Conv2d expand;       // C -> e*C, 1x1
  DepthwiseConv2d dw;  // e*C channels
  Conv2d proj;         // e*C/2 -> C, 1x1

  void init(int channels, int expansion, int dw_kernel, Rng& rng);
  Var fwd(Tape& t, Var f) const;
  void reg(ParamStore& ps, const std::string& name);
};

// One unrolled data-fidelity update with injectable forward/adjoint operators:
//   x_next = x_prev - omega * opAdj(opFwd(x_prev) - y + prior)
// The operators are callables (Tape&, Var) -> Var so tests can substitute a
// fixed linear blur and its true adjoint for the learned pair.
template <typename OpFwd, typename OpAdj>
Var unfold_gradient_update(Tape& t, Var x_prev, Var y, Var prior, Var omega, OpFwd&& op_fwd,
                           OpAdj&& op_adj) {
  Var residual = t.add(t.sub(op_fwd(t, x_prev), y), prior);
  return t.sub(x_prev, t.scale_by(op_adj(t, residual), omega));
}

// Per-stage learned update: an independent operator pair and step size.
struct GradientStepStage {
  GatedResBlock op_fwd;  // stands in for the degradation operator
  GatedResBlock op_adj;  // stands in for its adjoint
  Tensor omega;          // learnable scalar step size

  void init(const GradientConfig& cfg, Rng& rng);
  Var fwd(Tape& t, Var x_prev, Var y, Var prior) const;
  void reg(ParamStore& ps, const std::string& name);
};

}  // namespace uie
