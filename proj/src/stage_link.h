#pragma once

#include <array>
#include <utility>

#include "config.h"
#include "layers.h"

namespace uie {

// Self-attention with channels as tokens and the flattened spatial extent as
// the embedding axis; logits are scaled by 1/sqrt(H*W). The attention matrix
// is CxC with rows normalized by softmax.
struct ChannelSelfAttention {
  DepthwiseConv2d dw_q, dw_k, dw_v;
  Conv2d pw_q, pw_k, pw_v;  // pw_v is the branch's terminal projection

  void init(int channels, Rng& rng);
  // Q, K, V, each the same shape as f.
  std::array<Var, 3> qkv(Tape& t, Var f) const;
  // out = softmax_rows(Q Kt / sqrt(S)) * V, reshaped back to CxHxW.
  static Var attention(Tape& t, Var q, Var k, Var v);
  Var fwd(Tape& t, Var f) const;
  void reg(ParamStore& ps, const std::string& name);
};

// Pre-normalized attention + feed-forward with an extra outer skip:
//   a = attn(ln1(f)) + f
//   b = ffn(ln2(a)) + a
//   out = f + b          (both branches zeroed => out == 2*f)
struct TransformerBlock {
  ChannelLayerNorm ln1, ln2;
  ChannelSelfAttention attn;
  Conv2d ffn_in;   // 1x1, C -> e*C, gelu after
  Conv2d ffn_out;  // 1x1, e*C -> C, terminal projection

  void init(const TransformerConfig& cfg, Rng& rng);
  Var fwd(Tape& t, Var f) const;
  void reg(ParamStore& ps, const std::string& name);
};

// Refines decoder features for the next stage and emits this stage's image as
// a residual off the current estimate. With use_transformer=false the feature
// path is the identity and the image passes through untouched.
struct StageLink {
  TransformerBlock block;
  Conv2d img_head;  // C -> 3, terminal projection of the image path

  void init(const TransformerConfig& cfg, Rng& rng);
  // Returns {cross_stage_feature, stage_image}.
  std::pair<Var, Var> fwd(Tape& t, Var dec_feat, Var x_stage, bool use_transformer) const;
  void reg(ParamStore& ps, const std::string& name);
};

}  // namespace uie
