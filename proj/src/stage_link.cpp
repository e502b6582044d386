#include "stage_link.h"

#include <cmath>

#include "errors.h"

namespace uie {

void ChannelSelfAttention::init(int channels, Rng& rng) {
  dw_q.init(channels, 3, rng);
  dw_k.init(channels, 3, rng);
  dw_v.init(channels, 3, rng);
  pw_q.init(channels, channels, 1, rng, 1, 0);
  pw_k.init(channels, channels, 1, rng, 1, 0);
  pw_v.init(channels, channels, 1, rng, 1, 0);
}

std::array<Var, 3> ChannelSelfAttention::qkv(Tape& t, Var f) const {
  return {pw_q.fwd(t, dw_q.fwd(t, f)), pw_k.fwd(t, dw_k.fwd(t, f)), pw_v.fwd(t, dw_v.fwd(t, f))};
}

Var ChannelSelfAttention::attention(Tape& t, Var q, Var k, Var v) {
  const Tensor &tq = t.val(q), &tk = t.val(k), &tv = t.val(v);
  if (!tq.same_shape(tk) || !tq.same_shape(tv))
    throw ShapeError("attention: Q/K/V shapes differ: " + tq.shape_str() + ", " + tk.shape_str() +
                     ", " + tv.shape_str());
  if (tq.ndim() != 3) throw ShapeError("attention: expected CxHxW, got " + tq.shape_str());
  const int c = tq.dim(0), h = tq.dim(1), w = tq.dim(2);
  const int s = h * w;
  Var qm = t.reshape(q, {c, s});
  Var km = t.reshape(k, {c, s});
  Var vm = t.reshape(v, {c, s});
  Var logits = t.affine(t.matmul(qm, t.transpose(km)), 1.0 / std::sqrt(static_cast<double>(s)), 0.0);
  Var weights = t.softmax_rows(logits);
  return t.reshape(t.matmul(weights, vm), {c, h, w});
}

Var ChannelSelfAttention::fwd(Tape& t, Var f) const {
  auto [q, k, v] = qkv(t, f);
  return attention(t, q, k, v);
}

void ChannelSelfAttention::reg(ParamStore& ps, const std::string& name) {
  dw_q.reg(ps, name + ".dw_q");
  dw_k.reg(ps, name + ".dw_k");
  dw_v.reg(ps, name + ".dw_v");
  pw_q.reg(ps, name + ".pw_q");
  pw_k.reg(ps, name + ".pw_k");
  pw_v.reg(ps, name + ".pw_v");
}

void TransformerBlock::init(const TransformerConfig& cfg, Rng& rng) {
  ln1.init(cfg.channels);
  ln2.init(cfg.channels);
  attn.init(cfg.channels, rng);
  ffn_in.init(cfg.channels, cfg.channels * cfg.ffn_expansion, 1, rng, 1, 0);
  ffn_out.init(cfg.channels * cfg.ffn_expansion, cfg.channels, 1, rng, 1, 0);
}

Var TransformerBlock::fwd(Tape& t, Var f) const {
  Var a = t.add(attn.fwd(t, ln1.fwd(t, f)), f);
  Var b = t.add(ffn_out.fwd(t, t.gelu(ffn_in.fwd(t, ln2.fwd(t, a)))), a);
  return t.add(f, b);
}

void TransformerBlock::reg(ParamStore& ps, const std::string& name) {
  ln1.reg(ps, name + ".ln1");
  ln2.reg(ps, name + ".ln2");
  attn.reg(ps, name + ".attn");
  ffn_in.reg(ps, name + ".ffn_in");
  ffn_out.reg(ps, name + ".ffn_out");
}

void StageLink::init(const TransformerConfig& cfg, Rng& rng) {
  block.init(cfg, rng);
  img_head.init(cfg.channels, 3, 3, rng);
}

std::pair<Var, Var> StageLink::fwd(Tape& t, Var dec_feat, Var x_stage, bool use_transformer) const {
  const Tensor &tf = t.val(dec_feat), &tx = t.val(x_stage);
  if (tf.dim(1) != tx.dim(1) || tf.dim(2) != tx.dim(2))
    throw ShapeError("stage link: spatial mismatch between features " + tf.shape_str() +
                     " and image " + tx.shape_str());
  if (!use_transformer) return {dec_feat, x_stage};
  Var cross = block.fwd(t, dec_feat);
  Var img = t.add(x_stage, img_head.fwd(t, cross));
  return {cross, img};
}

void StageLink::reg(ParamStore& ps, const std::string& name) {
  block.reg(ps, name + ".block");
  img_head.reg(ps, name + ".img_head");
}

}  // namespace uie
