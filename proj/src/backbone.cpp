#include "backbone.h"

#include "errors.h"

namespace uie {

void UNet::init(const BackboneConfig& cfg, bool with_cross_fusion, Rng& rng) {
  scales = cfg.scales;
  base = cfg.base_channels;
  cross_fusion = with_cross_fusion;
  const int levels = scales - 1;
  enc_body.resize(static_cast<size_t>(levels));
  down.resize(static_cast<size_t>(levels));
  up.resize(static_cast<size_t>(levels));
  fuse_skip.resize(static_cast<size_t>(levels));
  for (int l = 0; l < levels; ++l) {
    enc_body[static_cast<size_t>(l)].init(width(l), width(l), 3, rng);
    down[static_cast<size_t>(l)].init(width(l), width(l + 1), 3, rng, 2, 1);
    up[static_cast<size_t>(l)].init(width(l + 1), width(l), 2, rng, 2);
    fuse_skip[static_cast<size_t>(l)].init(2 * width(l), width(l), 3, rng);
  }
  bottleneck.init(width(levels), width(levels), 3, rng);
  if (cross_fusion) {
    fuse_prev_enc.resize(static_cast<size_t>(levels));
    for (int l = 0; l < levels; ++l)
      fuse_prev_enc[static_cast<size_t>(l)].init(width(l), width(l), 1, rng, 1, 0);
    fuse_prev_dec.init(base, base, 1, rng, 1, 0);
  }
}

UNet::Encoded UNet::encode(Tape& t, Var x, const CrossStageFeats* prev) const {
  const Tensor& tx = t.val(x);
  if (tx.ndim() != 3 || tx.dim(0) != base)
    throw ShapeError("encoder: expected " + std::to_string(base) + "xHxW input, got " +
                     tx.shape_str());
  const int mult = 1 << (scales - 1);
  if (tx.dim(1) % mult != 0 || tx.dim(2) % mult != 0)
    throw ShapeError("encoder: spatial dims " + tx.shape_str() + " not divisible by " +
                     std::to_string(mult));
  if (prev && static_cast<int>(prev->enc.size()) != scales - 1)
    throw ShapeError("encoder: expected " + std::to_string(scales - 1) +
                     " cross-stage features, got " + std::to_string(prev->enc.size()));

  Encoded out;
  Var h = x;
  for (int l = 0; l < scales - 1; ++l) {
    Var f = t.gelu(enc_body[static_cast<size_t>(l)].fwd(t, h));
    if (prev && cross_fusion) {
      f = t.add(f, fuse_prev_enc[static_cast<size_t>(l)].fwd(t, prev->enc[static_cast<size_t>(l)]));
      if (l == 0 && prev->dec != Tape::kNoVar)
        f = t.add(f, fuse_prev_dec.fwd(t, prev->dec));
    }
    out.skips.push_back(f);
    h = t.gelu(down[static_cast<size_t>(l)].fwd(t, f));
  }
  out.bottom = t.gelu(bottleneck.fwd(t, h));
  return out;
}

Var UNet::decode(Tape& t, Var bottom, const std::vector<Var>& skips) const {
  if (static_cast<int>(skips.size()) != scales - 1)
    throw ShapeError("decoder: expected " + std::to_string(scales - 1) + " skip features, got " +
                     std::to_string(skips.size()));
  Var h = bottom;
  for (int l = scales - 2; l >= 0; --l) {
    Var u = up[static_cast<size_t>(l)].fwd(t, h);
    const Tensor &tu = t.val(u), &ts = t.val(skips[static_cast<size_t>(l)]);
    if (tu.dim(1) != ts.dim(1) || tu.dim(2) != ts.dim(2))
      throw ShapeError("decoder: skip misalignment at level " + std::to_string(l) + ": " +
                       tu.shape_str() + " vs " + ts.shape_str());
    h = t.gelu(fuse_skip[static_cast<size_t>(l)].fwd(t, t.concat_channels(u, skips[static_cast<size_t>(l)])));
  }
  return h;
}

void UNet::reg(ParamStore& ps, const std::string& name) {
  for (int l = 0; l < scales - 1; ++l) {
    const std::string lv = std::to_string(l);
    enc_body[static_cast<size_t>(l)].reg(ps, name + ".enc" + lv);
    down[static_cast<size_t>(l)].reg(ps, name + ".down" + lv);
  }
  bottleneck.reg(ps, name + ".bottleneck");
  for (int l = 0; l < scales - 1; ++l) {
    const std::string lv = std::to_string(l);
    up[static_cast<size_t>(l)].reg(ps, name + ".up" + lv);
    fuse_skip[static_cast<size_t>(l)].reg(ps, name + ".fuse" + lv);
  }
  if (cross_fusion) {
    for (int l = 0; l < scales - 1; ++l)
      fuse_prev_enc[static_cast<size_t>(l)].reg(ps, name + ".prev_enc" + std::to_string(l));
    fuse_prev_dec.reg(ps, name + ".prev_dec");
  }
}

void MergeConv::init(int feat_channels, int out_channels, Rng& rng) {
  conv.init(3 + feat_channels, out_channels, 1, rng, 1, 0);
}

Var MergeConv::fwd(Tape& t, Var image, Var feat) const {
  const Tensor &ti = t.val(image), &tf = t.val(feat);
  if (ti.dim(1) != tf.dim(1) || ti.dim(2) != tf.dim(2))
    throw ShapeError("merge: spatial mismatch " + ti.shape_str() + " vs " + tf.shape_str());
  return conv.fwd(t, t.concat_channels(image, feat));
}

void MergeConv::reg(ParamStore& ps, const std::string& name) { conv.reg(ps, name); }

}  // namespace uie
