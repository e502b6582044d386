#include "model.h"

#include <algorithm>

#include "errors.h"
#include "image_ops.h"

namespace uie {

Model Model::build(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Model m;
  m.cfg_ = cfg;
  m.seed_ = seed;
  Rng rng = Rng::derive(seed, {0x6d6f64656cull});  // independent init stream

  const int s = cfg.stages;
  m.prior_block.init(cfg.color_prior, rng);
  m.steps.resize(static_cast<size_t>(s));
  for (auto& st : m.steps) st.init(cfg.gradient, rng);
  m.embed.init(3, cfg.backbone.base_channels, 3, rng);
  m.unets.resize(static_cast<size_t>(std::max(0, s - 1)));
  for (size_t i = 0; i < m.unets.size(); ++i) m.unets[i].init(cfg.backbone, /*fusion=*/i > 0, rng);
  m.links.resize(m.unets.size());
  for (auto& l : m.links) l.init(cfg.transformer, rng);
  m.mid_merges.resize(static_cast<size_t>(std::max(0, s - 2)));
  for (auto& mg : m.mid_merges) mg.init(cfg.transformer.channels, cfg.backbone.base_channels, rng);
  m.final_merge.init(cfg.transformer.channels, cfg.backbone.base_channels, rng);
  m.final_conv.init(cfg.backbone.base_channels, 3, 3, rng);
  return m;
}

ForwardResult Model::forward(Tape& t, const Tensor& img) const {
  return forward(t, t.constant(img));
}

ForwardResult Model::forward(Tape& t, Var img) const {
  const Tensor& ti = t.val(img);
  if (ti.ndim() != 3 || ti.dim(0) != 3)
    throw ShapeError("forward: expected 3xHxW input, got " + ti.shape_str());
  if (!ti.all_finite()) throw NumericError("forward: non-finite input image");
  const int mult = cfg_.spatial_multiple();
  if (ti.dim(1) % mult != 0 || ti.dim(2) % mult != 0)
    throw ShapeError("forward: input " + ti.shape_str() + " not divisible by " +
                     std::to_string(mult) + "; pad or resize first");

  const int s = cfg_.stages;
  Var prior = cfg_.ablation.color_prior ? prior_block.fwd(t, img)
                                        : t.constant(Tensor::zeros(ti.shape()));

  std::vector<Var> stage_images;  // ascending stage order while iterating
  Var current = img;              // stage 0 image is the input
  Var cross = Tape::kNoVar;
  CrossStageFeats prev;
  for (int i = 1; i <= s; ++i) {
    Var x_i = cfg_.ablation.gradient ? steps[static_cast<size_t>(i - 1)].fwd(t, current, img, prior)
                                     : current;
    if (i < s) {
      Var fed = (i == 1) ? embed.fwd(t, x_i)
                         : mid_merges[static_cast<size_t>(i - 2)].fwd(t, x_i, cross);
      const UNet& net = unets[static_cast<size_t>(i - 1)];
      UNet::Encoded enc = net.encode(t, fed, i >= 2 ? &prev : nullptr);
      Var dec = net.decode(t, enc.bottom, enc.skips);
      auto [cf, simg] =
          links[static_cast<size_t>(i - 1)].fwd(t, dec, x_i, cfg_.ablation.transformer);
      cross = cf;
      current = simg;
      stage_images.push_back(simg);
      prev.enc = std::move(enc.skips);
      prev.dec = dec;
    } else {
      Var feat = (s == 1) ? t.constant(Tensor::zeros({cfg_.transformer.channels, ti.dim(1), ti.dim(2)}))
                          : cross;
      Var merged = final_merge.fwd(t, x_i, feat);
      Var out = t.add(final_conv.fwd(t, merged), img);
      stage_images.push_back(out);
    }
  }
  std::reverse(stage_images.begin(), stage_images.end());
  return ForwardResult{std::move(stage_images)};
}

Tensor Model::enhance(const Tensor& img) const {
  if (img.ndim() != 3 || img.dim(0) != 3)
    throw ShapeError("enhance: expected 3xHxW input, got " + img.shape_str());
  const int h = img.dim(1), w = img.dim(2);
  const int mult = cfg_.pad_multiple();
  const int ph = (h + mult - 1) / mult * mult;
  const int pw = (w + mult - 1) / mult * mult;
  Tensor padded = (ph == h && pw == w) ? img : reflect_pad_to(img, ph, pw);
  Tape t;
  ForwardResult r = forward(t, padded);
  Tensor out = t.val(r.stage_images.front());
  if (ph != h || pw != w) out = crop(out, 0, 0, h, w);
  return clamp01(out);
}

ParamStore Model::named_params() {
  ParamStore ps;
  prior_block.reg(ps, "prior");
  for (size_t i = 0; i < steps.size(); ++i) steps[i].reg(ps, "step" + std::to_string(i + 1));
  embed.reg(ps, "embed");
  for (size_t i = 0; i < unets.size(); ++i) unets[i].reg(ps, "unet" + std::to_string(i + 1));
  for (size_t i = 0; i < links.size(); ++i) links[i].reg(ps, "link" + std::to_string(i + 1));
  for (size_t i = 0; i < mid_merges.size(); ++i)
    mid_merges[i].reg(ps, "merge" + std::to_string(i + 2));
  final_merge.reg(ps, "final_merge");
  final_conv.reg(ps, "final_conv");
  return ps;
}

int64_t Model::param_count() { return named_params().scalar_count(); }

}  // namespace uie
