#include "color_prior.h"

#include "errors.h"

namespace uie {

void ColorMlp::init(const std::vector<int>& hidden, ColorActivation act, Rng& rng) {
  activation = act;
  std::vector<int> widths;
  widths.push_back(3);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(3);
  layers.resize(widths.size() - 1);
  for (size_t i = 0; i + 1 < widths.size(); ++i)
    layers[i].init(widths[i], widths[i + 1], 1, rng, 1, 0);
}

Var ColorMlp::fwd(Tape& t, Var x) const {
  const Tensor& tx = t.val(x);
  if (tx.ndim() != 3 || tx.dim(0) != 3)
    throw ShapeError("color mlp: expected 3xHxW input, got " + tx.shape_str());
  if (!tx.all_finite()) throw NumericError("color mlp: non-finite input");
  Var h = x;
  for (size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].fwd(t, h);
    if (i + 1 < layers.size())
      h = activation == ColorActivation::kSine ? t.sin_op(h) : t.tanh_op(h);
  }
  return h;
}

void ColorMlp::reg(ParamStore& ps, const std::string& name) {
  for (size_t i = 0; i < layers.size(); ++i)
    layers[i].reg(ps, name + ".fc" + std::to_string(i));
}

void ResidualBlock::init(int channels, int kernel, Rng& rng) {
  head.init(channels, channels, kernel, rng);
  tail.init(channels, channels, kernel, rng);
}

Var ResidualBlock::fwd(Tape& t, Var f) const {
  return t.add(f, tail.fwd(t, t.gelu(head.fwd(t, f))));
}

void ResidualBlock::reg(ParamStore& ps, const std::string& name) {
  head.reg(ps, name + ".head");
  tail.reg(ps, name + ".tail");
}

void ResidualGroup::init(int channels, int kernel, int n_blocks, Rng& rng) {
  blocks.resize(static_cast<size_t>(n_blocks));
  for (auto& b : blocks) b.init(channels, kernel, rng);
  tail.init(channels, channels, kernel, rng);
}

Var ResidualGroup::fwd(Tape& t, Var f) const {
  Var h = f;
  for (const auto& b : blocks) h = b.fwd(t, h);
  return t.add(f, tail.fwd(t, h));
}

void ResidualGroup::reg(ParamStore& ps, const std::string& name) {
  for (size_t i = 0; i < blocks.size(); ++i) blocks[i].reg(ps, name + ".rb" + std::to_string(i));
  tail.reg(ps, name + ".tail");
}

void NestedResidualStack::init(int channels, int kernel, int n_groups, int blocks_per_group,
                               Rng& rng) {
  groups.resize(static_cast<size_t>(n_groups));
  for (auto& g : groups) g.init(channels, kernel, blocks_per_group, rng);
  tail.init(channels, channels, kernel, rng);
}

Var NestedResidualStack::fwd(Tape& t, Var f) const {
  Var h = f;
  for (const auto& g : groups) h = g.fwd(t, h);
  return t.add(f, tail.fwd(t, h));
}

void NestedResidualStack::reg(ParamStore& ps, const std::string& name) {
  for (size_t i = 0; i < groups.size(); ++i) groups[i].reg(ps, name + ".g" + std::to_string(i));
  tail.reg(ps, name + ".tail");
}

void ColorPriorBlock::init(const ColorPriorConfig& cfg, Rng& rng) {
  mlp.init(cfg.hidden, cfg.activation, rng);
  conv_in.init(3, cfg.channels, cfg.kernel, rng);
  stack.init(cfg.channels, cfg.kernel, cfg.groups, cfg.blocks_per_group, rng);
  conv_out.init(cfg.channels, 3, cfg.kernel, rng);
}

Var ColorPriorBlock::fwd(Tape& t, Var x) const {
  Var mapped = t.add(mlp.fwd(t, x), x);
  return conv_out.fwd(t, stack.fwd(t, conv_in.fwd(t, mapped)));
}

void ColorPriorBlock::reg(ParamStore& ps, const std::string& name) {
  mlp.reg(ps, name + ".mlp");
  conv_in.reg(ps, name + ".conv_in");
  stack.reg(ps, name + ".stack");
  conv_out.reg(ps, name + ".conv_out");
}

}  // namespace uie
