#pragma once

#include <vector>

#include "config.h"
#include "layers.h"

namespace uie {

// Per-pixel color transform: a stack of 1x1 convolutions, so the output at a
// pixel depends only on that pixel's three input values.
struct ColorMlp {
  std::vector<Conv2d> layers;
  ColorActivation activation = ColorActivation::kSine;

  void init(const std::vector<int>& hidden, ColorActivation act, Rng& rng);
  Var fwd(Tape& t, Var x) const;
  void reg(ParamStore& ps, const std::string& name);
};

// conv -> gelu -> conv with additive skip; `tail` is the terminal projection,
// so zeroing it makes the block the identity.
struct ResidualBlock {
  Conv2d head;
  Conv2d tail;

  void init(int channels, int kernel, Rng& rng);
  Var fwd(Tape& t, Var f) const;
  void reg(ParamStore& ps, const std::string& name);
};

struct ResidualGroup {
  std::vector<ResidualBlock> blocks;
  Conv2d tail;

  void init(int channels, int kernel, int n_blocks, Rng& rng);
  Var fwd(Tape& t, Var f) const;
  void reg(ParamStore& ps, const std::string& name);
};

// Nested residual stack: groups of residual blocks, every level skipped and
// closed by a terminal projection (zero terminals => identity at every level).
struct NestedResidualStack {
  std::vector<ResidualGroup> groups;
  Conv2d tail;

  void init(int channels, int kernel, int n_groups, int blocks_per_group, Rng& rng);
  Var fwd(Tape& t, Var f) const;
  void reg(ParamStore& ps, const std::string& name);
};

// Color guidance: conv_out(stack(conv_in(mlp(x) + x))). Built once per model
// and evaluated once per forward pass; the result feeds every stage.
struct ColorPriorBlock {
  ColorMlp mlp;
  Conv2d conv_in;
  Conv2d conv_out;
  NestedResidualStack stack;

  void init(const ColorPriorConfig& cfg, Rng& rng);
  Var fwd(Tape& t, Var x) const;
  void reg(ParamStore& ps, const std::string& name);
};

}  // namespace uie
