#pragma once

#include <optional>
#include <vector>

#include "config.h"
#include "layers.h"

namespace uie {

// Previous stage's features offered to the current encoder: one tensor per
// encoder scale plus the previous decoder output (fused at the finest scale).
struct CrossStageFeats {
  std::vector<Var> enc;  // scales 0..L-2
  Var dec = Tape::kNoVar;
};

// U-shaped encoder-decoder. Spatial dims must be divisible by 2^(scales-1).
// When built with cross_fusion, each encoder scale additively receives the
// 1x1-projected previous-stage features; zero projections reduce it to the
// plain encoder.
struct UNet {
  int scales = 3;
  int base = 32;
  bool cross_fusion = false;

  std::vector<Conv2d> enc_body;  // C_l -> C_l, per scale 0..L-2
  std::vector<Conv2d> down;      // C_l -> C_{l+1}, stride 2
  Conv2d bottleneck;             // C_{L-1} -> C_{L-1}
  std::vector<ConvTranspose2d> up;  // C_{l+1} -> C_l
  std::vector<Conv2d> fuse_skip;    // 2*C_l -> C_l after concat
  std::vector<Conv2d> fuse_prev_enc;  // 1x1 projections, cross_fusion only
  Conv2d fuse_prev_dec;               // 1x1, finest scale only

  struct Encoded {
    std::vector<Var> skips;  // fused per-scale features, finest first
    Var bottom = Tape::kNoVar;
  };

  void init(const BackboneConfig& cfg, bool with_cross_fusion, Rng& rng);
  int width(int level) const { return base << level; }

  Encoded encode(Tape& t, Var x, const CrossStageFeats* prev) const;
  Var decode(Tape& t, Var bottom, const std::vector<Var>& skips) const;
  void reg(ParamStore& ps, const std::string& name);
};

// Joins the current image estimate with the previous stage's features:
// channel concat followed by a 1x1 projection to the encoder width.
struct MergeConv {
  Conv2d conv;  // (3 + C_t) -> C0, 1x1

  void init(int feat_channels, int out_channels, Rng& rng);
  Var fwd(Tape& t, Var image, Var feat) const;
  void reg(ParamStore& ps, const std::string& name);
};

}  // namespace uie
