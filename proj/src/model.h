#pragma once

#include <vector>

#include "backbone.h"
#include "color_prior.h"
#include "config.h"
#include "gradient_step.h"
#include "stage_link.h"

namespace uie {

// Stage images in reverse stage order: [stage S, ..., stage 1].
struct ForwardResult {
  std::vector<Var> stage_images;
};

// The unfolded enhancement network. One color-prior block shared by all
// stages; per-stage gradient updates; stages 1..S-1 run the backbone and the
// stage link, the last stage merges and applies a final conv with a global
// residual off the input.
class Model {
 public:
  static Model build(const ModelConfig& cfg, uint64_t seed);

  ForwardResult forward(Tape& t, Var img) const;
  ForwardResult forward(Tape& t, const Tensor& img) const;

  // Inference entry: reflection-pads to the backbone granularity, runs the
  // final stage, crops back and clamps to [0,1].
  Tensor enhance(const Tensor& img) const;

  // Collects parameter pointers in deterministic order. Pointers are valid
  // while the model stays alive and unmoved.
  ParamStore named_params();
  int64_t param_count();

  const ModelConfig& config() const { return cfg_; }
  uint64_t seed() const { return seed_; }

  // Submodules are public: tests exercise them directly and compose the
  // straight-line reference path from them.
  ColorPriorBlock prior_block;
  std::vector<GradientStepStage> steps;  // one per stage
  Conv2d embed;                          // 3 -> C0, stage 1 input lift
  std::vector<UNet> unets;               // stages 1..S-1
  std::vector<StageLink> links;          // stages 1..S-1
  std::vector<MergeConv> mid_merges;     // stages 2..S-1
  MergeConv final_merge;                 // stage S
  Conv2d final_conv;                     // C0 -> 3

 private:
  ModelConfig cfg_;
  uint64_t seed_ = 0;
};

}  // namespace uie
