#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace uie {

enum class ColorActivation { kSine, kTanh };

// Per-pixel color mapping plus nested-residual refinement.
struct ColorPriorConfig {
  std::vector<int> hidden = {64, 64};  // MLP hidden widths; in/out are fixed at 3
  ColorActivation activation = ColorActivation::kSine;
  int groups = 2;            // residual groups
  int blocks_per_group = 2;  // residual blocks per group
  int channels = 32;         // feature width inside the refinement stack
  int kernel = 3;
};

// Learned data-fidelity update (gated residual operator pair + step size).
struct GradientConfig {
  int expansion = 2;   // channel expansion before the gate
  int dw_kernel = 3;   // depthwise kernel inside the gated block
  double step_init = 0.5;
};

// Channel-token transformer that links stages.
struct TransformerConfig {
  int channels = 32;      // must equal backbone.base_channels
  int ffn_expansion = 2;
};

// U-shaped encoder-decoder backbone.
struct BackboneConfig {
  int base_channels = 32;
  int scales = 3;  // scales-1 downsampling steps
};

struct AblationConfig {
  bool color_prior = true;  // CLI token: cpgb
  bool gradient = true;     // CLI token: nagdm
  bool transformer = true;  // CLI token: isf
};

struct ModelConfig {
  int stages = 3;
  ColorPriorConfig color_prior;
  GradientConfig gradient;
  TransformerConfig transformer;
  BackboneConfig backbone;
  AblationConfig ablation;

  void validate() const;  // throws ConfigError naming the offending field
  // Spatial granularity the backbone requires (inputs divisible by this).
  int spatial_multiple() const { return 1 << (backbone.scales - 1); }
  // Padding granularity used at inference (one extra halving of headroom so
  // bottleneck dims stay even).
  int pad_multiple() const { return 1 << backbone.scales; }

  static ModelConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void apply_toy_preset();
};

struct LossConfig {
  double lambda = 0.4;
  int window = 11;
  double sigma = 1.5;
  double c1 = 1e-4;  // (0.01)^2 for unit dynamic range
  double c2 = 9e-4;  // (0.03)^2
  std::vector<double> stage_weights;  // empty => all 1

  void validate() const;
  double stage_weight(size_t i) const {
    return i < stage_weights.size() ? stage_weights[i] : 1.0;
  }
  static LossConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct AugmentConfig {
  double hflip = 0.5;
  double vflip = 0.5;
  double rot90 = 0.5;
  double transpose = 0.5;
  double crop = 0.5;
  double crop_frac = 0.8;
  double mixup = 0.2;
  double mixup_alpha = 0.2;

  bool any() const {
    return hflip > 0 || vflip > 0 || rot90 > 0 || transpose > 0 || crop > 0 || mixup > 0;
  }
  static AugmentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static AugmentConfig none();
};

struct DataConfig {
  std::string input_dir;
  std::string target_dir;
  int resize_h = 256;
  int resize_w = 256;
  double val_fraction = 0.0;
  std::string train_manifest;  // newline-delimited identifiers, optional
  std::string val_manifest;

  static DataConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct TrainConfig {
  int epochs = 300;
  int batch_size = 4;
  int64_t max_steps = 0;  // 0 => epochs * ceil(n/batch)
  double lr = 2e-4;
  double lr_floor = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-4;
  double grad_clip = 0.0;      // 0 => off
  int64_t restart_period = 0;  // 0 => single cosine cycle
  uint64_t seed = 1234;
  std::string precision = "f64";
  int64_t checkpoint_every = 0;  // 0 => final only
  std::string out_dir = "runs/default";
  DataConfig data;
  AugmentConfig augment;

  void validate() const;
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// The full config document: {"model": ..., "loss": ..., "train": ...}.
struct RunConfig {
  ModelConfig model;
  LossConfig loss;
  TrainConfig train;

  void validate() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);
  nlohmann::json to_json() const;
};

}  // namespace uie
