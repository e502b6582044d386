#include "config.h"

#include <fstream>
#include <sstream>

#include "errors.h"

namespace uie {

namespace {

using nlohmann::json;

void require_range_i(const char* field, int64_t v, int64_t lo) {
  if (v < lo)
    throw ConfigError(std::string(field) + " must be >= " + std::to_string(lo) + ", got " +
                      std::to_string(v));
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelConfig

void ModelConfig::validate() const {
  require_range_i("model.stages", stages, 1);
  for (int h : color_prior.hidden) require_range_i("model.color_prior.hidden", h, 1);
  require_range_i("model.color_prior.groups", color_prior.groups, 1);
  require_range_i("model.color_prior.blocks_per_group", color_prior.blocks_per_group, 1);
  require_range_i("model.color_prior.channels", color_prior.channels, 1);
  if (color_prior.kernel < 1 || color_prior.kernel % 2 == 0)
    throw ConfigError("model.color_prior.kernel must be odd, got " +
                      std::to_string(color_prior.kernel));
  require_range_i("model.gradient.expansion", gradient.expansion, 1);
  if (gradient.dw_kernel < 1 || gradient.dw_kernel % 2 == 0)
    throw ConfigError("model.gradient.dw_kernel must be odd, got " +
                      std::to_string(gradient.dw_kernel));
  if ((3 * gradient.expansion) % 2 != 0)
    throw ConfigError("model.gradient.expansion: 3*expansion must be even for the channel-split "
                      "gate, got expansion=" + std::to_string(gradient.expansion));
  require_range_i("model.transformer.channels", transformer.channels, 1);
  require_range_i("model.transformer.ffn_expansion", transformer.ffn_expansion, 1);
  require_range_i("model.backbone.base_channels", backbone.base_channels, 1);
  require_range_i("model.backbone.scales", backbone.scales, 2);
  if (transformer.channels != backbone.base_channels)
    throw ConfigError("model.transformer.channels (" + std::to_string(transformer.channels) +
                      ") must equal model.backbone.base_channels (" +
                      std::to_string(backbone.base_channels) +
                      "): the transformer consumes decoder features directly");
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  if (j.contains("stages")) c.stages = get_or(j, "stages", 3);
  if (j.contains("color_prior")) {
    const json& p = j.at("color_prior");
    c.color_prior.hidden = get_or(p, "hidden", c.color_prior.hidden);
    std::string act = get_or<std::string>(p, "activation", "sine");
    if (act == "sine")
      c.color_prior.activation = ColorActivation::kSine;
    else if (act == "tanh")
      c.color_prior.activation = ColorActivation::kTanh;
    else
      throw ConfigError("model.color_prior.activation must be 'sine' or 'tanh', got '" + act + "'");
    c.color_prior.groups = get_or(p, "groups", c.color_prior.groups);
    c.color_prior.blocks_per_group = get_or(p, "blocks_per_group", c.color_prior.blocks_per_group);
    c.color_prior.channels = get_or(p, "channels", c.color_prior.channels);
    c.color_prior.kernel = get_or(p, "kernel", c.color_prior.kernel);
  }
  if (j.contains("gradient")) {
    const json& p = j.at("gradient");
    c.gradient.expansion = get_or(p, "expansion", c.gradient.expansion);
    c.gradient.dw_kernel = get_or(p, "dw_kernel", c.gradient.dw_kernel);
    c.gradient.step_init = get_or(p, "step_init", c.gradient.step_init);
  }
  if (j.contains("transformer")) {
    const json& p = j.at("transformer");
    c.transformer.channels = get_or(p, "channels", c.transformer.channels);
    c.transformer.ffn_expansion = get_or(p, "ffn_expansion", c.transformer.ffn_expansion);
  }
  if (j.contains("backbone")) {
    const json& p = j.at("backbone");
    c.backbone.base_channels = get_or(p, "base_channels", c.backbone.base_channels);
    c.backbone.scales = get_or(p, "scales", c.backbone.scales);
  }
  if (j.contains("ablation")) {
    const json& p = j.at("ablation");
    c.ablation.color_prior = get_or(p, "color_prior", true);
    c.ablation.gradient = get_or(p, "gradient", true);
    c.ablation.transformer = get_or(p, "transformer", true);
  }
  return c;
}

json ModelConfig::to_json() const {
  json j;
  j["stages"] = stages;
  j["color_prior"] = {
      {"hidden", color_prior.hidden},
      {"activation", color_prior.activation == ColorActivation::kSine ? "sine" : "tanh"},
      {"groups", color_prior.groups},
      {"blocks_per_group", color_prior.blocks_per_group},
      {"channels", color_prior.channels},
      {"kernel", color_prior.kernel}};
  j["gradient"] = {{"expansion", gradient.expansion},
                   {"dw_kernel", gradient.dw_kernel},
                   {"step_init", gradient.step_init}};
  j["transformer"] = {{"channels", transformer.channels},
                      {"ffn_expansion", transformer.ffn_expansion}};
  j["backbone"] = {{"base_channels", backbone.base_channels}, {"scales", backbone.scales}};
  j["ablation"] = {{"color_prior", ablation.color_prior},
                   {"gradient", ablation.gradient},
                   {"transformer", ablation.transformer}};
  return j;
}

void ModelConfig::apply_toy_preset() {
  color_prior.hidden = {8, 8};
  color_prior.channels = 8;
  transformer.channels = 8;
  backbone.base_channels = 8;
  backbone.scales = 2;
}

// ---------------------------------------------------------------------------
// LossConfig

void LossConfig::validate() const {
  if (lambda < 0) throw ConfigError("loss.lambda must be >= 0");
  if (c1 <= 0 || c2 <= 0) throw ConfigError("loss.c1 and loss.c2 must be > 0");
  if (window < 1 || window % 2 == 0)
    throw ConfigError("loss.window must be odd, got " + std::to_string(window));
  if (sigma <= 0) throw ConfigError("loss.sigma must be > 0");
  for (double w : stage_weights)
    if (w < 0) throw ConfigError("loss.stage_weights must be >= 0");
}

LossConfig LossConfig::from_json(const json& j) {
  LossConfig c;
  c.lambda = get_or(j, "lambda", c.lambda);
  c.window = get_or(j, "window", c.window);
  c.sigma = get_or(j, "sigma", c.sigma);
  c.c1 = get_or(j, "c1", c.c1);
  c.c2 = get_or(j, "c2", c.c2);
  c.stage_weights = get_or(j, "stage_weights", c.stage_weights);
  return c;
}

json LossConfig::to_json() const {
  return json{{"lambda", lambda}, {"window", window},       {"sigma", sigma},
              {"c1", c1},         {"c2", c2},               {"stage_weights", stage_weights}};
}

// ---------------------------------------------------------------------------
// AugmentConfig

AugmentConfig AugmentConfig::from_json(const json& j) {
  AugmentConfig c;
  c.hflip = get_or(j, "hflip", c.hflip);
  c.vflip = get_or(j, "vflip", c.vflip);
  c.rot90 = get_or(j, "rot90", c.rot90);
  c.transpose = get_or(j, "transpose", c.transpose);
  c.crop = get_or(j, "crop", c.crop);
  c.crop_frac = get_or(j, "crop_frac", c.crop_frac);
  c.mixup = get_or(j, "mixup", c.mixup);
  c.mixup_alpha = get_or(j, "mixup_alpha", c.mixup_alpha);
  return c;
}

json AugmentConfig::to_json() const {
  return json{{"hflip", hflip},     {"vflip", vflip},         {"rot90", rot90},
              {"transpose", transpose}, {"crop", crop},       {"crop_frac", crop_frac},
              {"mixup", mixup},     {"mixup_alpha", mixup_alpha}};
}

AugmentConfig AugmentConfig::none() {
  AugmentConfig c;
  c.hflip = c.vflip = c.rot90 = c.transpose = c.crop = c.mixup = 0.0;
  return c;
}

// ---------------------------------------------------------------------------
// DataConfig / TrainConfig

DataConfig DataConfig::from_json(const json& j) {
  DataConfig c;
  c.input_dir = get_or<std::string>(j, "input_dir", "");
  c.target_dir = get_or<std::string>(j, "target_dir", "");
  if (j.contains("resize")) {
    auto r = j.at("resize").get<std::vector<int>>();
    if (r.size() != 2) throw ConfigError("train.data.resize must be [H, W]");
    c.resize_h = r[0];
    c.resize_w = r[1];
  }
  c.val_fraction = get_or(j, "val_fraction", c.val_fraction);
  c.train_manifest = get_or<std::string>(j, "train_manifest", "");
  c.val_manifest = get_or<std::string>(j, "val_manifest", "");
  return c;
}

json DataConfig::to_json() const {
  return json{{"input_dir", input_dir},
              {"target_dir", target_dir},
              {"resize", {resize_h, resize_w}},
              {"val_fraction", val_fraction},
              {"train_manifest", train_manifest},
              {"val_manifest", val_manifest}};
}

void TrainConfig::validate() const {
  require_range_i("train.epochs", epochs, 1);
  require_range_i("train.batch_size", batch_size, 1);
  if (lr_floor >= lr)
    throw ConfigError("train.lr_floor must be < train.lr (got " + std::to_string(lr_floor) +
                      " vs " + std::to_string(lr) + ")");
  if (lr <= 0) throw ConfigError("train.lr must be > 0");
  if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
    throw ConfigError("train.beta1/beta2 must be in [0, 1)");
  if (weight_decay < 0) throw ConfigError("train.weight_decay must be >= 0");
  if (precision != "f64")
    throw ConfigError("train.precision: only 'f64' is supported, got '" + precision + "'");
  if (restart_period < 0) throw ConfigError("train.restart_period must be >= 0");
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.epochs = get_or(j, "epochs", c.epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.max_steps = get_or(j, "max_steps", c.max_steps);
  c.lr = get_or(j, "lr", c.lr);
  c.lr_floor = get_or(j, "lr_floor", c.lr_floor);
  c.beta1 = get_or(j, "beta1", c.beta1);
  c.beta2 = get_or(j, "beta2", c.beta2);
  c.weight_decay = get_or(j, "weight_decay", c.weight_decay);
  c.grad_clip = get_or(j, "grad_clip", c.grad_clip);
  c.restart_period = get_or(j, "restart_period", c.restart_period);
  c.seed = get_or<uint64_t>(j, "seed", c.seed);
  c.precision = get_or<std::string>(j, "precision", c.precision);
  c.checkpoint_every = get_or(j, "checkpoint_every", c.checkpoint_every);
  c.out_dir = get_or<std::string>(j, "out_dir", c.out_dir);
  if (j.contains("data")) c.data = DataConfig::from_json(j.at("data"));
  if (j.contains("augment")) c.augment = AugmentConfig::from_json(j.at("augment"));
  return c;
}

json TrainConfig::to_json() const {
  json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["max_steps"] = max_steps;
  j["lr"] = lr;
  j["lr_floor"] = lr_floor;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["weight_decay"] = weight_decay;
  j["grad_clip"] = grad_clip;
  j["restart_period"] = restart_period;
  j["seed"] = seed;
  j["precision"] = precision;
  j["checkpoint_every"] = checkpoint_every;
  j["out_dir"] = out_dir;
  j["data"] = data.to_json();
  j["augment"] = augment.to_json();
  return j;
}

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::validate() const {
  model.validate();
  loss.validate();
  train.validate();
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
  if (j.contains("loss")) c.loss = LossConfig::from_json(j.at("loss"));
  if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
  return c;
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_json(j);
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

json RunConfig::to_json() const {
  return json{{"model", model.to_json()}, {"loss", loss.to_json()}, {"train", train.to_json()}};
}

}  // namespace uie
