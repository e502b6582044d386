#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "model.h"
#include "optimizer.h"

namespace uie {

// Single binary archive: magic, schema version, seed, step counter, a JSON
// config snapshot, all named parameter tensors in registration order, and
// (optionally) optimizer moments. Fixed little-endian layout; writing the
// same state twice produces byte-identical files.
inline constexpr uint32_t kCheckpointSchemaVersion = 1;

void save_checkpoint(const std::string& path, Model& model, int64_t step,
                     const std::string& config_json, const AdamW* opt = nullptr);

struct LoadedCheckpoint {
  Model model;
  int64_t step = 0;
  uint64_t seed = 0;
  std::string config_json;
  bool has_optimizer = false;
  std::vector<Tensor> opt_m, opt_v;
  int64_t opt_t = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace uie
