#pragma once

#include <optional>
#include <string>
#include <vector>

#include "config.h"
#include "rng.h"
#include "tensor.h"

namespace uie {

struct PairedSample {
  Tensor input;   // 3xHxW in [0,1]
  Tensor target;  // same dims as input
  std::string id;
};

// Loads matching-basename pairs from input/target directories, resized to
// (resize_h, resize_w) with bilinear filtering, ordered lexicographically by
// identifier (the filename stem). All unmatched files are reported in one
// aggregated error. An optional manifest (newline-delimited identifiers)
// restricts and must match the available pairs.
std::vector<PairedSample> load_paired_dataset(const std::string& input_dir,
                                              const std::string& target_dir, int resize_h,
                                              int resize_w,
                                              const std::string& manifest_path = "");

std::vector<std::string> read_manifest(const std::string& path);

// Applies the same geometric transform to input and target; mixup blends both
// members of two pairs with one shared coefficient. Draw order is fixed, so a
// given rng state yields one reproducible augmentation.
PairedSample augment(const PairedSample& sample, const PairedSample* mixup_partner,
                     const AugmentConfig& cfg, Rng& rng);

// Blend two pairs with one shared coefficient (exposed for direct testing).
PairedSample mixup_pair(const PairedSample& a, const PairedSample& b, double coeff);

}  // namespace uie
