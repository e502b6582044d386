#pragma once

#include <string>
#include <vector>

#include "checkpoint.h"
#include "config.h"
#include "dataset.h"
#include "losses.h"
#include "model.h"
#include "optimizer.h"
#include "report.h"

namespace uie {

struct TrainResult {
  std::string final_checkpoint;
  std::string log_path;
  int64_t steps_run = 0;
  double first_total = 0.0;  // batch loss at the first executed step
  double last_total = 0.0;   // batch loss at the last executed step
};

// Deep-supervised training loop. Batch order, augmentation draws and mixup
// partners are pure functions of (seed, step), so an interrupted run resumed
// from a checkpoint reproduces the uninterrupted trajectory exactly.
// `stop_after` (>0) ends the run early at that step while keeping the
// schedule horizon; -1 runs to completion.
TrainResult train_loop(Model& model, AdamW& opt, const RunConfig& cfg,
                       const std::vector<PairedSample>& train_set,
                       const std::vector<PairedSample>& val_set, int64_t start_step = 0,
                       int64_t stop_after = -1);

// Loads datasets per the config, builds (or resumes) the model, trains.
TrainResult run_training(const RunConfig& cfg, const std::string& resume_checkpoint = "");

int64_t total_steps_for(const RunConfig& cfg, size_t train_size);

// Per-image metrics of the model's final-stage output against the targets.
MetricReport evaluate_model(Model& model, const std::vector<PairedSample>& ds,
                            const LossConfig& lc);
// Metrics of the raw inputs against the targets (the no-op baseline).
MetricReport evaluate_input_baseline(const std::vector<PairedSample>& ds, const LossConfig& lc);

struct EnhanceOutcome {
  std::vector<std::string> written;
  std::vector<std::string> errors;  // "path: message" per failed input
};

// Enhances each readable input to <out_dir>/<stem>.png; unreadable inputs are
// reported and the batch continues.
EnhanceOutcome enhance_files(Model& model, const std::vector<std::string>& paths,
                             const std::string& out_dir);

struct AblationRow {
  bool color_prior = false;
  bool gradient = false;
  bool transformer = false;
  MetricRow metrics;
  bool reference = false;  // the full model
};

struct AblationReport {
  std::vector<AblationRow> rows;
  bool with_lpips = false;
  std::string to_text() const;
  std::string to_tsv() const;
};

// Trains and evaluates all seven module on/off combinations (every mix except
// all-off) at the configured scale; the full model is the reference row.
AblationReport run_ablation(const RunConfig& cfg);

}  // namespace uie
