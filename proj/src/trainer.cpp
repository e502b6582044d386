#include "trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "errors.h"
#include "image_io.h"

namespace fs = std::filesystem;

namespace uie {

namespace {

constexpr uint64_t kStreamShuffle = 0x73687566ull;
constexpr uint64_t kStreamAugment = 0x6175676dull;

std::vector<size_t> epoch_order(uint64_t seed, int64_t epoch, size_t n) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng = Rng::derive(seed, {kStreamShuffle, static_cast<uint64_t>(epoch)});
  for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(static_cast<int>(i))]);
  return order;
}

struct SampleResult {
  double total = 0.0, mse = 0.0, ssim_term = 0.0;
  std::vector<Tensor> grads;
};

// Forward+backward for one sample on its own tape; gradients come back in
// parameter order (empty tensors for parameters the graph never touched).
SampleResult run_sample(Model& model, const ParamStore& params, const PairedSample& s,
                        const LossConfig& lc) {
  Tape tape;
  ForwardResult fwd = model.forward(tape, s.input);
  Var target = tape.constant(s.target);
  LossParts loss = total_loss(tape, fwd.stage_images, target, lc);
  tape.backward(loss.total);
  SampleResult r;
  r.total = tape.val(loss.total)[0];
  r.mse = tape.val(loss.mse_part)[0];
  r.ssim_term = tape.val(loss.ssim_part)[0];
  r.grads.reserve(params.count());
  for (const auto& [name, tensor] : params.items()) r.grads.push_back(tape.grad_for(tensor));
  return r;
}

void write_log_line(std::ofstream& log, const nlohmann::json& j) {
  log << j.dump() << "\n";
  log.flush();
}

}  // namespace

int64_t total_steps_for(const RunConfig& cfg, size_t train_size) {
  if (cfg.train.max_steps > 0) return cfg.train.max_steps;
  const int64_t per_epoch =
      (static_cast<int64_t>(train_size) + cfg.train.batch_size - 1) / cfg.train.batch_size;
  return per_epoch * cfg.train.epochs;
}

TrainResult train_loop(Model& model, AdamW& opt, const RunConfig& cfg,
                       const std::vector<PairedSample>& train_set,
                       const std::vector<PairedSample>& val_set, int64_t start_step,
                       int64_t stop_after) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("train: dataset is empty");
  const size_t n = train_set.size();
  const int batch = cfg.train.batch_size;
  const int64_t steps_per_epoch = (static_cast<int64_t>(n) + batch - 1) / batch;
  const int64_t total_steps = total_steps_for(cfg, n);
  const int64_t stop = stop_after > 0 ? std::min(stop_after, total_steps) : total_steps;

  fs::create_directories(cfg.train.out_dir);
  const std::string log_path = cfg.train.out_dir + "/train_log.jsonl";
  std::ofstream log(log_path, start_step > 0 ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot open log: " + log_path);
  const std::string cfg_json = cfg.to_json().dump();

  ParamStore params = model.named_params();
  const size_t hw = std::max(1u, std::thread::hardware_concurrency());

  TrainResult result;
  result.log_path = log_path;
  std::string last_ckpt;
  double best_val_psnr = -1.0;

  for (int64_t step = start_step; step < stop; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    const int64_t epoch = step / steps_per_epoch;
    const int64_t pos = step % steps_per_epoch;
    const std::vector<size_t> order = epoch_order(cfg.train.seed, epoch, n);
    const size_t lo = static_cast<size_t>(pos) * batch;
    const size_t hi = std::min(n, lo + batch);

    // Assemble the batch; every random draw is keyed by (seed, step, slot).
    std::vector<PairedSample> batch_samples;
    for (size_t j = lo; j < hi; ++j) {
      const PairedSample& base = train_set[order[j]];
      if (cfg.train.augment.any()) {
        Rng arng = Rng::derive(cfg.train.seed, {kStreamAugment, static_cast<uint64_t>(step),
                                                static_cast<uint64_t>(j - lo)});
        const PairedSample&partner = train_set[static_cast<size_t>(arng.uniform_int(static_cast<int>(n)))];
        batch_samples.push_back(augment(base, &partner, cfg.train.augment, arng));
      } else {
        batch_samples.push_back(base);
      }
    }

    // Per-sample tapes in parallel; reduction is in batch order afterwards so
    // results do not depend on thread count.
    const size_t bsz = batch_samples.size();
    std::vector<SampleResult> results(bsz);
    const size_t workers = std::min(hw, bsz);
    if (workers > 1) {
      std::vector<std::thread> pool;
      for (size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w]() {
          for (size_t j = w; j < bsz; j += workers)
            results[j] = run_sample(model, params, batch_samples[j], cfg.loss);
        });
      for (auto& th : pool) th.join();
    } else {
      for (size_t j = 0; j < bsz; ++j)
        results[j] = run_sample(model, params, batch_samples[j], cfg.loss);
    }

    double total = 0.0, mse = 0.0, ssim_term = 0.0;
    std::vector<Tensor> grads(params.count());
    for (size_t i = 0; i < params.count(); ++i)
      grads[i] = Tensor::zeros(params.items()[i].second->shape());
    for (size_t j = 0; j < bsz; ++j) {
      total += results[j].total;
      mse += results[j].mse;
      ssim_term += results[j].ssim_term;
      for (size_t i = 0; i < grads.size(); ++i) {
        const Tensor& g = results[j].grads[i];
        if (g.empty()) continue;
        for (int64_t k = 0; k < grads[i].size(); ++k) grads[i][k] += g[k];
      }
    }
    const double inv_b = 1.0 / static_cast<double>(bsz);
    total *= inv_b;
    mse *= inv_b;
    ssim_term *= inv_b;
    for (auto& g : grads)
      for (int64_t k = 0; k < g.size(); ++k) g[k] *= inv_b;

    if (!std::isfinite(total))
      throw NumericError("non-finite loss at step " + std::to_string(step) +
                         (last_ckpt.empty() ? " (no checkpoint saved yet)"
                                            : "; last good checkpoint: " + last_ckpt));

    if (cfg.train.grad_clip > 0.0) {
      double norm2 = 0.0;
      for (const auto& g : grads)
        for (int64_t k = 0; k < g.size(); ++k) norm2 += g[k] * g[k];
      const double norm = std::sqrt(norm2);
      if (norm > cfg.train.grad_clip) {
        const double scale = cfg.train.grad_clip / norm;
        for (auto& g : grads)
          for (int64_t k = 0; k < g.size(); ++k) g[k] *= scale;
      }
    }

    const double lr =
        cosine_lr(step, total_steps, cfg.train.lr, cfg.train.lr_floor, cfg.train.restart_period);
    opt.step(params, grads, lr);

    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_log_line(log, nlohmann::json{{"step", step},
                                       {"lr", lr},
                                       {"mse", mse},
                                       {"ssim_term", ssim_term},
                                       {"total", total},
                                       {"wall_ms", wall_ms}});
    if (step == start_step) result.first_total = total;
    result.last_total = total;
    ++result.steps_run;

    const int64_t done = step + 1;
    if (cfg.train.checkpoint_every > 0 && done % cfg.train.checkpoint_every == 0 && done < stop) {
      std::ostringstream name;
      name << cfg.train.out_dir << "/step" << std::setfill('0') << std::setw(6) << done << ".ckpt";
      save_checkpoint(name.str(), model, done, cfg_json, &opt);
      last_ckpt = name.str();
    }

    if (!val_set.empty() && done % steps_per_epoch == 0) {
      MetricReport rep = evaluate_model(model, val_set, cfg.loss);
      const MetricRow m = rep.means();
      write_log_line(log, nlohmann::json{{"epoch", done / steps_per_epoch},
                                         {"val_psnr", std::isinf(m.psnr) ? 1e30 : m.psnr},
                                         {"val_ssim", m.ssim},
                                         {"val_delta_e", m.delta_e}});
      if (m.psnr > best_val_psnr) {
        best_val_psnr = m.psnr;
        save_checkpoint(cfg.train.out_dir + "/best.ckpt", model, done, cfg_json, &opt);
      }
    }
  }

  const std::string final_path = cfg.train.out_dir + "/final.ckpt";
  save_checkpoint(final_path, model, stop, cfg_json, &opt);
  result.final_checkpoint = final_path;
  return result;
}

TrainResult run_training(const RunConfig& cfg, const std::string& resume_checkpoint) {
  cfg.validate();
  std::vector<PairedSample> all =
      load_paired_dataset(cfg.train.data.input_dir, cfg.train.data.target_dir,
                          cfg.train.data.resize_h, cfg.train.data.resize_w,
                          cfg.train.data.train_manifest);
  std::vector<PairedSample> val;
  if (!cfg.train.data.val_manifest.empty()) {
    val = load_paired_dataset(cfg.train.data.input_dir, cfg.train.data.target_dir,
                              cfg.train.data.resize_h, cfg.train.data.resize_w,
                              cfg.train.data.val_manifest);
  } else if (cfg.train.data.val_fraction > 0.0 && all.size() > 1) {
    // Deterministic split: every k-th sample of the sorted list validates.
    const size_t val_n = std::max<size_t>(
        1, static_cast<size_t>(std::llround(cfg.train.data.val_fraction * all.size())));
    const size_t stride = std::max<size_t>(1, all.size() / val_n);
    std::vector<PairedSample> train_keep;
    for (size_t i = 0; i < all.size(); ++i)
      ((i % stride == 0 && val.size() < val_n) ? val : train_keep).push_back(std::move(all[i]));
    all = std::move(train_keep);
  }

  Model model;
  AdamW opt(cfg.train.beta1, cfg.train.beta2, cfg.train.weight_decay);
  int64_t start_step = 0;
  if (!resume_checkpoint.empty()) {
    LoadedCheckpoint ck = load_checkpoint(resume_checkpoint);
    model = std::move(ck.model);
    start_step = ck.step;
    if (ck.has_optimizer) opt.restore(std::move(ck.opt_m), std::move(ck.opt_v), ck.opt_t);
  } else {
    model = Model::build(cfg.model, cfg.train.seed);
  }
  return train_loop(model, opt, cfg, all, val, start_step);
}

namespace {

MetricRow metrics_for(const std::string& id, const Tensor& out, const Tensor& target,
                      const LossConfig& lc) {
  MetricRow r;
  r.id = id;
  r.psnr = psnr(out, target);
  r.ssim = ssim_metric(out, target, lc);
  r.delta_e = delta_e(out, target);
  if (lpips_plugin_available()) r.lpips = lpips_plugin_eval(out, target);
  return r;
}

template <typename Fn>
MetricReport evaluate_parallel(const std::vector<PairedSample>& ds, const std::string& method,
                               Fn&& produce) {
  MetricReport rep;
  rep.method = method;
  rep.with_lpips = lpips_plugin_available();
  rep.rows.resize(ds.size());
  const size_t workers =
      std::min<size_t>(std::max(1u, std::thread::hardware_concurrency()), ds.size());
  if (workers > 1) {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w]() {
        for (size_t i = w; i < ds.size(); i += workers) rep.rows[i] = produce(ds[i]);
      });
    for (auto& th : pool) th.join();
  } else {
    for (size_t i = 0; i < ds.size(); ++i) rep.rows[i] = produce(ds[i]);
  }
  return rep;
}

}  // namespace

MetricReport evaluate_model(Model& model, const std::vector<PairedSample>& ds,
                            const LossConfig& lc) {
  return evaluate_parallel(ds, "model", [&](const PairedSample& s) {
    return metrics_for(s.id, model.enhance(s.input), s.target, lc);
  });
}

MetricReport evaluate_input_baseline(const std::vector<PairedSample>& ds, const LossConfig& lc) {
  return evaluate_parallel(ds, "input", [&](const PairedSample& s) {
    return metrics_for(s.id, s.input, s.target, lc);
  });
}

EnhanceOutcome enhance_files(Model& model, const std::vector<std::string>& paths,
                             const std::string& out_dir) {
  fs::create_directories(out_dir);
  EnhanceOutcome out;
  for (const auto& path : paths) {
    try {
      Tensor img = read_image(path);
      Tensor enhanced = model.enhance(img);
      const std::string dst = (fs::path(out_dir) / (fs::path(path).stem().string() + ".png")).string();
      write_png(dst, enhanced);
      out.written.push_back(dst);
    } catch (const std::exception& e) {
      out.errors.push_back(path + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ablation switchboard

namespace {
const char* onoff(bool b) { return b ? "yes" : "no"; }
}

std::string AblationReport::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(6) << "cpgb" << std::setw(7) << "nagdm" << std::setw(6) << "isf";
  for (const auto& c : MetricReport::columns(with_lpips))
    if (c != "Method") os << "  " << std::setw(10) << c;
  os << "\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(6) << onoff(r.color_prior) << std::setw(7) << onoff(r.gradient)
       << std::setw(6) << onoff(r.transformer);
    os << "  " << std::setw(10) << format_metric(r.metrics.psnr) << "  " << std::setw(10)
       << format_metric(r.metrics.ssim) << "  " << std::setw(10)
       << format_metric(r.metrics.delta_e);
    if (with_lpips) os << "  " << std::setw(10) << (r.metrics.lpips ? format_metric(*r.metrics.lpips) : "-");
    if (r.reference) os << "  (reference)";
    os << "\n";
  }
  return os.str();
}

std::string AblationReport::to_tsv() const {
  std::ostringstream os;
  os << "cpgb\tnagdm\tisf";
  for (const auto& c : MetricReport::columns(with_lpips))
    if (c != "Method") os << "\t" << c;
  os << "\treference\n";
  for (const auto& r : rows) {
    os << onoff(r.color_prior) << "\t" << onoff(r.gradient) << "\t" << onoff(r.transformer) << "\t"
       << format_metric(r.metrics.psnr) << "\t" << format_metric(r.metrics.ssim) << "\t"
       << format_metric(r.metrics.delta_e);
    if (with_lpips) os << "\t" << (r.metrics.lpips ? format_metric(*r.metrics.lpips) : "-");
    os << "\t" << (r.reference ? "yes" : "no") << "\n";
  }
  return os.str();
}

AblationReport run_ablation(const RunConfig& cfg) {
  cfg.validate();
  std::vector<PairedSample> train_set =
      load_paired_dataset(cfg.train.data.input_dir, cfg.train.data.target_dir,
                          cfg.train.data.resize_h, cfg.train.data.resize_w,
                          cfg.train.data.train_manifest);

  // All on/off combinations except all-off; the full model last, as reference.
  const std::array<std::array<bool, 3>, 7> combos = {{{false, true, true},
                                                      {true, false, true},
                                                      {true, true, false},
                                                      {false, true, false},
                                                      {false, false, true},
                                                      {true, false, false},
                                                      {true, true, true}}};
  AblationReport report;
  report.with_lpips = lpips_plugin_available();
  for (const auto& [use_prior, use_grad, use_tf] : combos) {
    RunConfig sub = cfg;
    sub.model.ablation.color_prior = use_prior;
    sub.model.ablation.gradient = use_grad;
    sub.model.ablation.transformer = use_tf;
    std::ostringstream od;
    od << cfg.train.out_dir << "/ablate_" << (use_prior ? 1 : 0) << (use_grad ? 1 : 0)
       << (use_tf ? 1 : 0);
    sub.train.out_dir = od.str();

    Model model = Model::build(sub.model, sub.train.seed);
    AdamW opt(sub.train.beta1, sub.train.beta2, sub.train.weight_decay);
    train_loop(model, opt, sub, train_set, {}, 0);
    MetricReport rep = evaluate_model(model, train_set, sub.loss);

    AblationRow row;
    row.color_prior = use_prior;
    row.gradient = use_grad;
    row.transformer = use_tf;
    row.metrics = rep.means();
    row.reference = use_prior && use_grad && use_tf;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace uie
