#include "uie.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "checkpoint.h"
#include "color.h"
#include "config.h"
#include "degrade.h"
#include "errors.h"
#include "losses.h"
#include "model.h"
#include "report.h"
#include "trainer.h"

using namespace uie;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
uie_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return UIE_OK;
  } catch (const ConfigError& e) {
    g_last_error = e.what();
    return UIE_ERR_CONFIG;
  } catch (const IoError& e) {
    g_last_error = e.what();
    return UIE_ERR_IO;
  } catch (const ShapeError& e) {
    g_last_error = e.what();
    return UIE_ERR_SHAPE;
  } catch (const NumericError& e) {
    g_last_error = e.what();
    return UIE_ERR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UIE_ERR_RUNTIME;
  }
}

uie_status bad_arg(const char* msg) {
  g_last_error = msg;
  return UIE_ERR_BADARG;
}

Tensor tensor_from_chw(const double* data, int32_t h, int32_t w) {
  if (h < 1 || w < 1) throw ShapeError("image dims must be positive");
  Tensor t({3, h, w});
  std::memcpy(t.data(), data, sizeof(double) * static_cast<size_t>(t.size()));
  return t;
}

RunConfig parse_run_config(const char* config_json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  // Accept either a full document or a bare model section.
  if (!j.contains("model") && (j.contains("backbone") || j.contains("stages") ||
                               j.contains("color_prior") || j.contains("ablation")))
    j = nlohmann::json{{"model", j}};
  return RunConfig::from_json(j);
}

nlohmann::json report_json_with_tables(const MetricReport& rep) {
  nlohmann::json j = rep.to_json();
  j["text"] = rep.to_text();
  j["tsv"] = rep.to_tsv();
  return j;
}

uie_lpips_fn g_lpips_fn = nullptr;
void* g_lpips_user = nullptr;

}  // namespace

struct uie_model {
  Model impl;
  std::string config_json;  // full document snapshot used at creation/from checkpoint
};

extern "C" {

const char* uie_version(void) { return "1.0.0"; }

const char* uie_last_error(void) { return g_last_error.c_str(); }

void uie_string_free(char* s) { std::free(s); }

uie_status uie_default_config(char** out_json) {
  if (!out_json) return bad_arg("out_json is null");
  return guarded([&] { *out_json = dup_string(RunConfig{}.to_json().dump(2)); });
}

uie_status uie_apply_toy_preset(const char* config_json, char** out_json) {
  if (!config_json || !out_json) return bad_arg("null argument");
  return guarded([&] {
    RunConfig cfg = parse_run_config(config_json);
    cfg.model.apply_toy_preset();
    *out_json = dup_string(cfg.to_json().dump(2));
  });
}

uie_status uie_model_create(const char* config_json, uint64_t seed, uie_model** out) {
  if (!config_json || !out) return bad_arg("null argument");
  return guarded([&] {
    RunConfig cfg = parse_run_config(config_json);
    auto* m = new uie_model{Model::build(cfg.model, seed), cfg.to_json().dump()};
    *out = m;
  });
}

uie_status uie_model_load(const char* checkpoint_path, uie_model** out) {
  if (!checkpoint_path || !out) return bad_arg("null argument");
  return guarded([&] {
    LoadedCheckpoint ck = load_checkpoint(checkpoint_path);
    *out = new uie_model{std::move(ck.model), std::move(ck.config_json)};
  });
}

uie_status uie_model_save(uie_model* m, const char* checkpoint_path) {
  if (!m || !checkpoint_path) return bad_arg("null argument");
  return guarded([&] { save_checkpoint(checkpoint_path, m->impl, 0, m->config_json); });
}

void uie_model_free(uie_model* m) { delete m; }

uie_status uie_model_param_count(uie_model* m, uint64_t* out) {
  if (!m || !out) return bad_arg("null argument");
  return guarded([&] { *out = static_cast<uint64_t>(m->impl.param_count()); });
}

uie_status uie_model_config(uie_model* m, char** out_json) {
  if (!m || !out_json) return bad_arg("null argument");
  return guarded([&] { *out_json = dup_string(m->config_json); });
}

uie_status uie_enhance_image(uie_model* m, const double* in_chw, int32_t h, int32_t w,
                             double* out_chw) {
  if (!m || !in_chw || !out_chw) return bad_arg("null argument");
  return guarded([&] {
    Tensor img = tensor_from_chw(in_chw, h, w);
    Tensor out = m->impl.enhance(img);
    std::memcpy(out_chw, out.data(), sizeof(double) * static_cast<size_t>(out.size()));
  });
}

uie_status uie_enhance_file(uie_model* m, const char* input_path, const char* output_png) {
  if (!m || !input_path || !output_png) return bad_arg("null argument");
  return guarded([&] {
    Tensor img = read_image(input_path);
    write_png(output_png, m->impl.enhance(img));
  });
}

uie_status uie_train(const char* config_json, const char* resume_checkpoint, char** out_json) {
  if (!config_json) return bad_arg("config_json is null");
  return guarded([&] {
    RunConfig cfg = parse_run_config(config_json);
    TrainResult r = run_training(cfg, resume_checkpoint ? resume_checkpoint : "");
    if (out_json) {
      *out_json = dup_string(nlohmann::json{{"final_checkpoint", r.final_checkpoint},
                                            {"log", r.log_path},
                                            {"steps", r.steps_run},
                                            {"first_total", r.first_total},
                                            {"last_total", r.last_total}}
                                 .dump());
    }
  });
}

uie_status uie_evaluate(uie_model* m, const char* input_dir, const char* target_dir,
                        int32_t resize_h, int32_t resize_w, char** out_json) {
  if (!m || !input_dir || !target_dir || !out_json) return bad_arg("null argument");
  return guarded([&] {
    auto ds = load_paired_dataset(input_dir, target_dir, resize_h, resize_w);
    LossConfig lc;
    MetricReport model_rep = evaluate_model(m->impl, ds, lc);
    MetricReport input_rep = evaluate_input_baseline(ds, lc);
    nlohmann::json j{{"model", report_json_with_tables(model_rep)},
                     {"input", report_json_with_tables(input_rep)}};
    *out_json = dup_string(j.dump());
  });
}

uie_status uie_ablate(const char* config_json, char** out_json) {
  if (!config_json || !out_json) return bad_arg("null argument");
  return guarded([&] {
    RunConfig cfg = parse_run_config(config_json);
    AblationReport rep = run_ablation(cfg);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows) {
      rows.push_back(nlohmann::json{{"cpgb", r.color_prior},
                                    {"nagdm", r.gradient},
                                    {"isf", r.transformer},
                                    {"psnr", std::isinf(r.metrics.psnr) ? 1e30 : r.metrics.psnr},
                                    {"ssim", r.metrics.ssim},
                                    {"delta_e", r.metrics.delta_e},
                                    {"reference", r.reference}});
    }
    *out_json = dup_string(
        nlohmann::json{{"rows", rows}, {"text", rep.to_text()}, {"tsv", rep.to_tsv()}}.dump());
  });
}

uie_status uie_degrade_image(const double* in_chw, int32_t h, int32_t w, const char* params_json,
                             uint64_t seed, double* out_chw) {
  if (!in_chw || !out_chw) return bad_arg("null argument");
  return guarded([&] {
    DegradeParams p;
    if (params_json) {
      try {
        p = DegradeParams::from_json(nlohmann::json::parse(params_json));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("degrade params parse error: ") + e.what());
      }
    }
    Tensor img = tensor_from_chw(in_chw, h, w);
    Rng rng = Rng::derive(seed, {0xde61adeull});
    Tensor out = synth_degrade(img, p, rng);
    std::memcpy(out_chw, out.data(), sizeof(double) * static_cast<size_t>(out.size()));
  });
}

uie_status uie_degrade_file(const char* input_path, const char* output_png,
                            const char* params_json, uint64_t seed) {
  if (!input_path || !output_png) return bad_arg("null argument");
  return guarded([&] {
    DegradeParams p;
    if (params_json) {
      try {
        p = DegradeParams::from_json(nlohmann::json::parse(params_json));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("degrade params parse error: ") + e.what());
      }
    }
    Tensor img = read_image(input_path);
    Rng rng = Rng::derive(seed, {0xde61adeull});
    write_png(output_png, synth_degrade(img, p, rng));
  });
}

uie_status uie_metrics(const double* a, const double* b, int32_t h, int32_t w, double* psnr_out,
                       double* ssim_out, double* delta_e_out) {
  if (!a || !b) return bad_arg("null argument");
  return guarded([&] {
    Tensor ta = tensor_from_chw(a, h, w);
    Tensor tb = tensor_from_chw(b, h, w);
    if (psnr_out) *psnr_out = psnr(ta, tb);
    if (ssim_out) *ssim_out = ssim_metric(ta, tb);
    if (delta_e_out) *delta_e_out = delta_e(ta, tb);
  });
}

uie_status uie_set_lpips_plugin(uie_lpips_fn fn, void* user) {
  return guarded([&] {
    g_lpips_fn = fn;
    g_lpips_user = user;
    if (!fn) {
      set_lpips_plugin(nullptr);
      return;
    }
    set_lpips_plugin([](const Tensor& x, const Tensor& y) {
      return g_lpips_fn(x.data(), y.data(), x.dim(0), x.dim(1), x.dim(2), g_lpips_user);
    });
  });
}

}  // extern "C"
