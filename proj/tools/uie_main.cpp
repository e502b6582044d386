// Command-line front end. Talks to the core exclusively through the public
// C API in uie.h; configuration documents are edited as plain JSON here.
#include <uie.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;    // usage / config errors
constexpr int kExitRuntime = 2;  // runtime / numeric errors

int exit_code_for(uie_status st) {
  if (st == UIE_OK) return kExitOk;
  if (st == UIE_ERR_CONFIG || st == UIE_ERR_BADARG) return kExitUsage;
  return kExitRuntime;
}

int fail(uie_status st) {
  std::cerr << "error: " << uie_last_error() << "\n";
  return exit_code_for(st);
}

std::string take(char* s) {
  std::string out = s ? s : "";
  uie_string_free(s);
  return out;
}

json load_config_document(const std::string& path) {
  if (path.empty()) {
    char* def = nullptr;
    if (uie_default_config(&def) != UIE_OK) throw std::runtime_error(uie_last_error());
    return json::parse(take(def));
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return json::parse(in, nullptr, true, /*ignore_comments=*/true);
}

// Applies --toy / --seed / --disable / --out on top of the config document.
json apply_overrides(json doc, bool toy, const std::vector<std::string>& disables,
                     const std::string& seed_str, const std::string& out_dir) {
  if (toy) {
    char* adjusted = nullptr;
    if (uie_apply_toy_preset(doc.dump().c_str(), &adjusted) != UIE_OK)
      throw std::runtime_error(uie_last_error());
    doc = json::parse(take(adjusted));
  }
  for (const auto& d : disables) {
    if (d == "cpgb")
      doc["model"]["ablation"]["color_prior"] = false;
    else if (d == "nagdm")
      doc["model"]["ablation"]["gradient"] = false;
    else if (d == "isf")
      doc["model"]["ablation"]["transformer"] = false;
    else
      throw CLI::ValidationError("--disable must be one of cpgb|nagdm|isf, got '" + d + "'");
  }
  if (!seed_str.empty()) doc["train"]["seed"] = std::stoull(seed_str);
  if (!out_dir.empty()) doc["train"]["out_dir"] = out_dir;
  return doc;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uie: deep-unfolding underwater image enhancement toolkit"};
  app.require_subcommand(1);

  std::string config_path, seed_str, checkpoint, out_path;
  bool toy = false;
  std::vector<std::string> disables;

  auto add_common = [&](CLI::App* cmd, bool with_model_flags) {
    cmd->add_option("--config", config_path, "JSON configuration file");
    cmd->add_option("--seed", seed_str, "override train.seed");
    cmd->add_option("--out", out_path, "output directory");
    if (with_model_flags) {
      cmd->add_flag("--toy", toy, "apply the small desk-scale preset");
      cmd->add_option("--disable", disables, "drop a module: cpgb|nagdm|isf (repeatable)")
          ->expected(-1);
    }
  };

  // train
  auto* cmd_train = app.add_subcommand("train", "train a model per the config");
  add_common(cmd_train, true);
  cmd_train->add_option("--checkpoint", checkpoint, "resume from this checkpoint");

  // eval
  std::string input_dir, target_dir;
  int resize_h = 0, resize_w = 0;
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a paired dataset");
  cmd_eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  cmd_eval->add_option("--input", input_dir, "input image directory");
  cmd_eval->add_option("--target", target_dir, "reference image directory");
  cmd_eval->add_option("--config", config_path, "config supplying dataset paths/resize");
  cmd_eval->add_option("--out", out_path, "directory for report files");

  // enhance
  std::vector<std::string> files;
  auto* cmd_enhance = app.add_subcommand("enhance", "enhance image files");
  cmd_enhance->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  cmd_enhance->add_option("--out", out_path, "output directory")->required();
  cmd_enhance->add_option("files", files, "input images")->required();

  // ablate
  auto* cmd_ablate = app.add_subcommand("ablate", "train/evaluate all module on/off combinations");
  add_common(cmd_ablate, true);

  // degrade
  std::string t_csv, a_csv;
  double sigma = 0.01;
  auto* cmd_degrade = app.add_subcommand("degrade", "synthesize degraded copies of clean images");
  cmd_degrade->add_option("--out", out_path, "output directory")->required();
  cmd_degrade->add_option("--t", t_csv, "per-channel transmission r,g,b (default 0.4,0.7,0.8)");
  cmd_degrade->add_option("--A", a_csv, "per-channel ambient light r,g,b (default 0.1,0.5,0.6)");
  cmd_degrade->add_option("--sigma", sigma, "additive noise std", true);
  cmd_degrade->add_option("--seed", seed_str, "noise seed");
  cmd_degrade->add_option("files", files, "clean input images")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cmd_train->parsed()) {
      json doc = apply_overrides(load_config_document(config_path), toy, disables, seed_str,
                                 out_path);
      char* result = nullptr;
      uie_status st = uie_train(doc.dump().c_str(), checkpoint.empty() ? nullptr : checkpoint.c_str(),
                                &result);
      if (st != UIE_OK) return fail(st);
      json r = json::parse(take(result));
      std::cout << "trained " << r["steps"] << " steps; first loss " << r["first_total"]
                << ", last loss " << r["last_total"] << "\n"
                << "checkpoint: " << r["final_checkpoint"].get<std::string>() << "\n"
                << "log: " << r["log"].get<std::string>() << "\n";
      return kExitOk;
    }

    if (cmd_eval->parsed()) {
      int rh = resize_h, rw = resize_w;
      if (!config_path.empty()) {
        json doc = load_config_document(config_path);
        const json& data = doc.at("train").at("data");
        if (input_dir.empty()) input_dir = data.value("input_dir", "");
        if (target_dir.empty()) target_dir = data.value("target_dir", "");
        if (data.contains("resize")) {
          rh = data["resize"][0];
          rw = data["resize"][1];
        }
      }
      if (input_dir.empty() || target_dir.empty()) {
        std::cerr << "error: eval needs --input/--target (or a --config naming them)\n";
        return kExitUsage;
      }
      uie_model* model = nullptr;
      uie_status st = uie_model_load(checkpoint.c_str(), &model);
      if (st != UIE_OK) return fail(st);
      char* result = nullptr;
      st = uie_evaluate(model, input_dir.c_str(), target_dir.c_str(), rh, rw, &result);
      uie_model_free(model);
      if (st != UIE_OK) return fail(st);
      json r = json::parse(take(result));
      std::cout << r["model"]["text"].get<std::string>();
      if (!out_path.empty()) {
        write_text_file(out_path + "/report.txt", r["model"]["text"].get<std::string>());
        write_text_file(out_path + "/report.tsv", r["model"]["tsv"].get<std::string>());
        write_text_file(out_path + "/report.json", r.dump(2));
        std::cout << "reports written to " << out_path << "\n";
      }
      return kExitOk;
    }

    if (cmd_enhance->parsed()) {
      uie_model* model = nullptr;
      uie_status st = uie_model_load(checkpoint.c_str(), &model);
      if (st != UIE_OK) return fail(st);
      int failures = 0;
      for (const auto& f : files) {
        const auto stem = f.substr(f.find_last_of('/') + 1);
        const auto dot = stem.find_last_of('.');
        const std::string dst = out_path + "/" + stem.substr(0, dot) + ".png";
        st = uie_enhance_file(model, f.c_str(), dst.c_str());
        if (st != UIE_OK) {
          std::cerr << "error: " << f << ": " << uie_last_error() << "\n";
          ++failures;
        } else {
          std::cout << dst << "\n";
        }
      }
      uie_model_free(model);
      if (failures == static_cast<int>(files.size())) return kExitRuntime;
      return kExitOk;
    }

    if (cmd_ablate->parsed()) {
      json doc = apply_overrides(load_config_document(config_path), toy, disables, seed_str,
                                 out_path);
      char* result = nullptr;
      uie_status st = uie_ablate(doc.dump().c_str(), &result);
      if (st != UIE_OK) return fail(st);
      json r = json::parse(take(result));
      std::cout << r["text"].get<std::string>();
      const std::string dir = doc["train"]["out_dir"].get<std::string>();
      write_text_file(dir + "/ablation.tsv", r["tsv"].get<std::string>());
      write_text_file(dir + "/ablation.txt", r["text"].get<std::string>());
      std::cout << "ablation tables written to " << dir << "\n";
      return kExitOk;
    }

    if (cmd_degrade->parsed()) {
      json params;
      auto parse3 = [](const std::string& csv) {
        std::vector<double> v;
        std::stringstream ss(csv);
        std::string item;
        while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
        if (v.size() != 3) throw std::runtime_error("expected three comma-separated values");
        return v;
      };
      if (!t_csv.empty()) params["transmission"] = parse3(t_csv);
      if (!a_csv.empty()) params["ambient"] = parse3(a_csv);
      params["noise_sigma"] = sigma;
      const uint64_t seed = seed_str.empty() ? 0 : std::stoull(seed_str);
      for (const auto& f : files) {
        const auto stem = f.substr(f.find_last_of('/') + 1);
        const auto dot = stem.find_last_of('.');
        const std::string dst = out_path + "/" + stem.substr(0, dot) + ".png";
        uie_status st = uie_degrade_file(f.c_str(), dst.c_str(), params.dump().c_str(), seed);
        if (st != UIE_OK) return fail(st);
        std::cout << dst << "\n";
      }
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
