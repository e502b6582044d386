#include "dataset.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "errors.h"
#include "image_io.h"
#include "image_ops.h"

namespace fs = std::filesystem;

namespace uie {

namespace {

std::map<std::string, std::string> index_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::map<std::string, std::string> out;  // stem -> path, sorted by stem
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (!has_image_extension(name)) continue;
    out[entry.path().stem().string()] = entry.path().string();
  }
  return out;
}

}  // namespace

std::vector<std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::vector<PairedSample> load_paired_dataset(const std::string& input_dir,
                                              const std::string& target_dir, int resize_h,
                                              int resize_w, const std::string& manifest_path) {
  auto inputs = index_dir(input_dir);
  auto targets = index_dir(target_dir);

  std::vector<std::string> input_only, target_only;
  for (const auto& [id, path] : inputs)
    if (!targets.count(id)) input_only.push_back(id);
  for (const auto& [id, path] : targets)
    if (!inputs.count(id)) target_only.push_back(id);
  if (!input_only.empty() || !target_only.empty()) {
    std::ostringstream os;
    os << "unmatched dataset pairs:";
    if (!input_only.empty()) {
      os << " missing targets for [";
      for (size_t i = 0; i < input_only.size(); ++i) os << (i ? ", " : "") << input_only[i];
      os << "]";
    }
    if (!target_only.empty()) {
      os << " missing inputs for [";
      for (size_t i = 0; i < target_only.size(); ++i) os << (i ? ", " : "") << target_only[i];
      os << "]";
    }
    throw IoError(os.str());
  }

  std::vector<std::string> ids;
  if (!manifest_path.empty()) {
    ids = read_manifest(manifest_path);
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids)
      if (!inputs.count(id)) throw IoError("manifest id '" + id + "' not present in " + input_dir);
  } else {
    for (const auto& [id, path] : inputs) ids.push_back(id);  // already sorted
  }

  std::vector<PairedSample> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    PairedSample s;
    s.id = id;
    try {
      s.input = read_image(inputs.at(id));
      s.target = read_image(targets.at(id));
    } catch (const IoError&) {
      throw;
    }
    if (resize_h > 0 && resize_w > 0) {
      s.input = resize_bilinear(s.input, resize_h, resize_w);
      s.target = resize_bilinear(s.target, resize_h, resize_w);
    }
    out.push_back(std::move(s));
  }
  return out;
}

PairedSample mixup_pair(const PairedSample& a, const PairedSample& b, double coeff) {
  if (!a.input.same_shape(b.input) || !a.target.same_shape(b.target))
    throw ShapeError("mixup: partner shapes differ");
  PairedSample out;
  out.id = a.id;
  out.input = a.input;
  out.target = a.target;
  for (int64_t i = 0; i < out.input.size(); ++i)
    out.input[i] = coeff * a.input[i] + (1.0 - coeff) * b.input[i];
  for (int64_t i = 0; i < out.target.size(); ++i)
    out.target[i] = coeff * a.target[i] + (1.0 - coeff) * b.target[i];
  return out;
}

PairedSample augment(const PairedSample& sample, const PairedSample* mixup_partner,
                     const AugmentConfig& cfg, Rng& rng) {
  PairedSample s = sample;
  auto both = [&s](auto&& f) {
    s.input = f(s.input);
    s.target = f(s.target);
  };
  if (rng.uniform() < cfg.hflip) both([](const Tensor& t) { return flip_h(t); });
  if (rng.uniform() < cfg.vflip) both([](const Tensor& t) { return flip_v(t); });
  if (rng.uniform() < cfg.rot90) {
    const int k = 1 + rng.uniform_int(3);
    both([k](const Tensor& t) { return rot90(t, k); });
  }
  if (rng.uniform() < cfg.transpose) both([](const Tensor& t) { return transpose_hw(t); });
  if (rng.uniform() < cfg.crop) {
    const int h = s.input.dim(1), w = s.input.dim(2);
    const int ch = std::max(1, static_cast<int>(h * cfg.crop_frac));
    const int cw = std::max(1, static_cast<int>(w * cfg.crop_frac));
    const int y0 = rng.uniform_int(h - ch + 1);
    const int x0 = rng.uniform_int(w - cw + 1);
    both([=](const Tensor& t) { return resize_bilinear(crop(t, y0, x0, ch, cw), h, w); });
  }
  if (mixup_partner && rng.uniform() < cfg.mixup) {
    const double coeff = rng.beta(cfg.mixup_alpha, cfg.mixup_alpha);
    s = mixup_pair(s, *mixup_partner, coeff);
  }
  return s;
}

}  // namespace uie
