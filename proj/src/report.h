#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tensor.h"

namespace uie {

// Optional perceptual-metric plug-in. The toolkit ships no perceptual network
// of its own; when a callback is registered an extra LPIPS column appears in
// every report.
using LpipsFn = std::function<double(const Tensor& a, const Tensor& b)>;
void set_lpips_plugin(LpipsFn fn);
bool lpips_plugin_available();
double lpips_plugin_eval(const Tensor& a, const Tensor& b);

struct MetricRow {
  std::string id;
  double psnr = 0.0;  // +inf allowed
  double ssim = 0.0;
  double delta_e = 0.0;
  std::optional<double> lpips;
};

// Per-image metrics plus arithmetic means, rendered with the fixed column
// header "Method | PSNR ↑ | SSIM ↑ | ΔE ↓" (and "LPIPS ↓" when the plug-in
// is registered).
struct MetricReport {
  std::string method = "model";
  std::vector<MetricRow> rows;
  bool with_lpips = false;

  MetricRow means() const;
  static std::vector<std::string> columns(bool with_lpips);

  std::string to_text() const;              // aligned table, per-image + mean
  std::string to_tsv() const;               // delimiter-separated
  nlohmann::json to_json() const;
};

// Formats a double for reports; infinities serialize as "inf".
std::string format_metric(double v);

}  // namespace uie
