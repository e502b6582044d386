#include "report.h"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace uie {

namespace {
LpipsFn g_lpips;
}

void set_lpips_plugin(LpipsFn fn) { g_lpips = std::move(fn); }
bool lpips_plugin_available() { return static_cast<bool>(g_lpips); }
double lpips_plugin_eval(const Tensor& a, const Tensor& b) { return g_lpips(a, b); }

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

MetricRow MetricReport::means() const {
  MetricRow m;
  m.id = "mean";
  if (rows.empty()) return m;
  double lp = 0.0;
  for (const auto& r : rows) {
    m.psnr += r.psnr;
    m.ssim += r.ssim;
    m.delta_e += r.delta_e;
    if (r.lpips) lp += *r.lpips;
  }
  const double n = static_cast<double>(rows.size());
  m.psnr /= n;
  m.ssim /= n;
  m.delta_e /= n;
  if (with_lpips) m.lpips = lp / n;
  return m;
}

std::vector<std::string> MetricReport::columns(bool with_lpips) {
  std::vector<std::string> c = {"Method", "PSNR ↑", "SSIM ↑", "ΔE ↓"};
  if (with_lpips) c.push_back("LPIPS ↓");
  return c;
}

std::string MetricReport::to_text() const {
  const auto cols = columns(with_lpips);
  std::ostringstream os;
  auto row = [&os](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) os << "  ";
      os << std::left << std::setw(i == 0 ? 24 : 10) << cells[i];
    }
    os << "\n";
  };
  row(cols);
  for (const auto& r : rows) {
    std::vector<std::string> cells = {method + "/" + r.id, format_metric(r.psnr),
                                      format_metric(r.ssim), format_metric(r.delta_e)};
    if (with_lpips) cells.push_back(r.lpips ? format_metric(*r.lpips) : "-");
    row(cells);
  }
  const MetricRow m = means();
  std::vector<std::string> cells = {method + " (mean)", format_metric(m.psnr),
                                    format_metric(m.ssim), format_metric(m.delta_e)};
  if (with_lpips) cells.push_back(m.lpips ? format_metric(*m.lpips) : "-");
  row(cells);
  return os.str();
}

std::string MetricReport::to_tsv() const {
  std::ostringstream os;
  const auto cols = columns(with_lpips);
  for (size_t i = 0; i < cols.size(); ++i) os << (i ? "\t" : "") << cols[i];
  os << "\n";
  auto emit = [&](const std::string& name, const MetricRow& r) {
    os << name << "\t" << format_metric(r.psnr) << "\t" << format_metric(r.ssim) << "\t"
       << format_metric(r.delta_e);
    if (with_lpips) os << "\t" << (r.lpips ? format_metric(*r.lpips) : "-");
    os << "\n";
  };
  for (const auto& r : rows) emit(method + "/" + r.id, r);
  emit(method + " (mean)", means());
  return os.str();
}

nlohmann::json MetricReport::to_json() const {
  auto num = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  nlohmann::json per = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json jr{{"id", r.id}, {"psnr", num(r.psnr)}, {"ssim", num(r.ssim)},
                      {"delta_e", num(r.delta_e)}};
    if (r.lpips) jr["lpips"] = num(*r.lpips);
    per.push_back(jr);
  }
  const MetricRow m = means();
  nlohmann::json jm{{"psnr", num(m.psnr)}, {"ssim", num(m.ssim)}, {"delta_e", num(m.delta_e)}};
  if (m.lpips) jm["lpips"] = num(*m.lpips);
  return nlohmann::json{{"method", method},
                        {"columns", columns(with_lpips)},
                        {"per_image", per},
                        {"mean", jm}};
}

}  // namespace uie
