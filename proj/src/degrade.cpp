#include "degrade.h"

#include <algorithm>

#include "errors.h"

namespace uie {

void DegradeParams::validate() const {
  for (double t : transmission)
    if (t <= 0.0 || t > 1.0)
      throw ConfigError("degrade.transmission must be in (0,1], got " + std::to_string(t));
  for (double a : ambient)
    if (a < 0.0 || a > 1.0)
      throw ConfigError("degrade.ambient must be in [0,1], got " + std::to_string(a));
  if (noise_sigma < 0.0) throw ConfigError("degrade.noise_sigma must be >= 0");
}

DegradeParams DegradeParams::from_json(const nlohmann::json& j) {
  DegradeParams p;
  auto read3 = [&j](const char* key, std::array<double, 3>& out) {
    if (!j.contains(key)) return;
    auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 3) throw ConfigError(std::string("degrade.") + key + " must have 3 entries");
    std::copy(v.begin(), v.end(), out.begin());
  };
  read3("transmission", p.transmission);
  read3("ambient", p.ambient);
  if (j.contains("noise_sigma")) p.noise_sigma = j.at("noise_sigma").get<double>();
  return p;
}

nlohmann::json DegradeParams::to_json() const {
  return nlohmann::json{{"transmission", transmission},
                        {"ambient", ambient},
                        {"noise_sigma", noise_sigma}};
}

Tensor synth_degrade(const Tensor& clean, const DegradeParams& params, Rng& rng) {
  params.validate();
  if (clean.ndim() != 3 || clean.dim(0) != 3)
    throw ShapeError("synth_degrade: expected 3xHxW image, got " + clean.shape_str());
  const int h = clean.dim(1), w = clean.dim(2);
  Tensor out({3, h, w});
  for (int c = 0; c < 3; ++c) {
    const double t = params.transmission[static_cast<size_t>(c)];
    const double a = params.ambient[static_cast<size_t>(c)];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = t * clean.at(c, y, x) + (1.0 - t) * a;
        if (params.noise_sigma > 0.0) v += params.noise_sigma * rng.normal();
        out.at(c, y, x) = std::clamp(v, 0.0, 1.0);
      }
  }
  return out;
}

}  // namespace uie
