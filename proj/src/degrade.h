#pragma once

#include <array>

#include <json.hpp>

#include "rng.h"
#include "tensor.h"

namespace uie {

// Wavelength-dependent attenuation with ambient light and additive noise:
//   y_c = t_c * x_c + (1 - t_c) * A_c + n,   n ~ Normal(0, sigma^2)
// clamped to [0,1]. The defaults attenuate red the most, matching how water
// absorbs long wavelengths first.
struct DegradeParams {
  std::array<double, 3> transmission = {0.4, 0.7, 0.8};
  std::array<double, 3> ambient = {0.1, 0.5, 0.6};
  double noise_sigma = 0.01;

  void validate() const;
  static DegradeParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

Tensor synth_degrade(const Tensor& clean, const DegradeParams& params, Rng& rng);

}  // namespace uie
