#pragma once

#include <cstdint>

#include "tensor.h"

namespace uie {

struct LabColor {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// sRGB in [0,1] -> CIELab under D65.
LabColor srgb_to_lab(double r, double g, double b);

// CIEDE2000 color difference between two Lab values.
double ciede2000(const LabColor& x, const LabColor& y);

struct DeltaEResult {
  double mean = 0.0;
  int64_t clamped = 0;  // inputs outside [0,1] that were clamped
};

// Mean per-pixel CIEDE2000 between two images interpreted as sRGB.
DeltaEResult delta_e_detailed(const Tensor& a, const Tensor& b);
double delta_e(const Tensor& a, const Tensor& b);

}  // namespace uie
