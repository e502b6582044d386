#include "color.h"

#include <algorithm>
#include <cmath>

#include "errors.h"

namespace uie {

namespace {

constexpr double kDeg2Rad = M_PI / 180.0;

// D65 reference white; the sRGB matrix below maps (1,1,1) onto it so that
// white lands on L=100, a=b~0.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.00000;
constexpr double kZn = 1.08883;

double srgb_linearize(double u) {
  return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double eps = 216.0 / 24389.0;
  constexpr double kappa = 24389.0 / 27.0;
  return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

}  // namespace

LabColor srgb_to_lab(double r, double g, double b) {
  const double rl = srgb_linearize(r), gl = srgb_linearize(g), bl = srgb_linearize(b);
  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  const double fx = lab_f(x / kXn), fy = lab_f(y / kYn), fz = lab_f(z / kZn);
  return LabColor{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double ciede2000(const LabColor& p, const LabColor& q) {
  const double c1 = std::hypot(p.a, p.b);
  const double c2 = std::hypot(q.a, q.b);
  const double c_bar = 0.5 * (c1 + c2);
  const double c_bar7 = std::pow(c_bar, 7.0);
  constexpr double kPow25_7 = 6103515625.0;  // 25^7
  const double g = 0.5 * (1.0 - std::sqrt(c_bar7 / (c_bar7 + kPow25_7)));

  const double a1p = (1.0 + g) * p.a;
  const double a2p = (1.0 + g) * q.a;
  const double c1p = std::hypot(a1p, p.b);
  const double c2p = std::hypot(a2p, q.b);

  auto hue_deg = [](double a, double b) {
    if (a == 0.0 && b == 0.0) return 0.0;
    double h = std::atan2(b, a) / kDeg2Rad;
    return h < 0.0 ? h + 360.0 : h;
  };
  const double h1p = hue_deg(a1p, p.b);
  const double h2p = hue_deg(a2p, q.b);

  const double dlp = q.l - p.l;
  const double dcp = c2p - c1p;

  double dhp;
  if (c1p * c2p == 0.0) {
    dhp = 0.0;
  } else {
    dhp = h2p - h1p;
    if (dhp > 180.0)
      dhp -= 360.0;
    else if (dhp < -180.0)
      dhp += 360.0;
  }
  const double dHp = 2.0 * std::sqrt(c1p * c2p) * std::sin(0.5 * dhp * kDeg2Rad);

  const double l_bar = 0.5 * (p.l + q.l);
  const double cp_bar = 0.5 * (c1p + c2p);

  double hp_bar;
  if (c1p * c2p == 0.0) {
    hp_bar = h1p + h2p;
  } else if (std::abs(h1p - h2p) <= 180.0) {
    hp_bar = 0.5 * (h1p + h2p);
  } else if (h1p + h2p < 360.0) {
    hp_bar = 0.5 * (h1p + h2p + 360.0);
  } else {
    hp_bar = 0.5 * (h1p + h2p - 360.0);
  }

  const double t = 1.0 - 0.17 * std::cos((hp_bar - 30.0) * kDeg2Rad) +
                   0.24 * std::cos(2.0 * hp_bar * kDeg2Rad) +
                   0.32 * std::cos((3.0 * hp_bar + 6.0) * kDeg2Rad) -
                   0.20 * std::cos((4.0 * hp_bar - 63.0) * kDeg2Rad);

  const double dtheta = 30.0 * std::exp(-((hp_bar - 275.0) / 25.0) * ((hp_bar - 275.0) / 25.0));
  const double cp_bar7 = std::pow(cp_bar, 7.0);
  const double rc = 2.0 * std::sqrt(cp_bar7 / (cp_bar7 + kPow25_7));
  const double lm50 = (l_bar - 50.0) * (l_bar - 50.0);
  const double sl = 1.0 + 0.015 * lm50 / std::sqrt(20.0 + lm50);
  const double sc = 1.0 + 0.045 * cp_bar;
  const double sh = 1.0 + 0.015 * cp_bar * t;
  const double rt = -std::sin(2.0 * dtheta * kDeg2Rad) * rc;

  const double tl = dlp / sl;
  const double tc = dcp / sc;
  const double th = dHp / sh;
  return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

DeltaEResult delta_e_detailed(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("delta_e: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  if (a.ndim() != 3 || a.dim(0) != 3)
    throw ShapeError("delta_e: expected 3xHxW sRGB images, got " + a.shape_str());
  const int h = a.dim(1), w = a.dim(2);
  DeltaEResult res;
  double acc = 0.0;
  auto clamp01_count = [&res](double v) {
    if (v < 0.0 || v > 1.0) {
      ++res.clamped;
      return std::clamp(v, 0.0, 1.0);
    }
    return v;
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const LabColor la = srgb_to_lab(clamp01_count(a.at(0, y, x)), clamp01_count(a.at(1, y, x)),
                                      clamp01_count(a.at(2, y, x)));
      const LabColor lb = srgb_to_lab(clamp01_count(b.at(0, y, x)), clamp01_count(b.at(1, y, x)),
                                      clamp01_count(b.at(2, y, x)));
      acc += ciede2000(la, lb);
    }
  res.mean = acc / (static_cast<double>(h) * w);
  return res;
}

double delta_e(const Tensor& a, const Tensor& b) { return delta_e_detailed(a, b).mean; }

}  // namespace uie
