#include "image_ops.h"

#include <algorithm>
#include <cmath>

#include "errors.h"

namespace uie {

namespace {
void require_chw(const Tensor& img, const char* op) {
  if (img.ndim() != 3) throw ShapeError(std::string(op) + ": expected CHW image, got " + img.shape_str());
}
}  // namespace

Tensor resize_bilinear(const Tensor& img, int out_h, int out_w) {
  require_chw(img, "resize");
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  if (out_h < 1 || out_w < 1) throw ShapeError("resize: target dims must be positive");
  Tensor out({c, out_h, out_w});
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    // half-pixel centers
    double fy = (oy + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < c; ++ch) {
        const double top = img.at(ch, y0, x0) * (1 - wx) + img.at(ch, y0, x1) * wx;
        const double bot = img.at(ch, y1, x0) * (1 - wx) + img.at(ch, y1, x1) * wx;
        out.at(ch, oy, ox) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

Tensor flip_h(const Tensor& img) {
  require_chw(img, "flip_h");
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(ch, y, x) = img.at(ch, y, w - 1 - x);
  return out;
}

Tensor flip_v(const Tensor& img) {
  require_chw(img, "flip_v");
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  Tensor out({c, h, w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(ch, y, x) = img.at(ch, h - 1 - y, x);
  return out;
}

Tensor rot90(const Tensor& img, int quarter_turns) {
  require_chw(img, "rot90");
  int k = ((quarter_turns % 4) + 4) % 4;
  Tensor cur = img;
  for (int i = 0; i < k; ++i) {
    const int c = cur.dim(0), h = cur.dim(1), w = cur.dim(2);
    Tensor out({c, w, h});
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(ch, w - 1 - x, y) = cur.at(ch, y, x);
    cur = std::move(out);
  }
  return cur;
}

Tensor transpose_hw(const Tensor& img) {
  require_chw(img, "transpose");
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  Tensor out({c, w, h});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(ch, x, y) = img.at(ch, y, x);
  return out;
}

Tensor crop(const Tensor& img, int y0, int x0, int h, int w) {
  require_chw(img, "crop");
  if (y0 < 0 || x0 < 0 || y0 + h > img.dim(1) || x0 + w > img.dim(2))
    throw ShapeError("crop: window out of bounds for " + img.shape_str());
  Tensor out({img.dim(0), h, w});
  for (int ch = 0; ch < img.dim(0); ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(ch, y, x) = img.at(ch, y0 + y, x0 + x);
  return out;
}

Tensor reflect_pad_to(const Tensor& img, int out_h, int out_w) {
  require_chw(img, "reflect_pad");
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  const int ph = out_h - h, pw = out_w - w;
  if (ph < 0 || pw < 0) throw ShapeError("reflect_pad: target smaller than input");
  if (ph >= h || pw >= w)
    throw ShapeError("reflect_pad: input " + img.shape_str() + " too small to pad to " +
                     std::to_string(out_h) + "x" + std::to_string(out_w));
  Tensor out({c, out_h, out_w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < out_h; ++y) {
      const int sy = y < h ? y : 2 * h - 2 - y;
      for (int x = 0; x < out_w; ++x) {
        const int sx = x < w ? x : 2 * w - 2 - x;
        out.at(ch, y, x) = img.at(ch, sy, sx);
      }
    }
  return out;
}

Tensor clamp01(const Tensor& img) {
  Tensor out = img;
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
  return out;
}

}  // namespace uie
