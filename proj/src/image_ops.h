#pragma once

#include "tensor.h"

namespace uie {

// Plain CHW image manipulations (no gradient tracking).

Tensor resize_bilinear(const Tensor& img, int out_h, int out_w);
Tensor flip_h(const Tensor& img);
Tensor flip_v(const Tensor& img);
Tensor rot90(const Tensor& img, int quarter_turns);  // counter-clockwise
Tensor transpose_hw(const Tensor& img);
Tensor crop(const Tensor& img, int y0, int x0, int h, int w);
// Pads at the bottom/right edges by mirror reflection (no edge duplication).
Tensor reflect_pad_to(const Tensor& img, int out_h, int out_w);
Tensor clamp01(const Tensor& img);

}  // namespace uie
