#pragma once

#include <string>

#include "tensor.h"

namespace uie {

// Decodes a PNG or JPEG file into a 3xHxW tensor in [0,1]. Grayscale and
// alpha inputs are expanded/stripped to RGB. Throws IoError with the path.
Tensor read_image(const std::string& path);

// Writes an 8-bit RGB PNG; values are round(255*clamp(v,0,1)). Deterministic:
// the same tensor always produces byte-identical files.
void write_png(const std::string& path, const Tensor& img);

bool has_image_extension(const std::string& filename);

}  // namespace uie
