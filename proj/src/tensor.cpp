#include "tensor.h"

#include <cmath>
#include <sstream>
#include <utility>

#include "errors.h"

namespace uie {

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  int64_t n = 1;
  for (int d : shape_) {
    if (d <= 0) throw ShapeError("tensor dimension must be positive, got " + std::to_string(d));
    n *= d;
  }
  data_.assign(static_cast<size_t>(n), 0.0);
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data) {
  Tensor t(std::move(shape));
  if (static_cast<int64_t>(data.size()) != t.size())
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + t.shape_str());
  t.data_ = std::move(data);
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
  os << "]";
  return os.str();
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace uie
