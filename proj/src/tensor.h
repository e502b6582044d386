#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uie {

// Dense row-major tensor of doubles. Images and feature maps use CHW layout;
// matrices are {rows, cols}; scalars are {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double value);
  static Tensor from(std::vector<int> shape, std::vector<double> data);
  static Tensor scalar(double value) { return full({1}, value); }

  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // CHW accessor for 3-D tensors.
  double& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  // Matrix accessor for 2-D tensors.
  double& at(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
  double at(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

  void fill(double v);
  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace uie
