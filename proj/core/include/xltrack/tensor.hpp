#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xltrack::nn {

// Dense row-major real tensor; the unit of all neural computation.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor from_vector(std::vector<double> d);

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[i]; }

  double& operator[](std::int64_t i) { return data[i]; }
  double operator[](std::int64_t i) const { return data[i]; }

  void fill(double v);
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

std::int64_t shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// Throws ShapeError unless the two shapes match; `who` names the operation.
void check_same_shape(const Tensor& a, const Tensor& b, const char* who);

}  // namespace xltrack::nn
