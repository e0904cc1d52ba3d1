#include "xltrack/tensor.hpp"

#include <algorithm>

#include "xltrack/errors.hpp"

namespace xltrack::nn {

std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (const int d : shape) {
    if (d <= 0) {
      throw ShapeError("tensor shape " + shape_str(shape) +
                       " has a non-positive dimension");
    }
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  data.assign(static_cast<std::size_t>(shape_size(shape)), 0.0);
}

Tensor::Tensor(std::vector<int> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_size(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
}

Tensor Tensor::full(std::vector<int> s, double v) {
  Tensor t(std::move(s));
  t.fill(v);
  return t;
}

Tensor Tensor::from_vector(std::vector<double> d) {
  const int n = static_cast<int>(d.size());
  return Tensor({n}, std::move(d));
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(who) + ": shape mismatch " + shape_str(a.shape) +
                     " vs " + shape_str(b.shape));
  }
}

}  // namespace xltrack::nn
