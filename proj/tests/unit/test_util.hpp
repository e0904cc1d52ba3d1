#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "xltrack/autograd.hpp"
#include "xltrack/layers.hpp"
#include "xltrack/rng.hpp"

namespace testutil {

// Self-deleting scratch directory under the system temp root.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag = "t") {
    static std::mt19937_64 eng{0x9e3779b97f4a7c15ull ^
                               static_cast<std::uint64_t>(::getpid())};
    path = std::filesystem::temp_directory_path() /
           ("xltrack_" + tag + "_" + std::to_string(eng()));
    std::filesystem::create_directories(path);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string str() const { return path.string(); }
};

inline double max_cdiff(const std::vector<std::complex<double>>& a,
                        const std::vector<std::complex<double>>& b) {
  if (a.size() != b.size()) return 1e300;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double max_rdiff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return 1e300;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Scalar loss = sum(w .* v) with fixed pseudo-random weights; unlike a plain
// sum this exposes per-element gradient mistakes that would otherwise cancel.
inline xltrack::nn::Variable weighted_sum(const xltrack::nn::Variable& v,
                                          std::uint64_t seed) {
  xltrack::Rng rng(seed);
  xltrack::nn::Tensor w(v.value().shape);
  for (std::int64_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
  return xltrack::nn::sum(xltrack::nn::mul(v, xltrack::nn::Variable(std::move(w))));
}

// Central finite differences against reverse-mode gradients for a scalar loss
// rebuilt from the given leaves on every call. `fn` must be deterministic and
// free of persistent side effects (fresh batch-norm stats, dropout rate 0 or
// eval mode, fixed-seed generators constructed inside).
inline double param_grad_check(const std::function<xltrack::nn::Variable()>& fn,
                               const std::vector<xltrack::nn::Parameter*>& params,
                               double eps = 1e-5) {
  using xltrack::nn::Tensor;
  using xltrack::nn::Variable;

  for (auto* p : params) p->zero_grad();
  Variable loss = fn();
  xltrack::nn::backward(loss);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad());

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& v = params[pi]->value();
    for (std::int64_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + eps;
      const double up = fn().value()[0];
      v[i] = keep - eps;
      const double dn = fn().value()[0];
      v[i] = keep;
      const double numeric = (up - dn) / (2.0 * eps);
      const double exact = analytic[pi][i];
      const double rel = std::abs(exact - numeric) /
                         std::max({std::abs(exact), std::abs(numeric), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace testutil
