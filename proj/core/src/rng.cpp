#include "xltrack/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "xltrack/errors.hpp"

namespace xltrack {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller. u1 is shifted away from zero so log() stays finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::complex<double> Rng::complex_normal(double variance) {
  if (variance < 0.0) {
    throw DomainError("complex_normal: negative variance " +
                      std::to_string(variance));
  }
  const double s = std::sqrt(variance / 2.0);
  const double re = normal();  // draw order fixed: real part first
  const double im = normal();
  return {s * re, s * im};
}

std::array<double, 3> Rng::unit_vector3() {
  // Marsaglia rejection from the unit ball, then normalize.
  for (;;) {
    const double x = uniform(-1.0, 1.0);
    const double y = uniform(-1.0, 1.0);
    const double z = uniform(-1.0, 1.0);
    const double n2 = x * x + y * y + z * z;
    if (n2 > 1e-12 && n2 <= 1.0) {
      const double inv = 1.0 / std::sqrt(n2);
      return {x * inv, y * inv, z * inv};
    }
  }
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = next_u64() % i;
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index) {
  std::uint64_t h = splitmix64(master ^ fnv1a64(label));
  h = splitmix64(h + index * 0x9e3779b97f4a7c15ull);
  return h;
}

}  // namespace xltrack
