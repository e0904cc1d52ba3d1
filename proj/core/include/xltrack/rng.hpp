#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace xltrack {

// Deterministic random source. All distribution transforms are written out
// explicitly (instead of std::uniform_real_distribution / std::normal_distribution,
// whose algorithms are implementation-defined) so that a given seed produces the
// same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; generates pairs and caches the spare.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Circularly-symmetric complex Gaussian with E[|z|^2] = variance.
  std::complex<double> complex_normal(double variance);

  // Uniform point in an axis-aligned box [0,bx] x [0,by] x [0,bz].
  std::array<double, 3> point_in_box(double bx, double by, double bz) {
    return {uniform(0.0, bx), uniform(0.0, by), uniform(0.0, bz)};
  }

  // Uniform direction on the unit sphere.
  std::array<double, 3> unit_vector3();

  // Fisher-Yates index permutation of {0, ..., n-1}.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable child-seed derivation: mixes the master seed with a label hash and an
// index through splitmix64 so that independent stages / records get streams
// that do not collide or correlate. Pure function of its arguments.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index = 0);

// FNV-1a 64-bit hash over a byte string; also used for config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace xltrack
