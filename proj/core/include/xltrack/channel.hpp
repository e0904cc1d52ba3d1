#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "xltrack/geometry.hpp"
#include "xltrack/rng.hpp"

namespace xltrack {

using cxd = std::complex<double>;

// Multipath environment around one trajectory: one line-of-sight gain plus
// one (position, gain) pair per scatterer.
struct ScattererSet {
  std::vector<Position3D> positions;
  std::vector<cxd> gains;
  cxd los_gain{1.0, 0.0};

  std::size_t size() const { return positions.size(); }
  void validate() const;  // |positions| == |gains|

  // Scatterers uniform in the workspace box; gains circularly-symmetric
  // Gaussian with per-scatterer power = los_power * power_ratio.
  static ScattererSet random(int n_scatterers, double bx, double by, double bz,
                             double los_power, double power_ratio, Rng& rng);
};

// RIS phase configuration omega; entries constrained to unit modulus.
struct PhaseProfile {
  std::vector<cxd> omega;

  void validate(double tol = 1e-9) const;
  static PhaseProfile ones(int n);
  static PhaseProfile random(int n, Rng& rng);  // uniform phases on the circle
};

enum class SignalRole { BsY, RisYr, ReconYr };

// A complex sample vector tagged with what it is: the BS observation y, the
// RIS-side signal y_r, or a reconstruction of y_r.
struct ComplexSignal {
  std::vector<cxd> samples;
  SignalRole role = SignalRole::BsY;
};

// Dense row-major complex matrix, sized M x N for the BS-RIS channel.
struct ComplexMatrix {
  int rows = 0, cols = 0;
  std::vector<cxd> data;

  ComplexMatrix() = default;
  ComplexMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}
  cxd& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  const cxd& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Near-field line-of-sight steering vector of the RIS for a source at p:
// entry n = exp(-j*(2*pi/lambda)*(|p - p_n| - |p - p_ris|)).
std::vector<cxd> los_steering(const Position3D& p, const ScenarioGeometry& geom);

// Scattered-path steering vector via scatterer q:
// entry n = exp(-j*(2*pi/lambda)*(|p - p_n| + |q - p_n| + |p - q| - |p - p_ris|)).
std::vector<cxd> nlos_steering(const Position3D& p, const Position3D& q,
                               const ScenarioGeometry& geom);

// Full MU-RIS channel h(p) = alpha*a(p) + sum_ms alpha_ms*a_ms(p).
std::vector<cxd> mu_ris_channel(const Position3D& p, const ScattererSet& scat,
                                const ScenarioGeometry& geom);

// Static BS-RIS line-of-sight channel H with H(m,n) = beta*exp(+j*(2*pi/lambda)*r_mn),
// r_mn the BS-antenna-to-RIS-element distance.
ComplexMatrix bs_ris_channel(const ScenarioGeometry& geom, cxd beta);

// Raised when the MU sits outside the radiating near-field band of the RIS.
// Carried as data on the result, not thrown: the sample is still valid, the
// propagation model is just being used outside its nominal region.
struct FresnelWarning {
  double distance = 0.0;
  FresnelBounds bounds;
};

struct UplinkOptions {
  cxd beta{1.0, 0.0};
  // Model thermal noise on the RIS side as well (off by default: y_r is the
  // clean reference signal the reconstruction stage is trained against).
  bool ris_noise = false;
  double ris_noise_variance = 0.0;
};

struct UplinkResult {
  ComplexSignal y_r;  // length N
  ComplexSignal y;    // length M
  std::optional<FresnelWarning> fresnel;
};

// One uplink pilot slot: y_r = h(p)*s (noiseless), y = H*diag(omega)*h(p)*s + n
// with n ~ CN(0, noise_variance*I). Deterministic given the generator state.
UplinkResult simulate_uplink(const Position3D& p, const ScattererSet& scat,
                             const ScenarioGeometry& geom,
                             const PhaseProfile& omega, cxd pilot,
                             double noise_variance, Rng& rng,
                             const UplinkOptions& opts = {});

// Same slot with a precomputed H (the channel is static per geometry, so
// callers generating many records should reuse it).
UplinkResult simulate_uplink(const Position3D& p, const ScattererSet& scat,
                             const ScenarioGeometry& geom,
                             const PhaseProfile& omega, cxd pilot,
                             double noise_variance, Rng& rng,
                             const ComplexMatrix& bs_ris,
                             const UplinkOptions& opts);

// Pilot amplitude for a transmit power in dBm: |s|^2 in watts, s real positive.
cxd pilot_from_dbm(double power_dbm);

}  // namespace xltrack
