#include "xltrack/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "xltrack/errors.hpp"

namespace xltrack {

namespace {

constexpr double kCoincidentTol = 1e-12;

void check_distinct(const Position3D& p, const std::vector<Position3D>& elems,
                    const char* who) {
  for (const auto& e : elems) {
    if (distance(p, e) < kCoincidentTol) {
      throw DomainError(std::string(who) +
                        ": source coincides with an array element at (" +
                        std::to_string(e.x) + ", " + std::to_string(e.y) +
                        ", " + std::to_string(e.z) + ")");
    }
  }
}

}  // namespace

void ScattererSet::validate() const {
  if (positions.size() != gains.size()) {
    throw ShapeError("ScattererSet: " + std::to_string(positions.size()) +
                     " positions vs " + std::to_string(gains.size()) + " gains");
  }
}

ScattererSet ScattererSet::random(int n_scatterers, double bx, double by,
                                  double bz, double los_power,
                                  double power_ratio, Rng& rng) {
  if (n_scatterers < 0) {
    throw DomainError("ScattererSet::random: negative scatterer count");
  }
  if (los_power < 0.0 || power_ratio < 0.0) {
    throw DomainError("ScattererSet::random: negative power");
  }
  ScattererSet s;
  s.los_gain = rng.complex_normal(los_power);
  s.positions.reserve(n_scatterers);
  s.gains.reserve(n_scatterers);
  for (int i = 0; i < n_scatterers; ++i) {
    const auto q = rng.point_in_box(bx, by, bz);
    s.positions.push_back({q[0], q[1], q[2]});
    s.gains.push_back(rng.complex_normal(los_power * power_ratio));
  }
  return s;
}

void PhaseProfile::validate(double tol) const {
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (std::abs(std::abs(omega[i]) - 1.0) > tol) {
      throw DomainError("PhaseProfile: entry " + std::to_string(i) +
                        " has modulus " + std::to_string(std::abs(omega[i])) +
                        ", expected 1");
    }
  }
}

PhaseProfile PhaseProfile::ones(int n) {
  PhaseProfile p;
  p.omega.assign(n, cxd{1.0, 0.0});
  return p;
}

PhaseProfile PhaseProfile::random(int n, Rng& rng) {
  PhaseProfile p;
  p.omega.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p.omega.push_back({std::cos(phi), std::sin(phi)});
  }
  return p;
}

std::vector<cxd> los_steering(const Position3D& p, const ScenarioGeometry& geom) {
  check_distinct(p, geom.ris_elements, "los_steering");
  const double k = 2.0 * std::numbers::pi / geom.wavelength;
  const double d_ref = distance(p, geom.ris_center);
  std::vector<cxd> a;
  a.reserve(geom.ris_elements.size());
  for (const auto& pn : geom.ris_elements) {
    const double phase = -k * (distance(p, pn) - d_ref);
    a.push_back({std::cos(phase), std::sin(phase)});
  }
  return a;
}

std::vector<cxd> nlos_steering(const Position3D& p, const Position3D& q,
                               const ScenarioGeometry& geom) {
  check_distinct(p, geom.ris_elements, "nlos_steering");
  check_distinct(q, geom.ris_elements, "nlos_steering");
  const double k = 2.0 * std::numbers::pi / geom.wavelength;
  const double d_ref = distance(p, geom.ris_center);
  const double d_pq = distance(p, q);
  std::vector<cxd> a;
  a.reserve(geom.ris_elements.size());
  for (const auto& pn : geom.ris_elements) {
    const double path = distance(p, pn) + distance(q, pn) + d_pq - d_ref;
    const double phase = -k * path;
    a.push_back({std::cos(phase), std::sin(phase)});
  }
  return a;
}

std::vector<cxd> mu_ris_channel(const Position3D& p, const ScattererSet& scat,
                                const ScenarioGeometry& geom) {
  scat.validate();
  std::vector<cxd> h = los_steering(p, geom);
  for (auto& v : h) v *= scat.los_gain;
  for (std::size_t s = 0; s < scat.size(); ++s) {
    const auto a_ms = nlos_steering(p, scat.positions[s], geom);
    for (std::size_t n = 0; n < h.size(); ++n) h[n] += scat.gains[s] * a_ms[n];
  }
  return h;
}

ComplexMatrix bs_ris_channel(const ScenarioGeometry& geom, cxd beta) {
  const double k = 2.0 * std::numbers::pi / geom.wavelength;
  ComplexMatrix H(geom.m(), geom.n());
  for (int m = 0; m < geom.m(); ++m) {
    for (int n = 0; n < geom.n(); ++n) {
      const double r = distance(geom.bs_antennas[m], geom.ris_elements[n]);
      const double phase = k * r;  // sign convention differs from the MU side
      H.at(m, n) = beta * cxd{std::cos(phase), std::sin(phase)};
    }
  }
  return H;
}

UplinkResult simulate_uplink(const Position3D& p, const ScattererSet& scat,
                             const ScenarioGeometry& geom,
                             const PhaseProfile& omega, cxd pilot,
                             double noise_variance, Rng& rng,
                             const UplinkOptions& opts) {
  const ComplexMatrix H = bs_ris_channel(geom, opts.beta);
  return simulate_uplink(p, scat, geom, omega, pilot, noise_variance, rng, H, opts);
}

UplinkResult simulate_uplink(const Position3D& p, const ScattererSet& scat,
                             const ScenarioGeometry& geom,
                             const PhaseProfile& omega, cxd pilot,
                             double noise_variance, Rng& rng,
                             const ComplexMatrix& bs_ris,
                             const UplinkOptions& opts) {
  if (noise_variance < 0.0) {
    throw DomainError("simulate_uplink: negative noise variance " +
                      std::to_string(noise_variance));
  }
  if (static_cast<int>(omega.omega.size()) != geom.n()) {
    throw ShapeError("simulate_uplink: phase profile length " +
                     std::to_string(omega.omega.size()) + " vs N = " +
                     std::to_string(geom.n()));
  }
  if (bs_ris.rows != geom.m() || bs_ris.cols != geom.n()) {
    throw ShapeError("simulate_uplink: BS-RIS channel is " +
                     std::to_string(bs_ris.rows) + "x" + std::to_string(bs_ris.cols) +
                     ", geometry wants " + std::to_string(geom.m()) + "x" +
                     std::to_string(geom.n()));
  }

  const std::vector<cxd> h = mu_ris_channel(p, scat, geom);

  UplinkResult out;
  out.y_r.role = SignalRole::RisYr;
  out.y_r.samples.resize(h.size());
  for (std::size_t n = 0; n < h.size(); ++n) out.y_r.samples[n] = h[n] * pilot;

  // y = H*diag(omega)*h*s + n; BS noise drawn first, antenna order, so y is
  // unaffected by whether RIS-side noise is also enabled.
  std::vector<cxd> w(h.size());
  for (std::size_t n = 0; n < h.size(); ++n) w[n] = omega.omega[n] * out.y_r.samples[n];

  out.y.role = SignalRole::BsY;
  out.y.samples.assign(geom.m(), cxd{0.0, 0.0});
  for (int m = 0; m < geom.m(); ++m) {
    cxd acc{0.0, 0.0};
    const cxd* row = &bs_ris.data[static_cast<std::size_t>(m) * bs_ris.cols];
    for (int n = 0; n < geom.n(); ++n) acc += row[n] * w[n];
    out.y.samples[m] = acc;
  }
  if (noise_variance > 0.0) {
    for (int m = 0; m < geom.m(); ++m) {
      out.y.samples[m] += rng.complex_normal(noise_variance);
    }
  }
  if (opts.ris_noise && opts.ris_noise_variance > 0.0) {
    for (auto& v : out.y_r.samples) v += rng.complex_normal(opts.ris_noise_variance);
  }

  const double d = distance(p, geom.ris_center);
  const FresnelBounds fb = geom.ris_fresnel();
  if (!fb.contains(d)) out.fresnel = FresnelWarning{d, fb};
  return out;
}

cxd pilot_from_dbm(double power_dbm) {
  const double watts = std::pow(10.0, (power_dbm - 30.0) / 10.0);
  return {std::sqrt(watts), 0.0};
}

}  // namespace xltrack
