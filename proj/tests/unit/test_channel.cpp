#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "test_util.hpp"
#include "xltrack/channel.hpp"
#include "xltrack/errors.hpp"

using namespace xltrack;

namespace {

ScenarioGeometry paper_geometry() {
  const double lam = carrier_wavelength(28e9);
  return build_geometry(10, 10, 4, 4, lam / 2.0, {6, 0, 2}, {0, 5, 1.5}, Axis::Y,
                        Axis::X, lam);
}

}  // namespace

TEST_CASE("channel: line-of-sight steering matches the distance script") {
  const auto g = paper_geometry();
  const Position3D p{3.0, 4.0, 1.0};
  const auto a = los_steering(p, g);
  REQUIRE(a.size() == 100);
  const double k = 2.0 * std::numbers::pi / g.wavelength;
  const double d_ref = distance(p, g.ris_center);
  for (int n = 0; n < 100; ++n) {
    CHECK(std::abs(std::abs(a[n]) - 1.0) < 1e-12);
    const cxd expect = std::exp(cxd(0.0, -k * (distance(p, g.ris_elements[n]) - d_ref)));
    CHECK(std::abs(a[n] - expect) < 1e-10);
  }
}

TEST_CASE("channel: scattered-path steering matches the distance script") {
  const auto g = paper_geometry();
  const Position3D p{3.0, 4.0, 1.0};
  const Position3D q{7.0, 2.0, 2.5};
  const auto a = nlos_steering(p, q, g);
  REQUIRE(a.size() == 100);
  const double k = 2.0 * std::numbers::pi / g.wavelength;
  const double d_ref = distance(p, g.ris_center);
  for (int n = 0; n < 100; ++n) {
    CHECK(std::abs(std::abs(a[n]) - 1.0) < 1e-12);
    const double script = distance(p, g.ris_elements[n]) + distance(q, g.ris_elements[n]) +
                          distance(p, q) - d_ref;
    const cxd expect = std::exp(cxd(0.0, -k * script));
    CHECK(std::abs(a[n] - expect) < 1e-10);
  }
}

TEST_CASE("channel: multipath channel is the gain-weighted steering sum") {
  const auto g = paper_geometry();
  const Position3D p{2.0, 6.0, 1.2};
  Rng rng(17);
  const auto scat = ScattererSet::random(3, 10.0, 10.0, 3.0, 1.0, 0.1, rng);
  REQUIRE(scat.size() == 3);
  scat.validate();
  const auto h = mu_ris_channel(p, scat, g);
  auto expect = los_steering(p, g);
  for (auto& v : expect) v *= scat.los_gain;
  for (std::size_t ms = 0; ms < scat.size(); ++ms) {
    const auto ams = nlos_steering(p, scat.positions[ms], g);
    for (std::size_t n = 0; n < expect.size(); ++n) expect[n] += scat.gains[ms] * ams[n];
  }
  CHECK(testutil::max_cdiff(h, expect) < 1e-10);
}

TEST_CASE("channel: static BS-RIS channel uses a positive phase exponent") {
  const auto g = paper_geometry();
  const cxd beta{0.5, 0.25};
  const auto H = bs_ris_channel(g, beta);
  REQUIRE(H.rows == 16);
  REQUIRE(H.cols == 100);
  const double k = 2.0 * std::numbers::pi / g.wavelength;
  for (int m = 0; m < 16; m += 5) {
    for (int n = 0; n < 100; n += 13) {
      const double r = distance(g.bs_antennas[m], g.ris_elements[n]);
      const cxd expect = beta * std::exp(cxd(0.0, +k * r));
      CHECK(std::abs(H.at(m, n) - expect) < 1e-10);
    }
  }
}

TEST_CASE("channel: noiseless uplink satisfies y = H diag(omega) y_r") {
  const auto g = paper_geometry();
  Rng rng(5);
  const auto scat = ScattererSet::random(9, 10.0, 10.0, 3.0, 1.0, 0.1, rng);
  const auto omega = PhaseProfile::random(g.n(), rng);
  omega.validate();
  const Position3D p{3.0, 4.0, 1.0};
  const cxd s = pilot_from_dbm(30.0);

  Rng noise_rng(99);
  const auto res = simulate_uplink(p, scat, g, omega, s, 0.0, noise_rng);
  REQUIRE(static_cast<int>(res.y_r.samples.size()) == g.n());
  REQUIRE(static_cast<int>(res.y.samples.size()) == g.m());
  CHECK(res.y_r.role == SignalRole::RisYr);
  CHECK(res.y.role == SignalRole::BsY);

  // y_r is the channel times the pilot.
  const auto h = mu_ris_channel(p, scat, g);
  std::vector<cxd> yr_expect(h.size());
  for (std::size_t n = 0; n < h.size(); ++n) yr_expect[n] = h[n] * s;
  CHECK(testutil::max_cdiff(res.y_r.samples, yr_expect) < 1e-10);

  // Chain identity at the BS side.
  const auto H = bs_ris_channel(g, cxd{1.0, 0.0});
  std::vector<cxd> y_expect(static_cast<std::size_t>(g.m()), cxd{0.0, 0.0});
  for (int m = 0; m < g.m(); ++m) {
    for (int n = 0; n < g.n(); ++n) {
      y_expect[m] += H.at(m, n) * omega.omega[n] * res.y_r.samples[n];
    }
  }
  CHECK(testutil::max_cdiff(res.y.samples, y_expect) < 1e-9);
}

TEST_CASE("channel: uplink noise is reproducible and has the stated power") {
  const auto g = paper_geometry();
  Rng rng(5);
  const auto scat = ScattererSet::random(9, 10.0, 10.0, 3.0, 1.0, 0.1, rng);
  const auto omega = PhaseProfile::ones(g.n());
  const Position3D p{3.0, 4.0, 1.0};
  const double noise_var = 0.37;

  Rng r1(123), r2(123);
  const auto a = simulate_uplink(p, scat, g, omega, {1.0, 0.0}, noise_var, r1);
  const auto b = simulate_uplink(p, scat, g, omega, {1.0, 0.0}, noise_var, r2);
  CHECK(testutil::max_cdiff(a.y.samples, b.y.samples) == 0.0);

  Rng clean_rng(1);
  const auto clean = simulate_uplink(p, scat, g, omega, {1.0, 0.0}, 0.0, clean_rng);
  Rng noisy_rng(77);
  double acc = 0.0;
  const int reps = 400;
  for (int i = 0; i < reps; ++i) {
    const auto res = simulate_uplink(p, scat, g, omega, {1.0, 0.0}, noise_var, noisy_rng);
    for (int m = 0; m < g.m(); ++m) acc += std::norm(res.y.samples[m] - clean.y.samples[m]);
  }
  const double measured = acc / (reps * g.m());
  CHECK(measured == doctest::Approx(noise_var).epsilon(0.05));
}

TEST_CASE("channel: precomputed BS-RIS matrix gives identical slots") {
  const auto g = paper_geometry();
  Rng rng(5);
  const auto scat = ScattererSet::random(4, 10.0, 10.0, 3.0, 1.0, 0.1, rng);
  const auto omega = PhaseProfile::ones(g.n());
  const Position3D p{1.5, 2.5, 2.0};
  const auto H = bs_ris_channel(g, cxd{1.0, 0.0});
  Rng ra(55), rb(55);
  const auto direct = simulate_uplink(p, scat, g, omega, {1.0, 0.0}, 0.1, ra);
  const auto cached = simulate_uplink(p, scat, g, omega, {1.0, 0.0}, 0.1, rb, H, {});
  CHECK(testutil::max_cdiff(direct.y.samples, cached.y.samples) == 0.0);
  CHECK(testutil::max_cdiff(direct.y_r.samples, cached.y_r.samples) == 0.0);
}

TEST_CASE("channel: out-of-band geometry is flagged, not rejected") {
  const auto g = paper_geometry();
  Rng rng(5);
  const auto scat = ScattererSet::random(2, 10.0, 10.0, 3.0, 1.0, 0.1, rng);
  const auto omega = PhaseProfile::ones(g.n());
  const FresnelBounds fb = g.ris_fresnel();

  // Inside the radiating band: no warning.
  const double d_in = 0.5 * (fb.d_min + fb.d_max);
  const Position3D p_in = g.ris_center + Position3D{0.0, d_in, 0.0};
  Rng r1(1);
  const auto ok = simulate_uplink(p_in, scat, g, omega, {1.0, 0.0}, 0.0, r1);
  CHECK(!ok.fresnel.has_value());

  // Far beyond the band: warning carries the distance and the band.
  const Position3D p_far = g.ris_center + Position3D{0.0, 10.0 * fb.d_max, 0.0};
  Rng r2(1);
  const auto warned = simulate_uplink(p_far, scat, g, omega, {1.0, 0.0}, 0.0, r2);
  REQUIRE(warned.fresnel.has_value());
  CHECK(warned.fresnel->distance == doctest::Approx(10.0 * fb.d_max).epsilon(1e-9));
  CHECK(warned.fresnel->bounds.d_max == doctest::Approx(fb.d_max).epsilon(1e-12));
}

TEST_CASE("channel: pilot amplitude from transmit power") {
  CHECK(std::abs(pilot_from_dbm(30.0) - cxd{1.0, 0.0}) < 1e-15);
  CHECK(std::abs(pilot_from_dbm(0.0) - cxd{std::sqrt(1e-3), 0.0}) < 1e-15);
  CHECK(std::norm(pilot_from_dbm(10.0)) == doctest::Approx(1e-2).epsilon(1e-12));
}

TEST_CASE("channel: phase profiles hold unit modulus") {
  const auto ones = PhaseProfile::ones(16);
  ones.validate();
  for (const auto& w : ones.omega) CHECK(w == cxd{1.0, 0.0});

  Rng rng(2);
  const auto rand = PhaseProfile::random(16, rng);
  rand.validate();
  for (const auto& w : rand.omega) CHECK(std::abs(std::abs(w) - 1.0) < 1e-12);

  PhaseProfile bad;
  bad.omega = {cxd{0.5, 0.0}};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("channel: scatterer sets validate and stay in the box") {
  Rng rng(31);
  const auto s = ScattererSet::random(9, 10.0, 10.0, 3.0, 1.0, 0.1, rng);
  REQUIRE(s.positions.size() == 9);
  REQUIRE(s.gains.size() == 9);
  for (const auto& p : s.positions) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 10.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 10.0);
    CHECK(p.z >= 0.0);
    CHECK(p.z <= 3.0);
  }
  ScattererSet broken = s;
  broken.gains.pop_back();
  CHECK_THROWS_AS(broken.validate(), ShapeError);
}
