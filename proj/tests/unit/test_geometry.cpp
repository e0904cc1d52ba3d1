#include <cmath>

#include "doctest.h"
#include "xltrack/errors.hpp"
#include "xltrack/geometry.hpp"

using namespace xltrack;

TEST_CASE("geometry: fresnel band for a 1 m aperture at 0.1 m wavelength") {
  const FresnelBounds b = fresnel_bounds(1.0, 0.1);
  CHECK(b.d_min == doctest::Approx(0.62 * std::sqrt(10.0)).epsilon(1e-12));
  CHECK(b.d_max == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(b.contains(5.0));
  CHECK(!b.contains(0.5));
  CHECK(!b.contains(25.0));
  CHECK_THROWS_AS(fresnel_bounds(0.0, 0.1), DomainError);
  CHECK_THROWS_AS(fresnel_bounds(1.0, -1.0), DomainError);
}

TEST_CASE("geometry: carrier wavelength at 28 GHz") {
  CHECK(carrier_wavelength(28e9) == 299792458.0 / 28e9);
  CHECK_THROWS_AS(carrier_wavelength(0.0), DomainError);
}

TEST_CASE("geometry: planar grid layout, normal along Y") {
  const Position3D c{6.0, 0.0, 2.0};
  const auto pts = planar_grid(2, 3, 0.5, c, Axis::Y);
  REQUIRE(pts.size() == 6);
  // In-plane axes are X (first index) and Z (second index); flat = i1*n2 + i2,
  // (0,0) at the low corner, grid centered on c.
  for (const auto& p : pts) CHECK(p.y == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(pts[0].x == doctest::Approx(6.0 - 0.25).epsilon(1e-12));
  CHECK(pts[0].z == doctest::Approx(2.0 - 0.5).epsilon(1e-12));
  CHECK(pts[5].x == doctest::Approx(6.0 + 0.25).epsilon(1e-12));
  CHECK(pts[5].z == doctest::Approx(2.0 + 0.5).epsilon(1e-12));
  // index 2 = (i1=0, i2=2): low x, high z
  CHECK(pts[2].x == doctest::Approx(6.0 - 0.25).epsilon(1e-12));
  CHECK(pts[2].z == doctest::Approx(2.0 + 0.5).epsilon(1e-12));
  // Mean of the grid recovers the center.
  Position3D mean{0, 0, 0};
  for (const auto& p : pts) mean = mean + p;
  mean = mean * (1.0 / 6.0);
  CHECK((mean - c).norm() < 1e-12);

  CHECK_THROWS_AS(planar_grid(0, 3, 0.5, c, Axis::Y), DomainError);
  CHECK_THROWS_AS(planar_grid(2, 3, 0.0, c, Axis::Y), DomainError);
}

TEST_CASE("geometry: planar grid layout, normal along X") {
  const Position3D c{0.0, 5.0, 1.5};
  const auto pts = planar_grid(2, 2, 1.0, c, Axis::X);
  REQUIRE(pts.size() == 4);
  for (const auto& p : pts) CHECK(p.x == doctest::Approx(0.0).epsilon(1e-15));
  // First in-plane axis is Y, second is Z.
  CHECK(pts[0].y == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(pts[0].z == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pts[1].y == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(pts[1].z == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(pts[2].y == doctest::Approx(5.5).epsilon(1e-12));
}

TEST_CASE("geometry: scenario assembly") {
  const double lam = carrier_wavelength(28e9);
  const auto g = build_geometry(10, 10, 4, 4, lam / 2.0, {6, 0, 2}, {0, 5, 1.5},
                                Axis::Y, Axis::X, lam);
  CHECK(g.n() == 100);
  CHECK(g.m() == 16);
  CHECK(g.ris_elements.size() == 100);
  CHECK(g.bs_antennas.size() == 16);
  CHECK(g.wavelength == lam);
  // Aperture is the grid diagonal.
  const double expect = (lam / 2.0) * std::sqrt(81.0 + 81.0);
  CHECK(g.ris_aperture == doctest::Approx(expect).epsilon(1e-12));
  const double bs_expect = (lam / 2.0) * std::sqrt(9.0 + 9.0);
  CHECK(g.bs_aperture == doctest::Approx(bs_expect).epsilon(1e-12));
  const FresnelBounds fb = g.ris_fresnel();
  CHECK(fb.d_min > 0.0);
  CHECK(fb.d_max > fb.d_min);

  CHECK_THROWS_AS(build_geometry(0, 10, 4, 4, lam / 2, {6, 0, 2}, {0, 5, 1.5},
                                 Axis::Y, Axis::X, lam),
                  DomainError);
  CHECK_THROWS_AS(build_geometry(10, 10, 4, 4, lam / 2, {6, 0, 2}, {0, 5, 1.5},
                                 Axis::Y, Axis::X, 0.0),
                  DomainError);
}

TEST_CASE("geometry: axis names round-trip") {
  CHECK(axis_from_string("x") == Axis::X);
  CHECK(axis_from_string("y") == Axis::Y);
  CHECK(axis_from_string("z") == Axis::Z);
  CHECK(axis_to_string(Axis::X) == "x");
  CHECK(axis_to_string(Axis::Y) == "y");
  CHECK(axis_to_string(Axis::Z) == "z");
  CHECK_THROWS_AS(axis_from_string("q"), DomainError);
}

TEST_CASE("geometry: position arithmetic") {
  const Position3D a{1, 2, 3}, b{4, 6, 3};
  CHECK(distance(a, b) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK((a + b).x == 5.0);
  CHECK((b - a).y == 4.0);
  CHECK((a * 2.0).z == 6.0);
  CHECK(Position3D{3, 4, 0}.norm() == doctest::Approx(5.0).epsilon(1e-15));
}
