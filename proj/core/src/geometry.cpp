#include "xltrack/geometry.hpp"

#include <algorithm>

#include "xltrack/errors.hpp"

namespace xltrack {

Axis axis_from_string(const std::string& s) {
  if (s == "x" || s == "X") return Axis::X;
  if (s == "y" || s == "Y") return Axis::Y;
  if (s == "z" || s == "Z") return Axis::Z;
  throw DomainError("axis_from_string: expected x, y or z, got '" + s + "'");
}

std::string axis_to_string(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    default: return "z";
  }
}

FresnelBounds fresnel_bounds(double aperture, double wavelength) {
  if (aperture <= 0.0) {
    throw DomainError("fresnel_bounds: aperture must be positive, got " +
                      std::to_string(aperture));
  }
  if (wavelength <= 0.0) {
    throw DomainError("fresnel_bounds: wavelength must be positive, got " +
                      std::to_string(wavelength));
  }
  FresnelBounds b;
  b.d_min = 0.62 * std::sqrt(aperture * aperture * aperture / wavelength);
  b.d_max = 2.0 * aperture * aperture / wavelength;
  return b;
}

std::vector<Position3D> planar_grid(int n1, int n2, double spacing,
                                    const Position3D& center, Axis normal) {
  if (n1 <= 0 || n2 <= 0) {
    throw DomainError("planar_grid: grid sides must be positive, got " +
                      std::to_string(n1) + " x " + std::to_string(n2));
  }
  if (spacing <= 0.0) {
    throw DomainError("planar_grid: spacing must be positive, got " +
                      std::to_string(spacing));
  }

  // In-plane unit axes for each normal; the second axis is vertical (Z)
  // whenever the panel stands upright.
  Position3D u1, u2;
  switch (normal) {
    case Axis::X: u1 = {0, 1, 0}; u2 = {0, 0, 1}; break;
    case Axis::Y: u1 = {1, 0, 0}; u2 = {0, 0, 1}; break;
    case Axis::Z: u1 = {1, 0, 0}; u2 = {0, 1, 0}; break;
  }

  std::vector<Position3D> pts;
  pts.reserve(static_cast<std::size_t>(n1) * n2);
  const double c1 = 0.5 * (n1 - 1);
  const double c2 = 0.5 * (n2 - 1);
  for (int i1 = 0; i1 < n1; ++i1) {
    for (int i2 = 0; i2 < n2; ++i2) {
      pts.push_back(center + u1 * (spacing * (i1 - c1)) + u2 * (spacing * (i2 - c2)));
    }
  }
  return pts;
}

namespace {
double max_span(const std::vector<Position3D>& pts) {
  // Planar rectangular grid: the diagonal between opposite corners is the
  // maximal span, but compute it generically to stay honest.
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      best = std::max(best, distance(pts[i], pts[j]));
    }
  }
  return best;
}
}  // namespace

ScenarioGeometry build_geometry(int n1, int n2, int m1, int m2, double spacing,
                                const Position3D& ris_center,
                                const Position3D& bs_center,
                                Axis ris_normal, Axis bs_normal,
                                double wavelength) {
  if (wavelength <= 0.0) {
    throw DomainError("build_geometry: wavelength must be positive, got " +
                      std::to_string(wavelength));
  }
  ScenarioGeometry g;
  g.n1 = n1;
  g.n2 = n2;
  g.m1 = m1;
  g.m2 = m2;
  g.spacing = spacing;
  g.wavelength = wavelength;
  g.ris_center = ris_center;
  g.bs_center = bs_center;
  g.ris_normal = ris_normal;
  g.bs_normal = bs_normal;
  g.ris_elements = planar_grid(n1, n2, spacing, ris_center, ris_normal);
  g.bs_antennas = planar_grid(m1, m2, spacing, bs_center, bs_normal);
  g.ris_aperture = (g.n() > 1) ? max_span(g.ris_elements) : spacing;
  g.bs_aperture = (g.m() > 1) ? max_span(g.bs_antennas) : spacing;
  return g;
}

double carrier_wavelength(double frequency_hz) {
  if (frequency_hz <= 0.0) {
    throw DomainError("carrier_wavelength: frequency must be positive, got " +
                      std::to_string(frequency_hz));
  }
  constexpr double kSpeedOfLight = 299792458.0;
  return kSpeedOfLight / frequency_hz;
}

}  // namespace xltrack
