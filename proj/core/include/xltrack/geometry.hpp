#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace xltrack {

struct Position3D {
  double x = 0.0, y = 0.0, z = 0.0;

  Position3D operator+(const Position3D& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Position3D operator-(const Position3D& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Position3D operator*(double s) const { return {x * s, y * s, z * s}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double distance(const Position3D& a, const Position3D& b) {
  return (a - b).norm();
}

enum class Axis { X, Y, Z };

Axis axis_from_string(const std::string& s);
std::string axis_to_string(Axis a);

// Valid radiating-near-field (Fresnel) distance band for an aperture of
// maximal span `aperture` at wavelength `wavelength`:
//   0.62*sqrt(aperture^3/wavelength) <= d <= 2*aperture^2/wavelength.
struct FresnelBounds {
  double d_min = 0.0;
  double d_max = 0.0;
  bool contains(double d) const { return d >= d_min && d <= d_max; }
};

FresnelBounds fresnel_bounds(double aperture, double wavelength);

// Uniform planar grid of n1 x n2 points with the given spacing, centered at
// `center`, lying in the plane orthogonal to `normal`. Index (i1, i2) maps to
// flat index i1*n2 + i2; (0, 0) sits at the low-coordinate corner. For normals
// X and Y the second in-plane axis is Z, so i2 walks the vertical direction.
std::vector<Position3D> planar_grid(int n1, int n2, double spacing,
                                    const Position3D& center, Axis normal);

// Fixed geometry of one deployment: RIS panel (n1 x n2 elements) plus BS array
// (m1 x m2 antennas), both half-wavelength-spaced planar grids by default.
struct ScenarioGeometry {
  int n1 = 0, n2 = 0;  // RIS grid
  int m1 = 0, m2 = 0;  // BS grid
  double spacing = 0.0;
  double wavelength = 0.0;

  Position3D ris_center;
  Position3D bs_center;
  Axis ris_normal = Axis::Y;
  Axis bs_normal = Axis::X;

  std::vector<Position3D> ris_elements;  // size n()
  std::vector<Position3D> bs_antennas;   // size m()

  double ris_aperture = 0.0;  // max element-to-element span
  double bs_aperture = 0.0;

  int n() const { return n1 * n2; }
  int m() const { return m1 * m2; }
  FresnelBounds ris_fresnel() const { return fresnel_bounds(ris_aperture, wavelength); }
};

ScenarioGeometry build_geometry(int n1, int n2, int m1, int m2, double spacing,
                                const Position3D& ris_center,
                                const Position3D& bs_center,
                                Axis ris_normal, Axis bs_normal,
                                double wavelength);

// Free-space wavelength for a carrier frequency in Hz.
double carrier_wavelength(double frequency_hz);

}  // namespace xltrack
