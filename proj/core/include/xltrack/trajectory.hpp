#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xltrack/geometry.hpp"
#include "xltrack/rng.hpp"

namespace xltrack {

enum class TrajectoryKind { RandomWalk, Wave, Spiral };

TrajectoryKind trajectory_kind_from_string(const std::string& s);
std::string trajectory_kind_to_string(TrajectoryKind k);

// Axis-aligned workspace box anchored at the origin.
struct WorkspaceBounds {
  double x_max = 0.0, y_max = 0.0, z_max = 0.0;

  void validate() const;
  bool contains(const Position3D& p) const {
    return p.x >= 0.0 && p.x <= x_max && p.y >= 0.0 && p.y <= y_max &&
           p.z >= 0.0 && p.z <= z_max;
  }
};

// Ordered MU positions over consecutive time slots.
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::RandomWalk;
  std::vector<Position3D> points;
  std::uint64_t seed = 0;
};

// Random walk: per step, a uniform random 3D direction scaled by a length
// uniform in (0, 1]. A step that would leave the box keeps its length and
// re-draws the direction (up to 100 tries), then falls back to reflecting
// the violating coordinates back inside.
Trajectory random_walk(const Position3D& start, int steps,
                       const WorkspaceBounds& bounds, Rng& rng);

// Sinusoidal sweep: x advances in equal increments across `span_x` (clipped to
// the remaining room), y = y_start + amplitude*sin(2*pi*(x - x_start)/wavelength_w),
// z constant. Throws DomainError if the path exits the box; the caller re-draws
// the start point.
Trajectory wave(const Position3D& start, int steps, double amplitude,
                double wavelength_w, double span_x, const WorkspaceBounds& bounds);

// Archimedean spiral r = a + b*theta in the z = z_start plane: point k sits at
// offset (r_k*cos(theta_k), r_k*sin(theta_k)) from the start, theta_k = k*dtheta.
// Throws DomainError if the path exits the box.
Trajectory spiral(const Position3D& start, int steps, double a, double b,
                  double dtheta, const WorkspaceBounds& bounds);

}  // namespace xltrack
