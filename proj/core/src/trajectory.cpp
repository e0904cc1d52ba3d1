#include "xltrack/trajectory.hpp"

#include <cmath>
#include <numbers>

#include "xltrack/errors.hpp"

namespace xltrack {

TrajectoryKind trajectory_kind_from_string(const std::string& s) {
  if (s == "random_walk") return TrajectoryKind::RandomWalk;
  if (s == "wave") return TrajectoryKind::Wave;
  if (s == "spiral") return TrajectoryKind::Spiral;
  throw DomainError("unknown trajectory kind '" + s + "'");
}

std::string trajectory_kind_to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::RandomWalk: return "random_walk";
    case TrajectoryKind::Wave: return "wave";
    default: return "spiral";
  }
}

void WorkspaceBounds::validate() const {
  if (x_max <= 0.0 || y_max <= 0.0 || z_max <= 0.0) {
    throw DomainError("WorkspaceBounds: extents must be positive, got (" +
                      std::to_string(x_max) + ", " + std::to_string(y_max) +
                      ", " + std::to_string(z_max) + ")");
  }
}

namespace {

void check_steps(int steps) {
  if (steps < 2) {
    throw DomainError("trajectory needs at least 2 steps, got " +
                      std::to_string(steps));
  }
}

double reflect_into(double v, double v_max) {
  if (v < 0.0) v = -v;
  if (v > v_max) v = 2.0 * v_max - v;
  // A unit step in a multi-meter box needs at most one reflection; clamp as a
  // last resort so the invariant "inside the box" cannot be violated.
  if (v < 0.0) v = 0.0;
  if (v > v_max) v = v_max;
  return v;
}

}  // namespace

Trajectory random_walk(const Position3D& start, int steps,
                       const WorkspaceBounds& bounds, Rng& rng) {
  bounds.validate();
  check_steps(steps);
  if (!bounds.contains(start)) {
    throw DomainError("random_walk: start (" + std::to_string(start.x) + ", " +
                      std::to_string(start.y) + ", " + std::to_string(start.z) +
                      ") outside workspace");
  }

  Trajectory t;
  t.kind = TrajectoryKind::RandomWalk;
  t.points.reserve(steps);
  t.points.push_back(start);
  for (int k = 1; k < steps; ++k) {
    const Position3D& prev = t.points.back();
    const double len = 1.0 - rng.uniform();  // uniform in (0, 1]
    Position3D next;
    bool placed = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const auto d = rng.unit_vector3();
      next = {prev.x + len * d[0], prev.y + len * d[1], prev.z + len * d[2]};
      if (bounds.contains(next)) {
        placed = true;
        break;
      }
    }
    if (!placed) {
      next = {reflect_into(next.x, bounds.x_max), reflect_into(next.y, bounds.y_max),
              reflect_into(next.z, bounds.z_max)};
    }
    t.points.push_back(next);
  }
  return t;
}

Trajectory wave(const Position3D& start, int steps, double amplitude,
                double wavelength_w, double span_x,
                const WorkspaceBounds& bounds) {
  bounds.validate();
  check_steps(steps);
  if (amplitude < 0.0) {
    throw DomainError("wave: amplitude must be >= 0, got " + std::to_string(amplitude));
  }
  if (wavelength_w <= 0.0) {
    throw DomainError("wave: wavelength must be positive, got " +
                      std::to_string(wavelength_w));
  }
  if (!bounds.contains(start)) {
    throw DomainError("wave: start outside workspace");
  }

  const double span = std::min(span_x, bounds.x_max - start.x);
  const double dx = span / (steps - 1);
  Trajectory t;
  t.kind = TrajectoryKind::Wave;
  t.points.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    const double x = start.x + k * dx;
    const double y =
        start.y + amplitude * std::sin(2.0 * std::numbers::pi * (x - start.x) / wavelength_w);
    const Position3D p{x, y, start.z};
    if (!bounds.contains(p)) {
      throw DomainError("wave: path exits workspace at step " + std::to_string(k));
    }
    t.points.push_back(p);
  }
  return t;
}

Trajectory spiral(const Position3D& start, int steps, double a, double b,
                  double dtheta, const WorkspaceBounds& bounds) {
  bounds.validate();
  check_steps(steps);
  if (a < 0.0) {
    throw DomainError("spiral: a must be >= 0, got " + std::to_string(a));
  }
  if (dtheta <= 0.0) {
    throw DomainError("spiral: dtheta must be positive, got " + std::to_string(dtheta));
  }
  if (!bounds.contains(start)) {
    throw DomainError("spiral: start outside workspace");
  }

  Trajectory t;
  t.kind = TrajectoryKind::Spiral;
  t.points.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    const double theta = k * dtheta;
    const double r = a + b * theta;
    const Position3D p{start.x + r * std::cos(theta), start.y + r * std::sin(theta),
                       start.z};
    if (!bounds.contains(p)) {
      throw DomainError("spiral: path exits workspace at step " + std::to_string(k));
    }
    t.points.push_back(p);
  }
  return t;
}

}  // namespace xltrack
