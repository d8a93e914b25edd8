#pragma once

// Static relations of the belt transmission and the crank-slider baseline.
// All angles are radians. No travel clamping happens here; see plant.hpp.

#include <cmath>
#include <stdexcept>

namespace qdd {

struct TransmissionGeometry {
  double pulley_radius{0.04825};  // 96.5 mm pulley
  double crank_radius{0.04825};
  double rod_length{3 * 0.04825};

  void validate() const {
    if (!(pulley_radius > 0)) {
      throw std::invalid_argument("TransmissionGeometry: pulley_radius must be > 0");
    }
    if (!(crank_radius > 0) || !(rod_length > crank_radius)) {
      throw std::invalid_argument(
          "TransmissionGeometry: requires rod_length > crank_radius > 0");
    }
  }

  // Crank defaults track the pulley: r_crank = r, l = 3r.
  static TransmissionGeometry with_pulley(double radius) {
    return {radius, radius, 3 * radius};
  }
};

inline double belt_displacement(const TransmissionGeometry& g, double theta) {
  return g.pulley_radius * theta;
}

inline double belt_rate(const TransmissionGeometry& g) { return g.pulley_radius; }

namespace detail {
inline double crank_root(const TransmissionGeometry& g, double theta) {
  const double s = std::sin(theta);
  const double radicand =
      g.rod_length * g.rod_length - g.crank_radius * g.crank_radius * s * s;
  if (radicand < 0) {
    throw std::domain_error("crank-slider: l^2 - r^2 sin^2(theta) < 0");
  }
  return std::sqrt(radicand);
}
}  // namespace detail

inline double crank_displacement(const TransmissionGeometry& g, double theta) {
  const double r = g.crank_radius;
  return r * (1 - std::cos(theta)) + detail::crank_root(g, theta);
}

inline double crank_rate(const TransmissionGeometry& g, double theta) {
  const double r = g.crank_radius;
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const double root = detail::crank_root(g, theta);
  if (root == 0) {
    throw std::domain_error("crank-slider: singular configuration");
  }
  // d/dtheta of the root term carries a minus sign.
  return r * s - r * r * s * c / root;
}

/// Linear force at the carriage produced by a motor torque.
inline double force_from_torque(double torque, const TransmissionGeometry& g) {
  return torque / g.pulley_radius;
}

inline double torque_from_force(double force, const TransmissionGeometry& g) {
  return force * g.pulley_radius;
}

}  // namespace qdd
