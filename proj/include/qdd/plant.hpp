#pragma once

// Plant models: the compliant belt-driven end-effector, the position-servoed
// rigid arm, the unilateral tissue contact and the actuated platform.
//
// Axis convention: positions are measured along the probe's approach axis.
// Probe positions are extensions from the fully retracted pose (positive
// toward the tissue). Platform displacement is positive toward the device.
// The tissue surface therefore sits at extension
// surface_rest_position - platform_position.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kinematics.hpp"

namespace qdd {

struct ActuatorModel {
  double rated_torque{3.0};
  double backdrive_friction_torque{0.2};
  double reflected_inertia{1.0e-3};
  double viscous_damping{1.2};  // lumped drive, belt and slide damping
  // Velocity scale of the tanh-smoothed Coulomb friction.
  double friction_velocity_scale{1e-3};

  void validate() const {
    if (!(rated_torque > 0)) throw std::invalid_argument("ActuatorModel: rated_torque must be > 0");
    if (!(backdrive_friction_torque >= 0 && backdrive_friction_torque < rated_torque)) {
      throw std::invalid_argument("ActuatorModel: need 0 <= backdrive_friction_torque < rated_torque");
    }
    if (!(reflected_inertia > 0)) throw std::invalid_argument("ActuatorModel: reflected_inertia must be > 0");
    if (!(viscous_damping >= 0)) throw std::invalid_argument("ActuatorModel: viscous_damping must be >= 0");
    if (!(friction_velocity_scale > 0)) throw std::invalid_argument("ActuatorModel: friction_velocity_scale must be > 0");
  }
};

struct CarriageModel {
  double moving_mass{0.25};
  double travel_limit{0.052};
  TransmissionGeometry geometry{};

  void validate() const {
    if (!(moving_mass > 0)) throw std::invalid_argument("CarriageModel: moving_mass must be > 0");
    if (!(travel_limit > 0)) throw std::invalid_argument("CarriageModel: travel_limit must be > 0");
    geometry.validate();
  }

  double effective_inertia(const ActuatorModel& a) const {
    const double r = geometry.pulley_radius;
    return a.reflected_inertia + moving_mass * r * r;
  }
  double max_angle() const { return travel_limit / geometry.pulley_radius; }
};

struct TissueModel {
  double stiffness{2000.0};
  double damping{10.0};
  double surface_rest_position{0.026};

  void validate() const {
    if (!(stiffness > 0)) throw std::invalid_argument("TissueModel: stiffness must be > 0");
    if (!(damping >= 0)) throw std::invalid_argument("TissueModel: damping must be >= 0");
  }

  static TissueModel phantom() { return {2000.0, 10.0, 0.026}; }
  static TissueModel porcine() { return {1500.0, 20.0, 0.026}; }
};

// ---------------------------------------------------------------------------
// Platform motion

struct StaticMotion {};

struct BreathingMotion {
  double amplitude{0.0099};
  double frequency{14.6 / 60.0};
};

// Raised half-sine up over `rise`, half-sine back down over `fall`.
struct SuddenPulse {
  double amplitude{0.020};
  double rise{0.25};
  double fall{0.25};
  double onset{1.0};
};

struct MotionProfile;

struct CompositeMotion {
  std::vector<MotionProfile> parts;
};

struct MotionProfile {
  std::variant<StaticMotion, BreathingMotion, SuddenPulse, CompositeMotion> shape{StaticMotion{}};

  static MotionProfile still() { return {StaticMotion{}}; }
  static MotionProfile breathing(double amplitude = 0.0099, double frequency = 14.6 / 60.0) {
    return {BreathingMotion{amplitude, frequency}};
  }
  static MotionProfile pulse(double amplitude = 0.020, double rise = 0.25, double fall = 0.25,
                             double onset = 1.0) {
    return {SuddenPulse{amplitude, rise, fall, onset}};
  }

  void validate() const;
};

struct PlatformKinematics {
  double position{0};
  double velocity{0};
};

namespace detail {
struct MotionValidator {
  void operator()(const StaticMotion&) const {}
  void operator()(const BreathingMotion& b) const {
    if (!(b.amplitude >= 0) || !(b.frequency > 0)) {
      throw std::invalid_argument("BreathingMotion: need amplitude >= 0, frequency > 0");
    }
  }
  void operator()(const SuddenPulse& p) const {
    if (!(p.amplitude >= 0) || !(p.rise > 0) || !(p.fall > 0) || !(p.onset >= 0)) {
      throw std::invalid_argument("SuddenPulse: need amplitude >= 0, rise > 0, fall > 0, onset >= 0");
    }
  }
  void operator()(const CompositeMotion& c) const {
    for (const auto& p : c.parts) p.validate();
  }
};
}  // namespace detail

inline void MotionProfile::validate() const { std::visit(detail::MotionValidator{}, shape); }

inline PlatformKinematics platform_motion(const MotionProfile& profile, double t) {
  using std::numbers::pi;
  struct Eval {
    double t;
    PlatformKinematics operator()(const StaticMotion&) const { return {}; }
    PlatformKinematics operator()(const BreathingMotion& b) const {
      const double w = 2 * pi * b.frequency;
      return {b.amplitude * std::sin(w * t), b.amplitude * w * std::cos(w * t)};
    }
    PlatformKinematics operator()(const SuddenPulse& p) const {
      const double up = t - p.onset;
      if (up < 0) return {};
      if (up < p.rise) {
        const double w = pi / p.rise;
        return {0.5 * p.amplitude * (1 - std::cos(w * up)), 0.5 * p.amplitude * w * std::sin(w * up)};
      }
      const double down = up - p.rise;
      if (down < p.fall) {
        const double w = pi / p.fall;
        return {0.5 * p.amplitude * (1 + std::cos(w * down)),
                -0.5 * p.amplitude * w * std::sin(w * down)};
      }
      return {};
    }
    PlatformKinematics operator()(const CompositeMotion& c) const {
      PlatformKinematics sum;
      for (const auto& part : c.parts) {
        const auto k = platform_motion(part, t);
        sum.position += k.position;
        sum.velocity += k.velocity;
      }
      return sum;
    }
  };
  return std::visit(Eval{t}, profile.shape);
}

// ---------------------------------------------------------------------------
// Contact

// Unilateral Kelvin-Voigt contact. Positions are heights along the contact
// normal pointing out of the tissue, so penetration = surface - probe.
inline double contact_force(const TissueModel& tissue, double probe_pos, double probe_vel,
                            double surface_pos, double surface_vel) {
  const double penetration = surface_pos - probe_pos;
  if (!(penetration > 0)) return 0.0;
  const double rate = surface_vel - probe_vel;
  return std::max(0.0, tissue.stiffness * penetration + tissue.damping * rate);
}

// Same law expressed with probe extension and platform displacement.
inline double contact_force_at(const TissueModel& tissue, double extension,
                               double extension_rate, const PlatformKinematics& platform) {
  return contact_force(tissue, -extension, -extension_rate,
                       platform.position - tissue.surface_rest_position, platform.velocity);
}

// ---------------------------------------------------------------------------
// State

struct ArmServoModel {
  double command_rate{125.0};
  double velocity_limit{0.25};
  double acceleration_limit{2.5};
  double tracking_time_constant{0.05};
  double effective_end_mass{0.5};
  double structural_stiffness{5e4};
  double structural_damping_ratio{0.3};

  void validate() const {
    if (!(command_rate > 0) || !(velocity_limit > 0) || !(acceleration_limit > 0) ||
        !(tracking_time_constant > 0) || !(effective_end_mass > 0) ||
        !(structural_stiffness > 0) || !(structural_damping_ratio >= 0)) {
      throw std::invalid_argument("ArmServoModel: parameters must be positive");
    }
  }
  double structural_damping() const {
    return 2 * structural_damping_ratio * std::sqrt(structural_stiffness * effective_end_mass);
  }
};

// Servo-side quantities only meaningful for the arm plant.
struct ArmServoState {
  double flange_position{0};
  double flange_velocity{0};
  double latched_command{0};
  long long latch_index{-1};
};

struct PlantState {
  double theta{0};
  double omega{0};
  double probe_position{0};
  double probe_velocity{0};
  double platform_position{0};
  double platform_velocity{0};
  double contact_force{0};
  double time{0};
  ArmServoState servo{};

  bool finite() const {
    return std::isfinite(theta) && std::isfinite(omega) && std::isfinite(probe_position) &&
           std::isfinite(probe_velocity) && std::isfinite(contact_force) &&
           std::isfinite(servo.flange_position) && std::isfinite(servo.flange_velocity) &&
           std::isfinite(servo.latched_command);
  }
};

class PlantDivergence : public std::runtime_error {
 public:
  PlantDivergence(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// Friction torque opposing rotation.
inline double friction_torque(const ActuatorModel& a, double omega) {
  return -a.backdrive_friction_torque * std::tanh(omega / a.friction_velocity_scale);
}

// Initial state with the probe resting on the tissue surface at rest, no load.
inline PlantState end_effector_touching(const CarriageModel& carriage, const TissueModel& tissue,
                                        double preload_penetration = 0.0) {
  PlantState s;
  s.probe_position = std::clamp(tissue.surface_rest_position + preload_penetration, 0.0,
                                carriage.travel_limit);
  s.theta = s.probe_position / carriage.geometry.pulley_radius;
  s.contact_force = contact_force_at(tissue, s.probe_position, 0, {});
  return s;
}

inline PlantState arm_touching(const TissueModel& tissue) {
  PlantState s;
  s.probe_position = tissue.surface_rest_position;
  s.servo.flange_position = s.probe_position;
  s.servo.latched_command = s.probe_position;
  return s;
}

namespace detail {
// Solves J*(w - w0)/dt - friction(w) + b*w = drive for w. The left side is
// strictly increasing in w, so bracketing bisection always converges.
inline double implicit_velocity(const ActuatorModel& a, double inertia, double w0, double drive,
                                double dt) {
  const double m = inertia / dt;
  auto g = [&](double w) {
    return m * (w - w0) + a.backdrive_friction_torque * std::tanh(w / a.friction_velocity_scale) +
           a.viscous_damping * w - drive;
  };
  // Bounds: friction is bounded by the backdrive torque.
  const double slack = a.backdrive_friction_torque / m;
  const double centre = (m * w0 + drive) / (m + a.viscous_damping);
  double lo = centre - slack - 1e-12;
  double hi = centre + slack + 1e-12;
  // Newton with bisection safeguard.
  double w = std::clamp(w0, lo, hi);
  for (int it = 0; it < 100; ++it) {
    const double gw = g(w);
    if (gw == 0) return w;
    if (gw > 0) hi = w; else lo = w;
    const double th = std::tanh(w / a.friction_velocity_scale);
    const double dg = m + a.viscous_damping +
                      a.backdrive_friction_torque * (1 - th * th) / a.friction_velocity_scale;
    double next = w - gw / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - w) <= 1e-15 * (1 + std::abs(w))) return next;
    w = next;
  }
  return w;
}
}  // namespace detail

// One semi-implicit Euler step of the end-effector:
//   J_eff * dw/dt = tau_cmd + tau_fric(w) - b*w - r*F_contact + r*F_ext
// Friction and viscous damping are treated implicitly in the velocity update;
// position uses the updated velocity. `external_force` pushes the carriage
// along the extension axis (positive extends).
inline PlantState step_end_effector(const PlantState& state, const ActuatorModel& actuator,
                                    const CarriageModel& carriage, const TissueModel& tissue,
                                    double torque_cmd, const MotionProfile& profile, double dt,
                                    double external_force = 0.0) {
  if (!(dt > 0)) throw std::invalid_argument("step_end_effector: dt must be > 0");
  if (!state.finite() || !std::isfinite(torque_cmd) || !std::isfinite(external_force)) {
    throw PlantDivergence("step_end_effector: non-finite state or command", state.time);
  }
  const double r = carriage.geometry.pulley_radius;
  const double tau = std::clamp(torque_cmd, -actuator.rated_torque, actuator.rated_torque);
  const PlatformKinematics platform_now = platform_motion(profile, state.time);
  const double force_now =
      contact_force_at(tissue, r * state.theta, r * state.omega, platform_now);

  const double drive = tau - r * force_now + r * external_force;
  const double inertia = carriage.effective_inertia(actuator);
  double omega = detail::implicit_velocity(actuator, inertia, state.omega, drive, dt);
  double theta = state.theta + omega * dt;

  const double theta_max = carriage.max_angle();
  if (theta <= 0) {
    theta = 0;
    omega = 0;
  } else if (theta >= theta_max) {
    theta = theta_max;
    omega = 0;
  }

  PlantState next = state;
  next.time = state.time + dt;
  next.theta = theta;
  next.omega = omega;
  next.probe_position = belt_displacement(carriage.geometry, theta);
  next.probe_velocity = r * omega;
  const PlatformKinematics platform = platform_motion(profile, next.time);
  next.platform_position = platform.position;
  next.platform_velocity = platform.velocity;
  next.contact_force = contact_force_at(tissue, next.probe_position, next.probe_velocity, platform);
  if (!next.finite()) {
    throw PlantDivergence("step_end_effector: state diverged", next.time);
  }
  return next;
}

// One step of the arm plant. The servo latches `position_cmd` once per
// command period, drives the flange toward it through a first-order lag
// limited in velocity and acceleration, and the rigid probe tip (mass on the
// structural spring) meets the tissue.
inline PlantState step_arm(const PlantState& state, const ArmServoModel& servo,
                           const TissueModel& tissue, double position_cmd,
                           const MotionProfile& profile, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("step_arm: dt must be > 0");
  if (!state.finite() || !std::isfinite(position_cmd)) {
    throw PlantDivergence("step_arm: non-finite state or command", state.time);
  }
  PlantState next = state;
  ArmServoState& sv = next.servo;

  const auto latch = static_cast<long long>(std::floor(state.time * servo.command_rate + 1e-6));
  if (latch > sv.latch_index) {
    sv.latch_index = latch;
    sv.latched_command = position_cmd;
  }

  // Flange servo.
  double v_des = (sv.latched_command - sv.flange_position) / servo.tracking_time_constant;
  v_des = std::clamp(v_des, -servo.velocity_limit, servo.velocity_limit);
  const double dv_max = servo.acceleration_limit * dt;
  const double v = std::clamp(v_des, sv.flange_velocity - dv_max, sv.flange_velocity + dv_max);
  sv.flange_velocity = v;
  sv.flange_position += v * dt;

  // Tip on the structural spring.
  const PlatformKinematics platform_now = platform_motion(profile, state.time);
  const double force_now =
      contact_force_at(tissue, state.probe_position, state.probe_velocity, platform_now);
  const double spring = servo.structural_stiffness * (state.servo.flange_position - state.probe_position) +
                        servo.structural_damping() * (state.servo.flange_velocity - state.probe_velocity);
  const double accel = (spring - force_now) / servo.effective_end_mass;
  next.probe_velocity = state.probe_velocity + accel * dt;
  next.probe_position = state.probe_position + next.probe_velocity * dt;

  next.time = state.time + dt;
  const PlatformKinematics platform = platform_motion(profile, next.time);
  next.platform_position = platform.position;
  next.platform_velocity = platform.velocity;
  next.contact_force = contact_force_at(tissue, next.probe_position, next.probe_velocity, platform);
  if (!next.finite()) {
    throw PlantDivergence("step_arm: state diverged", next.time);
  }
  return next;
}

}  // namespace qdd
