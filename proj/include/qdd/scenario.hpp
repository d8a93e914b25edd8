#pragma once

// Scenario description: which plant, which tissue, which platform motion,
// which controller, how long and at what loop rates.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "control.hpp"
#include "plant.hpp"

namespace qdd {

inline constexpr double kMaxRatedForce = 62.2;

struct LoopSchedule {
  double physics_dt{1e-4};
  double sensor_rate{100.0};
  double control_rate{100.0};
  double servo_rate{125.0};

  // Integer tick count for a loop rate; rejects periods that the physics step
  // cannot resolve to within one tick.
  long long ticks_for(double rate, const char* which) const {
    const double period = 1.0 / rate;
    const double ticks = period / physics_dt;
    const double rounded = std::round(ticks);
    if (rounded < 1 || std::abs(ticks - rounded) > 1e-6 * std::max(1.0, rounded)) {
      throw std::invalid_argument(std::string("LoopSchedule: physics_dt does not divide the ") +
                                  which + " period");
    }
    return static_cast<long long>(rounded);
  }

  void validate() const {
    if (!(physics_dt > 0)) throw std::invalid_argument("LoopSchedule: physics_dt must be > 0");
    if (!(sensor_rate > 0) || !(control_rate > 0) || !(servo_rate > 0)) {
      throw std::invalid_argument("LoopSchedule: rates must be > 0");
    }
    if (control_rate > sensor_rate) {
      throw std::invalid_argument("LoopSchedule: control_rate must not exceed sensor_rate");
    }
    ticks_for(sensor_rate, "sensor");
    ticks_for(control_rate, "control");
    ticks_for(servo_rate, "servo");
  }
};

struct SensorModel {
  double noise_std{0};
  double quantization{0};

  void validate() const {
    if (!(noise_std >= 0) || !(quantization >= 0)) {
      throw std::invalid_argument("SensorModel: noise_std and quantization must be >= 0");
    }
  }
};

enum class TissueKind { phantom, porcine, custom };

inline const char* to_string(TissueKind k) {
  switch (k) {
    case TissueKind::phantom: return "phantom";
    case TissueKind::porcine: return "porcine";
    case TissueKind::custom: return "custom";
  }
  return "custom";
}

inline TissueKind tissue_kind_from_string(const std::string& s) {
  if (s == "phantom") return TissueKind::phantom;
  if (s == "porcine") return TissueKind::porcine;
  if (s == "custom") return TissueKind::custom;
  throw std::invalid_argument("unknown tissue kind '" + s + "'");
}

struct ScenarioSpec {
  std::string name{"scenario"};
  Architecture architecture{Architecture::end_effector};
  TissueKind tissue_kind{TissueKind::phantom};
  TissueModel tissue{TissueModel::phantom()};
  // Per-run multiplicative stiffness spread: k * (1 + h * (2u - 1)).
  double stiffness_heterogeneity{0};
  MotionProfile profile{};
  double target_force{5.0};
  // Optional sinusoidal modulation of the force reference.
  double reference_amplitude{0};
  double reference_frequency{0};
  double duration{8.0};
  int replicates{1};
  std::optional<int> controller_id{};
  PidGains gains{};  // used when controller_id is empty
  LoopSchedule schedule{};
  SensorModel sensor{};
  std::uint64_t seed{0};
  double transient_cut{0};
  double control_latency{0};
  bool codec_in_loop{false};

  ActuatorModel actuator{};
  CarriageModel carriage{};
  ArmServoModel servo{};
  ArmOutputScaling arm_scaling{};

  PidGains resolved_gains() const {
    return controller_id ? gain_bank(*controller_id) : gains;
  }

  double reference(double t) const {
    if (reference_amplitude == 0) return target_force;
    return target_force +
           reference_amplitude * std::sin(2 * std::numbers::pi * reference_frequency * t);
  }

  PidConfig pid_config() const {
    const double period = 1.0 / schedule.control_rate;
    if (architecture == Architecture::end_effector) {
      return PidConfig::symmetric(resolved_gains(), period, actuator.rated_torque);
    }
    return PidConfig::symmetric(resolved_gains(), period,
                                arm_scaling.max_step / arm_scaling.metres_per_unit);
  }

  void validate() const {
    if (name.empty()) throw std::invalid_argument("ScenarioSpec: name must not be empty");
    if (!(target_force > 0 && target_force <= kMaxRatedForce)) {
      throw std::invalid_argument("ScenarioSpec: target_force must lie in (0, 62.2] N");
    }
    if (!(duration > 0)) throw std::invalid_argument("ScenarioSpec: duration must be > 0");
    if (replicates < 1) throw std::invalid_argument("ScenarioSpec: replicates must be >= 1");
    if (!(transient_cut >= 0 && transient_cut < duration)) {
      throw std::invalid_argument("ScenarioSpec: transient_cut must lie in [0, duration)");
    }
    if (!(stiffness_heterogeneity >= 0 && stiffness_heterogeneity < 1)) {
      throw std::invalid_argument("ScenarioSpec: stiffness_heterogeneity must lie in [0, 1)");
    }
    if (!(control_latency >= 0)) throw std::invalid_argument("ScenarioSpec: control_latency must be >= 0");
    if (!(reference_amplitude >= 0) || !(reference_frequency >= 0)) {
      throw std::invalid_argument("ScenarioSpec: reference modulation must be non-negative");
    }
    if (controller_id) gain_bank(*controller_id);
    resolved_gains().validate();
    schedule.validate();
    sensor.validate();
    tissue.validate();
    profile.validate();
    actuator.validate();
    carriage.validate();
    servo.validate();
    if (!(arm_scaling.metres_per_unit > 0) || !(arm_scaling.max_step > 0)) {
      throw std::invalid_argument("ScenarioSpec: arm scaling must be positive");
    }
  }
};

// Default static window for settled statistics.
inline constexpr double kStaticTransientCut = 1.0;

inline ScenarioSpec make_scenario(std::string name, Architecture arch, TissueKind tissue,
                                  MotionProfile profile, double target, int controller,
                                  int replicates) {
  ScenarioSpec s;
  s.name = std::move(name);
  s.architecture = arch;
  s.tissue_kind = tissue;
  s.tissue = tissue == TissueKind::porcine ? TissueModel::porcine() : TissueModel::phantom();
  s.stiffness_heterogeneity = tissue == TissueKind::porcine ? 0.2 : 0.0;
  s.profile = std::move(profile);
  s.target_force = target;
  s.controller_id = controller;
  s.replicates = replicates;
  s.duration = 8.0;
  s.transient_cut =
      std::holds_alternative<StaticMotion>(s.profile.shape) ? kStaticTransientCut : 0.0;
  return s;
}

// The full experiment matrix: static, phantom breathing, porcine breathing,
// arm porcine breathing and the sudden-movement pair.
inline std::vector<ScenarioSpec> builtin_scenarios(std::uint64_t seed = 2024) {
  std::vector<ScenarioSpec> out;
  auto label = [](double f) {
    std::string s = std::to_string(f);
    s.erase(s.find_last_not_of('0') + 1);
    if (s.back() == '.') s.pop_back();
    return s + "N";
  };
  const auto ee = Architecture::end_effector;
  const auto arm = Architecture::arm;
  const auto breathing = MotionProfile::breathing();

  const double static_targets[] = {2.5, 5.0, 10.0};
  for (int i = 0; i < 3; ++i) {
    out.push_back(make_scenario("ee_static_porcine_" + label(static_targets[i]), ee,
                                TissueKind::porcine, MotionProfile::still(), static_targets[i],
                                1 + i, 3));
  }
  for (int i = 0; i < 3; ++i) {
    out.push_back(make_scenario("ee_breathing_phantom_" + label(static_targets[i]), ee,
                                TissueKind::phantom, breathing, static_targets[i], 4 + i, 3));
  }
  const double motion_targets[] = {2.5, 5.0, 10.0, 15.0};
  for (int i = 0; i < 4; ++i) {
    out.push_back(make_scenario("ee_breathing_porcine_" + label(motion_targets[i]), ee,
                                TissueKind::porcine, breathing, motion_targets[i], 7 + i, 3));
  }
  for (int i = 0; i < 4; ++i) {
    out.push_back(make_scenario("arm_breathing_porcine_" + label(motion_targets[i]), arm,
                                TissueKind::porcine, breathing, motion_targets[i], 11 + i, 3));
  }
  out.push_back(make_scenario("ee_sudden_porcine_5N", ee, TissueKind::porcine,
                              MotionProfile::pulse(0.020, 0.25, 0.25, 2.0), 5.0, 2, 1));
  out.push_back(make_scenario("arm_sudden_porcine_5N", arm, TissueKind::porcine,
                              MotionProfile::pulse(0.020, 0.25, 0.25, 2.0), 5.0, 15, 1));
  for (auto& s : out) s.seed = seed;
  return out;
}

}  // namespace qdd
