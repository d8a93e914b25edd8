#pragma once

// Discrete PID force controllers for the two architectures (current-based on
// the end-effector, position-based on the arm) and the tuned gain bank.

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace qdd {

struct PidGains {
  double kp{0};
  double ki{0};
  double kd{0};

  void validate() const {
    if (!(kp >= 0) || !(ki >= 0) || !(kd >= 0)) {
      throw std::invalid_argument("PidGains: gains must be non-negative and finite");
    }
  }
  friend bool operator==(const PidGains&, const PidGains&) = default;
};

struct PidConfig {
  PidGains gains;
  double sample_period{0.01};
  double output_min{-3.0};
  double output_max{3.0};
  // Integral term is clamped to this range (defaults to the output range).
  double integral_min{-3.0};
  double integral_max{3.0};
  // First-order filter on the derivative: d = a*d_prev + (1-a)*raw.
  double derivative_filter_coeff{0.9};

  void validate() const {
    gains.validate();
    if (!(sample_period > 0)) throw std::invalid_argument("PidConfig: sample_period must be > 0");
    if (!(output_min < output_max)) throw std::invalid_argument("PidConfig: output_min must be < output_max");
    if (!(integral_min <= integral_max)) throw std::invalid_argument("PidConfig: integral_min must be <= integral_max");
    if (!(derivative_filter_coeff >= 0 && derivative_filter_coeff < 1)) {
      throw std::invalid_argument("PidConfig: derivative_filter_coeff must lie in [0, 1)");
    }
  }

  static PidConfig symmetric(PidGains g, double period, double limit) {
    return {g, period, -limit, limit, -limit, limit, 0.9};
  }
};

struct PidState {
  double integral{0};        // accumulated ki * sum(e*dt), command units
  double previous_error{0};
  double previous_derivative{0};  // filtered de/dt
  bool primed{false};        // previous_error holds a real sample

  void reset() { *this = PidState{}; }
};

struct PidOutput {
  double command;
  PidState state;
};

// One controller tick. The integral is advanced before the output is formed,
// so a constant error e yields ki*N*dt*e after N ticks. The first tick after a
// reset has no derivative kick.
inline PidOutput pid_step(const PidState& state, const PidConfig& cfg, double error) {
  if (!std::isfinite(error)) {
    throw std::domain_error("pid_step: non-finite error");
  }
  const double dt = cfg.sample_period;
  PidState next = state;

  next.integral = std::clamp(state.integral + cfg.gains.ki * error * dt,
                             cfg.integral_min, cfg.integral_max);

  const double raw = state.primed ? (error - state.previous_error) / dt : 0.0;
  const double a = cfg.derivative_filter_coeff;
  next.previous_derivative = a * state.previous_derivative + (1 - a) * raw;
  next.previous_error = error;
  next.primed = true;

  const double unclamped =
      cfg.gains.kp * error + next.integral + cfg.gains.kd * next.previous_derivative;
  return {std::clamp(unclamped, cfg.output_min, cfg.output_max), next};
}

// ---------------------------------------------------------------------------
// Gain bank

inline constexpr int kGainBankSize = 15;

inline constexpr std::array<PidGains, kGainBankSize> kGainBank{{
    {0.35, 2.39, 0.0186},
    {0.26, 2.39, 0.01},
    {0.429, 2.39, 0.0186},
    {0.54, 12.85, 0.015},
    {0.54, 12.85, 0.015},
    {1.6, 0, 0.015},  // pure PD row, kept as tuned
    {0.629, 8.85, 0.015},
    {0.529, 12.85, 0.015},
    {0.429, 8.85, 0.015},
    {0.429, 8.85, 0.015},
    {0.03, 5e-8, 0.001},
    {0.03, 5e-8, 0.001},
    {0.03, 5e-8, 0.001},
    {0.025, 5e-8, 0.001},
    {0.02, 5e-8, 0.001},
}};

enum class Architecture { end_effector, arm };

inline const char* to_string(Architecture a) {
  return a == Architecture::end_effector ? "end_effector" : "arm";
}

inline Architecture architecture_from_string(const std::string& s) {
  if (s == "end_effector" || s == "ee") return Architecture::end_effector;
  if (s == "arm") return Architecture::arm;
  throw std::invalid_argument("unknown architecture '" + s + "'");
}

inline PidGains gain_bank(int controller_id) {
  if (controller_id < 1 || controller_id > kGainBankSize) {
    throw std::out_of_range("gain_bank: unknown controller id " + std::to_string(controller_id));
  }
  return kGainBank[static_cast<std::size_t>(controller_id - 1)];
}

// Experimental condition each bank row was tuned for.
struct GainBankUse {
  int id;
  Architecture architecture;
  const char* condition;
};

inline constexpr std::array<GainBankUse, kGainBankSize> kGainBankUse{{
    {1, Architecture::end_effector, "static, porcine, 2.5 N"},
    {2, Architecture::end_effector, "static, porcine, 5 N; sudden movement, 5 N"},
    {3, Architecture::end_effector, "static, porcine, 10 N"},
    {4, Architecture::end_effector, "breathing, phantom, 2.5 N"},
    {5, Architecture::end_effector, "breathing, phantom, 5 N"},
    {6, Architecture::end_effector, "breathing, phantom, 10 N"},
    {7, Architecture::end_effector, "breathing, porcine, 2.5 N"},
    {8, Architecture::end_effector, "breathing, porcine, 5 N"},
    {9, Architecture::end_effector, "breathing, porcine, 10 N"},
    {10, Architecture::end_effector, "breathing, porcine, 15 N"},
    {11, Architecture::arm, "breathing, porcine, 2.5 N"},
    {12, Architecture::arm, "breathing, porcine, 5 N"},
    {13, Architecture::arm, "breathing, porcine, 10 N"},
    {14, Architecture::arm, "breathing, porcine, 15 N"},
    {15, Architecture::arm, "sudden movement, porcine, 5 N"},
}};

inline std::string gain_table_text() {
  std::ostringstream os;
  os << "| Controller | kp | ki | kd | Architecture | Condition |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& use : kGainBankUse) {
    const PidGains g = gain_bank(use.id);
    os << "| " << use.id << " | " << g.kp << " | " << g.ki << " | " << g.kd << " | "
       << to_string(use.architecture) << " | " << use.condition << " |\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Architectures

struct ForceControllerOutput {
  double command;
  PidState state;
};

// Current-based force control: the PID output is a motor torque (N*m).
inline ForceControllerOutput end_effector_force_controller(double target, double measured,
                                                           const PidState& state,
                                                           const PidConfig& cfg,
                                                           double rated_torque = 3.0) {
  auto [u, next] = pid_step(state, cfg, target - measured);
  return {std::clamp(u, -rated_torque, rated_torque), next};
}

// Position-based force control. PID output is scaled into a setpoint delta
// (metres per unit of output) and clamped per tick before being added to the
// current setpoint.
struct ArmOutputScaling {
  double metres_per_unit{1e-3};
  double max_step{2e-3};
};

inline ForceControllerOutput arm_force_controller(double target, double measured,
                                                  const PidState& state, const PidConfig& cfg,
                                                  double current_position,
                                                  ArmOutputScaling scaling = {}) {
  auto [u, next] = pid_step(state, cfg, target - measured);
  const double delta =
      std::clamp(u * scaling.metres_per_unit, -scaling.max_step, scaling.max_step);
  return {current_position + delta, next};
}

// Classic Ziegler-Nichols PID rule.
inline PidGains ziegler_nichols(double ultimate_gain, double ultimate_period) {
  if (!(ultimate_gain > 0) || !(ultimate_period > 0)) {
    throw std::invalid_argument("ziegler_nichols: Ku and Tu must be positive");
  }
  return {0.6 * ultimate_gain, 1.2 * ultimate_gain / ultimate_period,
          0.075 * ultimate_gain * ultimate_period};
}

}  // namespace qdd
