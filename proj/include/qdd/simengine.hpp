#pragma once

// Fixed-step multi-rate execution of a scenario. Physics advances every
// physics_dt; the force sensor is sampled at sensor_rate, the controller runs
// at control_rate (sample-then-act within the same tick) and the arm servo
// latches setpoints at its own command rate.

#include <cmath>
#include <cstdint>
#include <deque>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "control.hpp"
#include "plant.hpp"
#include "protocol.hpp"
#include "random.hpp"
#include "scenario.hpp"

namespace qdd {

struct TraceSample {
  double time;
  double target;
  double measured;
  double true_force;
  double probe_position;
  double platform_position;
  double command;

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

struct SimTrace {
  std::string name;
  double sensor_rate{100.0};
  double tissue_stiffness{0};
  std::vector<TraceSample> samples;

  double duration() const { return static_cast<double>(samples.size()) / sensor_rate; }
  friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// Tissue realised for one run, after heterogeneity sampling.
inline TissueModel realised_tissue(const ScenarioSpec& spec, SplitMix64& rng) {
  TissueModel t = spec.tissue;
  if (spec.stiffness_heterogeneity > 0) {
    t.stiffness *= 1.0 + spec.stiffness_heterogeneity * (2.0 * rng.uniform() - 1.0);
  }
  return t;
}

inline SimTrace run_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const LoopSchedule& sch = spec.schedule;
  const double dt = sch.physics_dt;
  const long long sensor_ticks = sch.ticks_for(sch.sensor_rate, "sensor");
  const long long control_ticks = sch.ticks_for(sch.control_rate, "control");
  const long long latency_ticks = static_cast<long long>(std::llround(spec.control_latency / dt));
  const double n_samples_real = spec.duration * sch.sensor_rate;
  const auto n_samples = static_cast<long long>(std::llround(n_samples_real));
  if (n_samples < 1 || std::abs(n_samples_real - static_cast<double>(n_samples)) > 1e-9 * n_samples_real) {
    throw std::invalid_argument("run_scenario: duration must be a whole number of sensor periods");
  }
  const long long total_ticks = n_samples * sensor_ticks;

  SplitMix64 rng(spec.seed);
  const TissueModel tissue = realised_tissue(spec, rng);
  const PidConfig pid = spec.pid_config();
  const bool ee = spec.architecture == Architecture::end_effector;

  PlantState state = ee ? end_effector_touching(spec.carriage, tissue) : arm_touching(tissue);
  PidState pid_state;
  double measured = 0;
  // Command in effect at the plant, and commands still in flight.
  double applied = ee ? 0.0 : state.probe_position;
  double setpoint = applied;
  std::deque<std::pair<long long, double>> in_flight;

  SimTrace trace;
  trace.name = spec.name;
  trace.sensor_rate = sch.sensor_rate;
  trace.tissue_stiffness = tissue.stiffness;
  trace.samples.reserve(static_cast<std::size_t>(n_samples));

  for (long long k = 0; k < total_ticks; ++k) {
    const double t = static_cast<double>(k) * dt;
    state.time = t;
    const double target = spec.reference(t);

    if (k % sensor_ticks == 0) {
      double f = state.contact_force;
      if (spec.sensor.noise_std > 0) f += spec.sensor.noise_std * rng.normal();
      if (spec.sensor.quantization > 0) f = std::round(f / spec.sensor.quantization) * spec.sensor.quantization;
      measured = f;
    }

    if (k % control_ticks == 0) {
      double cmd;
      try {
        if (ee) {
          auto out = end_effector_force_controller(target, measured, pid_state, pid,
                                                   spec.actuator.rated_torque);
          pid_state = out.state;
          cmd = out.command;
          if (spec.codec_in_loop) {
            protocol::CommandFrame frame;
            frame.torque_setpoint = cmd;
            frame.position_setpoint = state.theta;
            frame.velocity_setpoint = std::clamp(state.omega, -65.0, 65.0);
            cmd = protocol::decode_command(protocol::encode_command(frame)).torque_setpoint;
          }
        } else {
          auto out = arm_force_controller(target, measured, pid_state, pid, setpoint, spec.arm_scaling);
          pid_state = out.state;
          setpoint = out.command;
          cmd = setpoint;
        }
      } catch (const std::domain_error& e) {
        throw SimulationError(std::string("controller failure: ") + e.what(), t);
      }
      in_flight.emplace_back(k + latency_ticks, cmd);
    }
    while (!in_flight.empty() && in_flight.front().first <= k) {
      applied = in_flight.front().second;
      in_flight.pop_front();
    }

    if (k % sensor_ticks == 0) {
      trace.samples.push_back({t, target, measured, state.contact_force, state.probe_position,
                               state.platform_position, applied});
    }

    try {
      state = ee ? step_end_effector(state, spec.actuator, spec.carriage, tissue, applied,
                                     spec.profile, dt)
                 : step_arm(state, spec.servo, tissue, applied, spec.profile, dt);
    } catch (const PlantDivergence& e) {
      std::ostringstream os;
      os << spec.name << ": plant diverged at t=" << e.time() << " s";
      throw SimulationError(os.str(), e.time());
    }
  }
  return trace;
}

inline std::vector<SimTrace> run_replicates(const ScenarioSpec& spec, int n) {
  if (n < 1) throw std::invalid_argument("run_replicates: n must be >= 1");
  std::vector<SimTrace> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ScenarioSpec rep = spec;
    rep.seed = replicate_seed(spec.seed, static_cast<std::uint64_t>(i));
    out.push_back(run_scenario(rep));
  }
  return out;
}

}  // namespace qdd
