// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qdd/qdd.hpp"

namespace {

using namespace qdd;

struct Outcome {
  bool pass;
  std::string detail;
};

const ScenarioSpec& builtin(const std::vector<ScenarioSpec>& specs, const std::string& name) {
  for (const auto& s : specs) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("no builtin scenario named " + name);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome rated_force() {
  const double f = force_from_torque(3.0, TransmissionGeometry{});
  return {std::abs(f - 62.2) <= 0.05, fmt("F(3 N*m) = %.4f N", f)};
}

Outcome linearity() {
  const TransmissionGeometry belt{};
  const TransmissionGeometry crank{0.04825, 0.04825, 2 * 0.04825};
  const int n = 1000;
  double belt_spread = 0;
  const double belt0 = belt_rate(belt);
  for (int i = 0; i < n; ++i) belt_spread = std::max(belt_spread, std::abs(belt_rate(belt) - belt0));
  // Forward half-stroke, where the crank rate keeps one sign and its mean is meaningful.
  std::vector<double> rates;
  double mean = 0;
  for (int i = 0; i <= n; ++i) {
    rates.push_back(crank_rate(crank, std::numbers::pi * i / n));
    mean += rates.back() / (n + 1);
  }
  double spread = 0;
  for (double r : rates) spread = std::max(spread, std::abs(r - mean));
  return {belt_spread == 0.0 && spread > 0.1 * mean,
          fmt("belt spread %.1e, crank max deviation %.1f%% of mean", belt_spread, 100 * spread / mean)};
}

Outcome static_tracking(const std::vector<ScenarioSpec>& specs) {
  bool pass = true;
  std::ostringstream os;
  for (const char* name : {"ee_static_porcine_2.5N", "ee_static_porcine_5N", "ee_static_porcine_10N"}) {
    const ScenarioSpec& s = builtin(specs, name);
    const auto traces = run_replicates(s, s.replicates);
    const Metrics m = pooled_metrics(traces, s.target_force, s.transient_cut);
    pass = pass && std::abs(m.mean - s.target_force) <= 0.1 && m.rmse <= 0.10;
    os << fmt("%.1fN: mean %.3f rmse %.3f; ", s.target_force, m.mean, m.rmse);
  }
  return {pass, os.str()};
}

Outcome breathing_ordering(const std::vector<ScenarioSpec>& specs) {
  bool pass = true;
  double ee_sum = 0, arm_sum = 0;
  std::ostringstream os;
  for (const char* target : {"2.5N", "5N", "10N", "15N"}) {
    const ScenarioSpec& ee = builtin(specs, std::string("ee_breathing_porcine_") + target);
    const ScenarioSpec& arm = builtin(specs, std::string("arm_breathing_porcine_") + target);
    const double e = pooled_metrics(run_replicates(ee, ee.replicates), ee.target_force, ee.transient_cut).rmse;
    const double a = pooled_metrics(run_replicates(arm, arm.replicates), arm.target_force, arm.transient_cut).rmse;
    pass = pass && e < a;
    ee_sum += e;
    arm_sum += a;
    os << fmt("%s ee %.3f arm %.3f; ", target, e, a);
  }
  const double ratio = arm_sum / ee_sum;
  pass = pass && ee_sum / 4 < 0.5 * arm_sum / 4;
  os << fmt("mean ee %.3f arm %.3f (%.1fx)", ee_sum / 4, arm_sum / 4, ratio);
  return {pass, os.str()};
}

Outcome sudden_movement(const std::vector<ScenarioSpec>& specs) {
  const SimTrace ee = run_scenario(builtin(specs, "ee_sudden_porcine_5N"));
  const SimTrace arm = run_scenario(builtin(specs, "arm_sudden_porcine_5N"));
  const Metrics me = compute_metrics(ee, 5.0, 0);
  const Metrics ma = compute_metrics(arm, 5.0, 0);
  const double le = longest_contact_loss(ee, 0.1);
  const double la = longest_contact_loss(arm, 0.1);
  return {me.max < ma.max && le <= la,
          fmt("max ee %.2f N arm %.2f N; contact loss ee %.2f s arm %.2f s", me.max, ma.max, le, la)};
}

Outcome force_range(const std::vector<ScenarioSpec>& specs) {
  bool pass = true;
  std::ostringstream os;
  for (const char* name : {"ee_breathing_porcine_2.5N", "ee_breathing_porcine_15N"}) {
    const ScenarioSpec& s = builtin(specs, name);
    // Post-transient: drop the first second of the approach.
    const Metrics m = pooled_metrics(run_replicates(s, s.replicates), s.target_force, 1.0);
    const double err = std::abs(m.mean - s.target_force) / s.target_force;
    pass = pass && err <= 0.05;
    os << fmt("%.1fN: mean %.3f (%.2f%%); ", s.target_force, m.mean, 100 * err);
  }
  return {pass, os.str()};
}

Outcome convergence(const std::vector<ScenarioSpec>& specs) {
  std::vector<ScenarioSpec> fine = specs;
  for (auto& s : fine) s.schedule.physics_dt /= 2;
  const auto coarse_rows = run_matrix(specs, 8);
  const auto fine_rows = run_matrix(fine, 8);
  double worst = 0;
  std::string worst_name;
  bool pass = true;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!coarse_rows[i].ok() || !fine_rows[i].ok()) return {false, specs[i].name + " failed"};
    const double a = coarse_rows[i].pooled.rmse;
    const double b = fine_rows[i].pooled.rmse;
    const double rel = std::abs(a - b) / a;
    if (rel > worst) {
      worst = rel;
      worst_name = specs[i].name;
    }
    pass = pass && rel < 0.02;
  }
  return {pass, fmt("worst relative RMSe change %.4f%% (%s)", 100 * worst, worst_name.c_str())};
}

Outcome determinism(const std::vector<ScenarioSpec>& specs) {
  const auto serial = run_matrix(specs, 1);
  const auto parallel = run_matrix(specs, 8);
  const std::string a = io::report_to_json(serial).dump();
  const std::string b = io::report_to_json(parallel).dump();
  return {serial == parallel && a == b, fmt("%zu rows, report %zu bytes", serial.size(), a.size())};
}

Outcome codec(const std::vector<ScenarioSpec>& specs) {
  using namespace protocol;
  const CodecRanges r;
  bool round_trip = true;
  for (const FieldRange* f : {&r.velocity, &r.torque, &r.kp, &r.kd}) {
    for (std::uint32_t code = 0; code <= f->max_code(); ++code) {
      for (double frac : {0.0, 0.25, 0.5, 0.999}) {
        const double x = std::min(f->max, dequantize(code, *f) + frac * f->step());
        if (std::abs(dequantize(quantize(x, *f, "f"), *f) - x) > f->step()) round_trip = false;
      }
    }
  }
  SplitMix64 rng(5);
  for (int i = 0; i < 100000; ++i) {
    const double x = r.position.min + rng.uniform() * (r.position.max - r.position.min);
    if (std::abs(dequantize(quantize(x, r.position, "p"), r.position) - x) > r.position.step()) round_trip = false;
  }
  ScenarioSpec s = builtin(specs, "ee_static_porcine_5N");
  s.replicates = 1;
  const double direct = compute_metrics(run_scenario(s), s.target_force, s.transient_cut).rmse;
  s.codec_in_loop = true;
  const double coded = compute_metrics(run_scenario(s), s.target_force, s.transient_cut).rmse;
  const double budget = bus_budget(100);
  return {round_trip && std::abs(direct - coded) < 0.01 && budget < 0.05,
          fmt("round trip %s; rmse delta %.2e N; bus %.2f%%", round_trip ? "ok" : "FAILED",
              std::abs(direct - coded), 100 * budget)};
}

Outcome metrics_oracle() {
  SimTrace t;
  const double a = 0.8;
  for (int i = 0; i < 800; ++i) {
    const double time = i / 100.0;
    t.samples.push_back({time, 5, 5 + a * std::sin(2 * std::numbers::pi * 0.25 * time), 0, 0, 0, 0});
  }
  const double rmse = compute_metrics(t, 5.0, 0).rmse;
  const PidGains g = ziegler_nichols(1.79, 0.02);
  const bool zn = g.kp == 0.6 * 1.79 && g.ki == 1.2 * 1.79 / 0.02 && g.kd == 0.075 * 1.79 * 0.02;
  return {std::abs(rmse - a / std::sqrt(2.0)) <= 1e-6 && zn,
          fmt("sine rmse error %.1e; ZN %s", std::abs(rmse - a / std::sqrt(2.0)), zn ? "exact" : "mismatch")};
}

Outcome backdrivability() {
  const ActuatorModel act;
  const CarriageModel car;
  const TissueModel free_air{2000, 10, 1.0};
  const double threshold = act.backdrive_friction_torque / car.geometry.pulley_radius;
  auto travel = [&](double push) {
    PlantState s;
    s.probe_position = 0.02;
    s.theta = 0.02 / car.geometry.pulley_radius;
    for (int i = 0; i < 5000; ++i) {
      s = step_end_effector(s, act, car, free_air, 0.0, MotionProfile::still(), 1e-4, push);
    }
    return std::abs(s.probe_position - 0.02);
  };
  const double above = travel(1.5 * threshold);
  const double below = travel(0.5 * threshold);
  // "No net motion": below the 0.05 mm resolution of a hand-held probe position.
  return {above >= 1e-3 && below < 5e-5,
          fmt("1.5x: %.2f mm, 0.5x: %.4f mm in 0.5 s", 1e3 * above, 1e3 * below)};
}

}  // namespace

int main() {
  const auto specs = builtin_scenarios();
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"rated force from torque", rated_force},
      {"belt linear, crank not", linearity},
      {"static tracking", [&] { return static_tracking(specs); }},
      {"breathing: end-effector beats arm", [&] { return breathing_ordering(specs); }},
      {"sudden movement peaks and contact", [&] { return sudden_movement(specs); }},
      {"force range 2.5-15 N under breathing", [&] { return force_range(specs); }},
      {"integrator convergence", [&] { return convergence(specs); }},
      {"determinism serial vs parallel", [&] { return determinism(specs); }},
      {"codec round trip and bus budget", [&] { return codec(specs); }},
      {"metrics and tuning oracles", metrics_oracle},
      {"backdrivability", backdrivability},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d. %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), secs);
    if (!o.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", index - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
