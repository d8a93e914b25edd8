#pragma once

// File formats: scenario documents (JSON), per-run CSV traces, SVG force
// plots and the batch report (aligned text plus JSON).

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "batch.hpp"
#include "metrics.hpp"
#include "scenario.hpp"
#include "simengine.hpp"

namespace qdd::io {

using nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kCsvHeader =
    "time_s,target_N,measured_N,true_N,probe_m,platform_m,command";

// ---------------------------------------------------------------------------
// Scenario documents

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline MotionProfile profile_from_json(const json& j) {
  check_keys(j, {"type", "amplitude", "frequency", "rise", "fall", "onset", "parts"}, "profile");
  const std::string type = j.value("type", "static");
  if (type == "static") return MotionProfile::still();
  if (type == "breathing") {
    BreathingMotion b;
    read(j, "amplitude", b.amplitude);
    read(j, "frequency", b.frequency);
    return {b};
  }
  if (type == "sudden_pulse") {
    SuddenPulse p;
    read(j, "amplitude", p.amplitude);
    read(j, "rise", p.rise);
    read(j, "fall", p.fall);
    read(j, "onset", p.onset);
    return {p};
  }
  if (type == "composite") {
    CompositeMotion c;
    for (const auto& part : j.at("parts")) c.parts.push_back(profile_from_json(part));
    return {c};
  }
  throw ConfigError("profile: unknown type '" + type + "'");
}

inline json profile_to_json(const MotionProfile& p) {
  struct Visitor {
    json operator()(const StaticMotion&) const { return {{"type", "static"}}; }
    json operator()(const BreathingMotion& b) const {
      return {{"type", "breathing"}, {"amplitude", b.amplitude}, {"frequency", b.frequency}};
    }
    json operator()(const SuddenPulse& s) const {
      return {{"type", "sudden_pulse"}, {"amplitude", s.amplitude}, {"rise", s.rise},
              {"fall", s.fall}, {"onset", s.onset}};
    }
    json operator()(const CompositeMotion& c) const {
      json parts = json::array();
      for (const auto& part : c.parts) parts.push_back(profile_to_json(part));
      return {{"type", "composite"}, {"parts", parts}};
    }
  };
  return std::visit(Visitor{}, p.shape);
}

}  // namespace detail

inline ScenarioSpec scenario_from_json(const json& j) {
  using detail::read;
  detail::check_keys(j,
                     {"name", "architecture", "tissue", "stiffness_heterogeneity", "profile",
                      "target_force", "reference", "duration", "replicates", "controller",
                      "schedule", "sensor", "seed", "transient_cut", "control_latency",
                      "codec_in_loop", "actuator", "carriage", "servo", "arm_scaling"},
                     "scenario");
  try {
    ScenarioSpec s;
    s.name = j.at("name").get<std::string>();
    s.architecture = architecture_from_string(j.at("architecture").get<std::string>());

    if (j.contains("tissue")) {
      const json& t = j.at("tissue");
      if (t.is_string()) {
        s.tissue_kind = tissue_kind_from_string(t.get<std::string>());
      } else {
        detail::check_keys(t, {"kind", "stiffness", "damping", "surface_rest_position"}, "tissue");
        s.tissue_kind = tissue_kind_from_string(t.value("kind", "custom"));
      }
      s.tissue = s.tissue_kind == TissueKind::porcine ? TissueModel::porcine() : TissueModel::phantom();
      s.stiffness_heterogeneity = s.tissue_kind == TissueKind::porcine ? 0.2 : 0.0;
      if (t.is_object()) {
        read(t, "stiffness", s.tissue.stiffness);
        read(t, "damping", s.tissue.damping);
        read(t, "surface_rest_position", s.tissue.surface_rest_position);
      }
    }
    read(j, "stiffness_heterogeneity", s.stiffness_heterogeneity);
    if (j.contains("profile")) s.profile = detail::profile_from_json(j.at("profile"));
    s.target_force = j.at("target_force").get<double>();
    if (j.contains("reference")) {
      const json& r = j.at("reference");
      detail::check_keys(r, {"amplitude", "frequency"}, "reference");
      read(r, "amplitude", s.reference_amplitude);
      read(r, "frequency", s.reference_frequency);
    }
    read(j, "duration", s.duration);
    read(j, "replicates", s.replicates);

    if (j.contains("controller")) {
      const json& c = j.at("controller");
      if (c.is_number_integer()) {
        s.controller_id = c.get<int>();
      } else {
        detail::check_keys(c, {"kp", "ki", "kd"}, "controller");
        s.controller_id.reset();
        read(c, "kp", s.gains.kp);
        read(c, "ki", s.gains.ki);
        read(c, "kd", s.gains.kd);
      }
    } else {
      throw ConfigError("scenario: 'controller' (bank id or explicit gains) is required");
    }

    if (j.contains("schedule")) {
      const json& c = j.at("schedule");
      detail::check_keys(c, {"physics_dt", "sensor_rate", "control_rate", "servo_rate"}, "schedule");
      read(c, "physics_dt", s.schedule.physics_dt);
      read(c, "sensor_rate", s.schedule.sensor_rate);
      read(c, "control_rate", s.schedule.control_rate);
      read(c, "servo_rate", s.schedule.servo_rate);
    }
    if (j.contains("sensor")) {
      const json& c = j.at("sensor");
      detail::check_keys(c, {"noise_std", "quantization"}, "sensor");
      read(c, "noise_std", s.sensor.noise_std);
      read(c, "quantization", s.sensor.quantization);
    }
    read(j, "seed", s.seed);
    s.transient_cut =
        std::holds_alternative<StaticMotion>(s.profile.shape) ? kStaticTransientCut : 0.0;
    read(j, "transient_cut", s.transient_cut);
    read(j, "control_latency", s.control_latency);
    read(j, "codec_in_loop", s.codec_in_loop);

    if (j.contains("actuator")) {
      const json& c = j.at("actuator");
      detail::check_keys(c, {"rated_torque", "backdrive_friction_torque", "reflected_inertia",
                             "viscous_damping", "friction_velocity_scale"},
                         "actuator");
      read(c, "rated_torque", s.actuator.rated_torque);
      read(c, "backdrive_friction_torque", s.actuator.backdrive_friction_torque);
      read(c, "reflected_inertia", s.actuator.reflected_inertia);
      read(c, "viscous_damping", s.actuator.viscous_damping);
      read(c, "friction_velocity_scale", s.actuator.friction_velocity_scale);
    }
    if (j.contains("carriage")) {
      const json& c = j.at("carriage");
      detail::check_keys(c, {"moving_mass", "travel_limit", "pulley_radius"}, "carriage");
      read(c, "moving_mass", s.carriage.moving_mass);
      read(c, "travel_limit", s.carriage.travel_limit);
      if (c.contains("pulley_radius")) {
        s.carriage.geometry = TransmissionGeometry::with_pulley(c.at("pulley_radius").get<double>());
      }
    }
    if (j.contains("servo")) {
      const json& c = j.at("servo");
      detail::check_keys(c, {"command_rate", "velocity_limit", "acceleration_limit",
                             "tracking_time_constant", "effective_end_mass",
                             "structural_stiffness", "structural_damping_ratio"},
                         "servo");
      read(c, "command_rate", s.servo.command_rate);
      read(c, "velocity_limit", s.servo.velocity_limit);
      read(c, "acceleration_limit", s.servo.acceleration_limit);
      read(c, "tracking_time_constant", s.servo.tracking_time_constant);
      read(c, "effective_end_mass", s.servo.effective_end_mass);
      read(c, "structural_stiffness", s.servo.structural_stiffness);
      read(c, "structural_damping_ratio", s.servo.structural_damping_ratio);
    }
    if (j.contains("arm_scaling")) {
      const json& c = j.at("arm_scaling");
      detail::check_keys(c, {"metres_per_unit", "max_step"}, "arm_scaling");
      read(c, "metres_per_unit", s.arm_scaling.metres_per_unit);
      read(c, "max_step", s.arm_scaling.max_step);
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(e.what());
  }
}

inline json scenario_to_json(const ScenarioSpec& s) {
  json j;
  j["name"] = s.name;
  j["architecture"] = to_string(s.architecture);
  j["tissue"] = {{"kind", to_string(s.tissue_kind)},
                 {"stiffness", s.tissue.stiffness},
                 {"damping", s.tissue.damping},
                 {"surface_rest_position", s.tissue.surface_rest_position}};
  j["stiffness_heterogeneity"] = s.stiffness_heterogeneity;
  j["profile"] = detail::profile_to_json(s.profile);
  j["target_force"] = s.target_force;
  if (s.reference_amplitude != 0) {
    j["reference"] = {{"amplitude", s.reference_amplitude}, {"frequency", s.reference_frequency}};
  }
  j["duration"] = s.duration;
  j["replicates"] = s.replicates;
  if (s.controller_id) {
    j["controller"] = *s.controller_id;
  } else {
    j["controller"] = {{"kp", s.gains.kp}, {"ki", s.gains.ki}, {"kd", s.gains.kd}};
  }
  j["schedule"] = {{"physics_dt", s.schedule.physics_dt},
                   {"sensor_rate", s.schedule.sensor_rate},
                   {"control_rate", s.schedule.control_rate},
                   {"servo_rate", s.schedule.servo_rate}};
  j["sensor"] = {{"noise_std", s.sensor.noise_std}, {"quantization", s.sensor.quantization}};
  j["seed"] = s.seed;
  j["transient_cut"] = s.transient_cut;
  j["control_latency"] = s.control_latency;
  j["codec_in_loop"] = s.codec_in_loop;
  j["actuator"] = {{"rated_torque", s.actuator.rated_torque},
                   {"backdrive_friction_torque", s.actuator.backdrive_friction_torque},
                   {"reflected_inertia", s.actuator.reflected_inertia},
                   {"viscous_damping", s.actuator.viscous_damping},
                   {"friction_velocity_scale", s.actuator.friction_velocity_scale}};
  j["carriage"] = {{"moving_mass", s.carriage.moving_mass},
                   {"travel_limit", s.carriage.travel_limit},
                   {"pulley_radius", s.carriage.geometry.pulley_radius}};
  j["servo"] = {{"command_rate", s.servo.command_rate},
                {"velocity_limit", s.servo.velocity_limit},
                {"acceleration_limit", s.servo.acceleration_limit},
                {"tracking_time_constant", s.servo.tracking_time_constant},
                {"effective_end_mass", s.servo.effective_end_mass},
                {"structural_stiffness", s.servo.structural_stiffness},
                {"structural_damping_ratio", s.servo.structural_damping_ratio}};
  j["arm_scaling"] = {{"metres_per_unit", s.arm_scaling.metres_per_unit},
                      {"max_step", s.arm_scaling.max_step}};
  return j;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "': " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "': " + std::strerror(errno));
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline ScenarioSpec load_scenario(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_csv(const SimTrace& trace) {
  if (trace.samples.empty()) throw IoError("refusing to write an empty trace");
  std::string out = kCsvHeader;
  out += '\n';
  char buf[512];
  for (const auto& s : trace.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.time, s.target,
                  s.measured, s.true_force, s.probe_position, s.platform_position, s.command);
    out += buf;
  }
  return out;
}

inline void emit_csv(const SimTrace& trace, const std::filesystem::path& path) {
  if (trace.samples.empty()) {
    throw IoError("cannot write '" + path.string() + "': trace is empty");
  }
  write_text(path, format_csv(trace));
}

inline SimTrace parse_csv(const std::string& text, double sensor_rate = 100.0) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw IoError("CSV header mismatch");
  }
  SimTrace trace;
  trace.sensor_rate = sensor_rate;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    TraceSample s{};
    double* fields[] = {&s.time, &s.target, &s.measured, &s.true_force,
                        &s.probe_position, &s.platform_position, &s.command};
    std::istringstream row(line);
    std::string cell;
    for (double* f : fields) {
      if (!std::getline(row, cell, ',')) {
        throw IoError("CSV line " + std::to_string(lineno) + ": too few fields");
      }
      try {
        *f = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError("CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    trace.samples.push_back(s);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// SVG

inline std::string format_svg(const std::vector<SimTrace>& traces, const std::string& title = "") {
  if (traces.empty() || traces.front().samples.empty()) {
    throw IoError("cannot plot an empty trace set");
  }
  constexpr double W = 900, H = 420, L = 70, R = 20, T = 40, B = 55;
  double tmax = 0, fmax = 1e-9, fmin = 0;
  for (const auto& tr : traces) {
    for (const auto& s : tr.samples) {
      tmax = std::max(tmax, s.time);
      fmax = std::max({fmax, s.measured, s.target});
      fmin = std::min({fmin, s.measured, s.target});
    }
  }
  if (tmax <= 0) tmax = 1;
  fmax *= 1.1;
  auto px = [&](double t) { return L + (W - L - R) * t / tmax; };
  auto py = [&](double f) { return H - B - (H - T - B) * (f - fmin) / (fmax - fmin); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
       << "</text>\n";
  }
  // Axes and ticks.
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 8; ++i) {
    const double t = tmax * i / 8;
    os << "<text x=\"" << px(t) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << std::setprecision(1) << t << std::setprecision(2) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double f = fmin + (fmax - fmin) * i / 5;
    os << "<text x=\"" << L - 8 << "\" y=\"" << py(f) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
       << std::setprecision(1) << f << std::setprecision(2) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">time (s)</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
     << "transform=\"rotate(-90 18 " << (T + H - B) / 2 << ")\">force (N)</text>\n";

  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::size_t colour = 0;
  auto polyline = [&](const SimTrace& tr, bool target, const char* stroke, const char* dash) {
    os << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.2\"";
    if (dash) os << " stroke-dasharray=\"" << dash << "\"";
    os << " points=\"";
    for (const auto& s : tr.samples) os << px(s.time) << ',' << py(target ? s.target : s.measured) << ' ';
    os << "\"/>\n";
  };
  polyline(traces.front(), true, "black", "6 4");
  for (const auto& tr : traces) polyline(tr, false, palette[colour++ % 6], nullptr);

  // Legend.
  double ly = T + 8;
  os << "<text x=\"" << W - R - 160 << "\" y=\"" << ly << "\" font-size=\"12\">- - target</text>\n";
  colour = 0;
  for (const auto& tr : traces) {
    ly += 16;
    os << "<text x=\"" << W - R - 160 << "\" y=\"" << ly << "\" font-size=\"12\" fill=\""
       << palette[colour++ % 6] << "\">measured " << (tr.name.empty() ? "" : tr.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void emit_svg(const std::vector<SimTrace>& traces, const std::filesystem::path& path,
                     const std::string& title = "") {
  write_text(path, format_svg(traces, title));
}

// ---------------------------------------------------------------------------
// Reports

inline json metrics_to_json(const Metrics& m) {
  json j = {{"mean", m.mean}, {"rmse", m.rmse}, {"min", m.min}, {"max", m.max}, {"samples", m.samples}};
  j["settling_time"] = m.settling_time ? json(*m.settling_time) : json(nullptr);
  return j;
}

inline Metrics metrics_from_json(const json& j) {
  Metrics m;
  m.mean = j.at("mean").get<double>();
  m.rmse = j.at("rmse").get<double>();
  m.min = j.at("min").get<double>();
  m.max = j.at("max").get<double>();
  m.samples = j.value("samples", std::size_t{0});
  if (j.contains("settling_time") && !j.at("settling_time").is_null()) {
    m.settling_time = j.at("settling_time").get<double>();
  }
  return m;
}

inline json report_to_json(const std::vector<ReportRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json row = {{"scenario", r.scenario}};
    if (!r.ok()) {
      row["error"] = r.error;
    } else {
      json reps = json::array();
      for (const auto& m : r.replicates) reps.push_back(metrics_to_json(m));
      row["replicates"] = reps;
      row["pooled"] = metrics_to_json(r.pooled);
    }
    arr.push_back(row);
  }
  return {{"rows", arr}};
}

inline std::vector<ReportRow> report_from_json(const json& j) {
  std::vector<ReportRow> rows;
  try {
    for (const auto& row : j.at("rows")) {
      ReportRow r;
      r.scenario = row.at("scenario").get<std::string>();
      if (row.contains("error")) {
        r.error = row.at("error").get<std::string>();
      } else {
        for (const auto& m : row.at("replicates")) r.replicates.push_back(metrics_from_json(m));
        r.pooled = metrics_from_json(row.at("pooled"));
      }
      rows.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report: ") + e.what());
  }
  return rows;
}

inline std::string format_report(const std::vector<ReportRow>& rows) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.scenario.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "scenario" << std::right
     << std::setw(5) << "n" << std::setw(10) << "mean_N" << std::setw(10) << "rmse_N"
     << std::setw(10) << "min_N" << std::setw(10) << "max_N" << std::setw(11) << "settle_s"
     << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(width)) << r.scenario << std::right;
    if (!r.ok()) {
      os << "  FAILED: " << r.error << '\n';
      continue;
    }
    const Metrics& m = r.pooled;
    os << std::setw(5) << r.replicates.size() << std::setw(10) << m.mean << std::setw(10) << m.rmse
       << std::setw(10) << m.min << std::setw(10) << m.max;
    if (m.settling_time) {
      os << std::setw(11) << *m.settling_time;
    } else {
      os << std::setw(11) << "-";
    }
    os << '\n';
  }
  return os.str();
}

inline void emit_report(const std::vector<ReportRow>& rows, const std::filesystem::path& text_path,
                        const std::filesystem::path& json_path) {
  write_text(text_path, format_report(rows));
  write_text(json_path, report_to_json(rows).dump(2) + "\n");
}

}  // namespace qdd::io
