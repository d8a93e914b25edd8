// Command-line front end for the force-control testbed.
//
// Exit codes: 0 success, 1 scenario failure, 2 configuration error.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qdd/qdd.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kScenarioFailure = 1;
constexpr int kConfigError = 2;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<double> physics_dt;
  std::string out{"results"};
};

void apply_globals(qdd::ScenarioSpec& s, const GlobalOptions& g) {
  if (g.seed) s.seed = *g.seed;
  if (g.physics_dt) s.schedule.physics_dt = *g.physics_dt;
}

std::string file_stem(const std::string& name) {
  std::string out = name;
  std::replace_if(out.begin(), out.end(), [](char c) { return !(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'); }, '_');
  return out;
}

int write_results(const std::vector<qdd::ScenarioResult>& results, const fs::path& out) {
  fs::create_directories(out);
  std::vector<qdd::ReportRow> rows;
  bool failed = false;
  for (const auto& r : results) {
    rows.push_back(r.row);
    if (!r.row.ok()) {
      failed = true;
      continue;
    }
    const std::string stem = file_stem(r.spec.name);
    for (std::size_t i = 0; i < r.traces.size(); ++i) {
      qdd::io::emit_csv(r.traces[i], out / (stem + "_r" + std::to_string(i) + ".csv"));
    }
    qdd::io::emit_svg(r.traces, out / (stem + ".svg"), r.spec.name);
  }
  qdd::io::emit_report(rows, out / "report.txt", out / "report.json");
  std::cout << qdd::io::format_report(rows);
  std::cout << "wrote " << (out / "report.json").string() << '\n';
  return failed ? kScenarioFailure : kOk;
}

qdd::ScenarioSpec analysis_spec(const std::string& arch, const std::string& profile,
                                const GlobalOptions& g) {
  auto s = qdd::analysis_base(qdd::architecture_from_string(arch));
  if (profile == "breathing") {
    s.profile = qdd::MotionProfile::breathing();
  } else if (profile == "sudden") {
    s.profile = qdd::MotionProfile::pulse();
  } else if (profile != "static") {
    throw std::invalid_argument("unknown profile '" + profile + "' (static|breathing|sudden)");
  }
  apply_globals(s, g);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation testbed for compliant quasi-direct-drive force control"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed_value = 0;
  double dt_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Master seed")->group("Global");
  auto* dt_opt = app.add_option("--physics-dt", dt_value, "Physics step in seconds")->group("Global");
  app.add_option("--out", g.out, "Output directory")->capture_default_str()->group("Global");
  app.fallthrough();

  auto* run = app.add_subcommand("run", "Run one scenario file");
  std::string scenario_path;
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  auto* matrix = app.add_subcommand("matrix", "Run a batch of scenarios");
  bool builtin = false;
  std::string dir;
  unsigned parallel = std::max(1u, std::thread::hardware_concurrency());
  auto* builtin_opt = matrix->add_flag("--builtin", builtin, "Use the built-in experiment matrix");
  matrix->add_option("--dir", dir, "Directory of scenario JSON files")->excludes(builtin_opt);
  matrix->add_option("--parallel", parallel, "Worker threads")->capture_default_str();

  auto* report = app.add_subcommand("report", "Print a saved report");
  std::string report_path;
  report->add_option("results", report_path, "report.json or a results directory")->required();

  auto* tune = app.add_subcommand("tune", "Ultimate-gain search and Ziegler-Nichols gains");
  std::string tune_arch = "end_effector";
  std::string tune_profile = "static";
  double kp_lo = 0.05;
  double kp_hi = 8.0;
  tune->add_option("--architecture", tune_arch, "end_effector|arm")->capture_default_str();
  tune->add_option("--profile", tune_profile, "static|breathing|sudden")->capture_default_str();
  tune->add_option("--kp-min", kp_lo, "Lower bisection bound")->capture_default_str();
  tune->add_option("--kp-max", kp_hi, "Upper bisection bound")->capture_default_str();

  auto* bandwidth = app.add_subcommand("bandwidth", "Swept-sine closed-loop force bandwidth");
  std::string bw_arch = "end_effector";
  double bw_amplitude = 1.0;
  bandwidth->add_option("--architecture", bw_arch, "end_effector|arm")->capture_default_str();
  bandwidth->add_option("--amplitude", bw_amplitude, "Reference amplitude in N")->capture_default_str();

  app.add_subcommand("gains", "Print the controller gain bank");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  if (*seed_opt) g.seed = seed_value;
  if (*dt_opt) g.physics_dt = dt_value;

  try {
    if (*run) {
      auto spec = qdd::io::load_scenario(scenario_path);
      apply_globals(spec, g);
      spec.validate();
      return write_results({qdd::run_one(spec)}, g.out);
    }
    if (*matrix) {
      std::vector<qdd::ScenarioSpec> specs;
      if (!dir.empty()) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir)) {
          if (e.path().extension() == ".json") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) specs.push_back(qdd::io::load_scenario(f));
      } else {
        specs = qdd::builtin_scenarios();
      }
      if (specs.empty()) throw qdd::io::ConfigError("no scenarios found");
      for (auto& s : specs) {
        apply_globals(s, g);
        s.validate();
      }
      return write_results(qdd::run_matrix_detailed(specs, parallel), g.out);
    }
    if (*report) {
      fs::path p = report_path;
      if (fs::is_directory(p)) p /= "report.json";
      const auto rows = qdd::io::report_from_json(nlohmann::json::parse(qdd::io::read_text(p)));
      std::cout << qdd::io::format_report(rows);
      const bool failed = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.ok(); });
      return failed ? kScenarioFailure : kOk;
    }
    if (*tune) {
      auto base = analysis_spec(tune_arch, tune_profile, g);
      base.duration = 6.0;
      const auto u = qdd::find_ultimate_gain(base, kp_lo, kp_hi);
      const auto gains = qdd::ziegler_nichols(u.ku, u.tu);
      std::cout << "architecture  " << tune_arch << "\nprofile       " << tune_profile
                << "\nKu            " << u.ku << "\nTu            " << u.tu << " s"
                << "\namp. ratio    " << u.amplitude_ratio << "\nZiegler-Nichols PID: kp=" << gains.kp
                << " ki=" << gains.ki << " kd=" << gains.kd << '\n';
      return kOk;
    }
    if (*bandwidth) {
      auto base = analysis_spec(bw_arch, "static", g);
      const auto bw = qdd::measure_bandwidth(base, bw_amplitude, qdd::log_frequencies(0.1, 45.0, 24));
      std::cout << "frequency_hz  gain     phase_rad\n";
      for (const auto& p : bw.points) {
        std::printf("%12.3f  %7.4f  %8.4f\n", p.frequency, p.gain, p.phase);
      }
      if (bw.crossed) {
        std::cout << "-3 dB crossover: " << bw.crossover_hz << " Hz\n";
      } else {
        std::cout << "no -3 dB crossover below " << bw.crossover_hz << " Hz\n";
      }
      return kOk;
    }
    std::cout << qdd::gain_table_text();
    return kOk;
  } catch (const qdd::io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kScenarioFailure;
  }
}
