#pragma once

// Closed-loop analyses on top of the simulator: swept-sine force bandwidth and
// the P-only ultimate-gain search that feeds the Ziegler-Nichols rule.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "control.hpp"
#include "scenario.hpp"
#include "simengine.hpp"

namespace qdd {

// Static phantom, 5 N operating point, bank gains tuned for 5 N.
inline ScenarioSpec analysis_base(Architecture arch) {
  ScenarioSpec s = make_scenario(std::string("analysis_") + to_string(arch), arch,
                                 TissueKind::phantom, MotionProfile::still(), 5.0,
                                 arch == Architecture::end_effector ? 2 : 12, 1);
  s.transient_cut = 0;
  return s;
}

struct FrequencyPoint {
  double frequency;
  double gain;   // |measured| / |reference| at the drive frequency
  double phase;  // radians
};

struct BandwidthResult {
  double crossover_hz;  // -3 dB point, or the last frequency swept when never crossed
  bool crossed;
  std::vector<FrequencyPoint> points;
};

class BandwidthError : public std::runtime_error {
 public:
  BandwidthError(const std::string& what, double frequency)
      : std::runtime_error(what), frequency_(frequency) {}
  double frequency() const { return frequency_; }

 private:
  double frequency_;
};

inline std::vector<double> log_frequencies(double lo, double hi, int count) {
  std::vector<double> f;
  for (int i = 0; i < count; ++i) {
    f.push_back(lo * std::pow(hi / lo, count == 1 ? 0.0 : double(i) / (count - 1)));
  }
  return f;
}

// Response of the closed loop to a sinusoidal reference of `amplitude` N
// around the base target. The first `settle` seconds are discarded and the
// fundamental is extracted over whole drive periods.
inline FrequencyPoint frequency_response(const ScenarioSpec& base, double amplitude,
                                         double frequency, double settle = 2.0,
                                         int periods = 4) {
  ScenarioSpec s = base;
  s.reference_amplitude = amplitude;
  s.reference_frequency = frequency;
  s.replicates = 1;
  const double rate = s.schedule.sensor_rate;
  const double period = 1.0 / frequency;
  const double settle_time = std::max(settle, period);
  const double window = std::max(periods * period, 2.0);
  const double whole = std::ceil(window / period) * period;
  s.duration = std::ceil((settle_time + whole) * rate) / rate;
  s.transient_cut = 0;

  SimTrace tr;
  try {
    tr = run_scenario(s);
  } catch (const SimulationError& e) {
    std::ostringstream os;
    os << "closed loop unstable at " << frequency << " Hz: " << e.what();
    throw BandwidthError(os.str(), frequency);
  }

  const auto n_window = static_cast<std::size_t>(std::llround(whole * rate));
  const std::size_t first = tr.samples.size() - std::min(n_window, tr.samples.size());
  std::complex<double> ref{0, 0};
  std::complex<double> out{0, 0};
  const double w = 2 * std::numbers::pi * frequency;
  for (std::size_t i = first; i < tr.samples.size(); ++i) {
    const auto& x = tr.samples[i];
    const std::complex<double> basis = std::polar(1.0, -w * x.time);
    ref += (x.target - s.target_force) * basis;
    out += (x.measured - s.target_force) * basis;
  }
  const double gain = std::abs(out) / std::abs(ref);
  if (!std::isfinite(gain) || gain > 1e3) {
    std::ostringstream os;
    os << "closed loop unstable at " << frequency << " Hz";
    throw BandwidthError(os.str(), frequency);
  }
  return {frequency, gain, std::arg(out / ref)};
}

// Frequency where the closed-loop amplitude ratio first falls below 1/sqrt(2),
// log-interpolated between sweep points.
inline BandwidthResult measure_bandwidth(const ScenarioSpec& base, double amplitude,
                                         const std::vector<double>& frequencies) {
  if (frequencies.empty()) throw std::invalid_argument("measure_bandwidth: no frequencies");
  const double threshold = 1.0 / std::sqrt(2.0);
  BandwidthResult result{frequencies.back(), false, {}};
  for (double f : frequencies) {
    result.points.push_back(frequency_response(base, amplitude, f));
    const auto n = result.points.size();
    if (!result.crossed && result.points.back().gain < threshold) {
      result.crossed = true;
      if (n == 1) {
        result.crossover_hz = f;
      } else {
        const auto& a = result.points[n - 2];
        const auto& b = result.points[n - 1];
        const double u = (threshold - a.gain) / (b.gain - a.gain);
        result.crossover_hz = std::exp(std::log(a.frequency) + u * (std::log(b.frequency) - std::log(a.frequency)));
      }
      break;
    }
  }
  return result;
}

inline BandwidthResult measure_bandwidth(Architecture arch, double amplitude = 1.0) {
  return measure_bandwidth(analysis_base(arch), amplitude, log_frequencies(0.1, 45.0, 24));
}

// ---------------------------------------------------------------------------
// Ultimate gain

struct OscillationProbe {
  double kp;
  double amplitude_ratio;  // geometric mean of successive peak ratios
  double period;           // mean peak spacing, s
  int peaks;
};

// Runs the base scenario with P-only gains and measures the decay of the
// force oscillation about its mean over [window_start, end).
inline OscillationProbe probe_oscillation(const ScenarioSpec& base, double kp,
                                          double window_start = 1.0) {
  ScenarioSpec s = base;
  s.controller_id.reset();
  s.gains = {kp, 0, 0};
  s.replicates = 1;
  s.transient_cut = 0;
  OscillationProbe probe{kp, 0, 0, 0};
  SimTrace tr;
  try {
    tr = run_scenario(s);
  } catch (const SimulationError&) {
    probe.amplitude_ratio = std::numeric_limits<double>::infinity();
    return probe;
  }
  std::vector<double> x;
  std::vector<double> t;
  for (const auto& smp : tr.samples) {
    if (smp.time >= window_start) {
      x.push_back(smp.measured);
      t.push_back(smp.time);
    }
  }
  if (x.size() < 3) return probe;
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());

  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    const double d = x[i] - mean;
    if (d > 1e-6 && x[i] > x[i - 1] && x[i] >= x[i + 1]) peaks.push_back(i);
  }
  probe.peaks = static_cast<int>(peaks.size());
  if (peaks.size() < 3) return probe;  // decayed into the friction band
  double log_ratio = 0;
  for (std::size_t k = 1; k < peaks.size(); ++k) {
    log_ratio += std::log((x[peaks[k]] - mean) / (x[peaks[k - 1]] - mean));
  }
  probe.amplitude_ratio = std::exp(log_ratio / static_cast<double>(peaks.size() - 1));
  probe.period = (t[peaks.back()] - t[peaks.front()]) / static_cast<double>(peaks.size() - 1);
  return probe;
}

struct UltimateGain {
  double ku;
  double tu;
  double amplitude_ratio;
  int iterations;
};

// Bisection on kp for the edge of sustained oscillation: the smallest gain
// whose peak-to-peak amplitude ratio is at least 0.95.
inline UltimateGain find_ultimate_gain(const ScenarioSpec& base, double kp_lo, double kp_hi,
                                       int max_iterations = 40) {
  if (!(kp_lo > 0) || !(kp_hi > kp_lo)) {
    throw std::invalid_argument("find_ultimate_gain: need 0 < kp_lo < kp_hi");
  }
  auto sustained = [](const OscillationProbe& p) { return p.amplitude_ratio >= 0.95; };
  if (sustained(probe_oscillation(base, kp_lo))) {
    throw std::runtime_error("find_ultimate_gain: lower bound already oscillates");
  }
  OscillationProbe hi = probe_oscillation(base, kp_hi);
  if (!sustained(hi)) {
    throw std::runtime_error("find_ultimate_gain: no sustained oscillation below upper bound");
  }
  int it = 0;
  while (it < max_iterations) {
    ++it;
    const double mid = std::sqrt(kp_lo * kp_hi);
    const OscillationProbe p = probe_oscillation(base, mid);
    if (sustained(p)) {
      kp_hi = mid;
      hi = p;
    } else {
      kp_lo = mid;
    }
    if (hi.amplitude_ratio <= 1.05 && kp_hi / kp_lo < 1.01) break;
    if (kp_hi / kp_lo < 1.0001) break;
  }
  return {hi.kp, hi.period, hi.amplitude_ratio, it};
}

}  // namespace qdd
