#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "simengine.hpp"

namespace qdd {

struct Metrics {
  double mean{0};
  double rmse{0};
  double min{0};
  double max{0};
  // First time after which |error| stays below 10% of the target; empty when
  // the trace never settles.
  std::optional<double> settling_time{};
  std::size_t samples{0};

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

namespace detail {
inline Metrics metrics_over(std::span<const TraceSample> window, double target) {
  if (window.empty()) throw std::invalid_argument("compute_metrics: empty window");
  Metrics m;
  m.min = std::numeric_limits<double>::infinity();
  m.max = -std::numeric_limits<double>::infinity();
  double sum = 0;
  double sq = 0;
  for (const auto& s : window) {
    sum += s.measured;
    const double e = s.measured - target;
    sq += e * e;
    m.min = std::min(m.min, s.measured);
    m.max = std::max(m.max, s.measured);
  }
  const auto n = static_cast<double>(window.size());
  m.mean = sum / n;
  m.rmse = std::sqrt(sq / n);
  m.samples = window.size();

  const double band = 0.1 * std::abs(target);
  std::optional<double> settle;
  for (auto it = window.rbegin(); it != window.rend(); ++it) {
    if (std::abs(it->measured - target) >= band) break;
    settle = it->time;
  }
  m.settling_time = settle;
  return m;
}
}  // namespace detail

// Statistics over samples with time >= transient_cut.
inline Metrics compute_metrics(const SimTrace& trace, double target, double transient_cut = 0.0) {
  const auto first = std::find_if(trace.samples.begin(), trace.samples.end(),
                                  [&](const TraceSample& s) { return s.time >= transient_cut - 1e-12; });
  return detail::metrics_over({first, trace.samples.end()}, target);
}

// Joins traces end to end, shifting each by the accumulated duration.
inline SimTrace concatenate(std::span<const SimTrace> traces, double transient_cut = 0.0) {
  SimTrace out;
  if (traces.empty()) return out;
  out.name = traces.front().name;
  out.sensor_rate = traces.front().sensor_rate;
  double offset = 0;
  for (const auto& tr : traces) {
    double last = offset;
    for (const auto& s : tr.samples) {
      if (s.time < transient_cut - 1e-12) continue;
      TraceSample shifted = s;
      shifted.time = offset + (s.time - transient_cut);
      out.samples.push_back(shifted);
      last = shifted.time;
    }
    offset = last + 1.0 / tr.sensor_rate;
  }
  return out;
}

// Pooled statistics over the concatenated post-transient windows.
inline Metrics pooled_metrics(std::span<const SimTrace> traces, double target,
                              double transient_cut = 0.0) {
  return compute_metrics(concatenate(traces, transient_cut), target, 0.0);
}

// Longest contiguous stretch with measured force below `threshold`.
inline double longest_contact_loss(const SimTrace& trace, double threshold = 0.1) {
  double longest = 0;
  double run = 0;
  const double period = 1.0 / trace.sensor_rate;
  for (const auto& s : trace.samples) {
    if (s.measured < threshold) {
      run += period;
      longest = std::max(longest, run);
    } else {
      run = 0;
    }
  }
  return longest;
}

struct ReportRow {
  std::string scenario;
  std::vector<Metrics> replicates;
  Metrics pooled;
  std::string error;  // non-empty when the scenario failed

  bool ok() const { return error.empty(); }
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

}  // namespace qdd
