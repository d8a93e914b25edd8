#pragma once

// Batch execution of scenario lists. Each scenario owns its RNG stream, so
// results do not depend on how work is spread over threads.

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

#include "metrics.hpp"
#include "simengine.hpp"

namespace qdd {

struct ScenarioResult {
  ScenarioSpec spec;
  std::vector<SimTrace> traces;
  ReportRow row;
};

inline ScenarioResult run_one(const ScenarioSpec& spec) {
  ScenarioResult out;
  out.spec = spec;
  out.row.scenario = spec.name;
  try {
    out.traces = run_replicates(spec, spec.replicates);
    for (const auto& tr : out.traces) {
      out.row.replicates.push_back(compute_metrics(tr, spec.target_force, spec.transient_cut));
    }
    out.row.pooled = pooled_metrics(out.traces, spec.target_force, spec.transient_cut);
  } catch (const std::exception& e) {
    out.traces.clear();
    out.row.replicates.clear();
    out.row.pooled = {};
    out.row.error = e.what();
  }
  return out;
}

// Runs every scenario; failures are recorded per row instead of aborting.
// Results come back in input order.
inline std::vector<ScenarioResult> run_matrix_detailed(const std::vector<ScenarioSpec>& specs,
                                                       unsigned parallelism = 1) {
  if (specs.empty()) throw std::invalid_argument("run_matrix: no scenarios");
  std::vector<ScenarioResult> results(specs.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(specs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) results[i] = run_one(specs[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < specs.size(); i = next++) results[i] = run_one(specs[i]);
    });
  }
  for (auto& t : pool) t.join();
  return results;
}

inline std::vector<ReportRow> run_matrix(const std::vector<ScenarioSpec>& specs,
                                         unsigned parallelism = 1) {
  std::vector<ReportRow> rows;
  for (auto& r : run_matrix_detailed(specs, parallelism)) rows.push_back(std::move(r.row));
  return rows;
}

}  // namespace qdd
