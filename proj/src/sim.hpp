// SPDX-License-Identifier: Apache-2.0
//
// Seeded Monte Carlo execution of the market protocol: sample preference
// paths, apply the rules and the threshold stopping rule, track ledgers and
// population, aggregate statistics. One splitmix64 stream per (seed, trial,
// owner), so owner- or trial-level parallelism cannot change results.
#pragma once

#include "solver.hpp"

namespace privm {

/// Reporting override table: report[owner][t][v_true] = report index, or -1
/// for truthful. Lets the simulator realize the oracle's arg-max deviations.
struct StrategyOverrides {
  std::vector<std::vector<std::vector<int>>> report;
  bool empty() const { return report.empty(); }
  static StrategyOverrides none() { return {}; }
};

struct TraceRow {
  int t = 0, owner = 0;
  bool active = false;
  double v_true = kNaN;
  int report_sym = -1;  // departed symbol when inactive
  double eps = 0.0;
  double payment = 0.0;
  bool stops = false;
  double cum_loss = 0.0;  // ledger sum over active periods
};

struct SimTrace {
  std::vector<TraceRow> rows;           // owner-major within each period
  std::vector<int> active_count;        // per period
  std::vector<double> owner_payoff;     // total per owner
  std::vector<int> stop_period;         // per owner
  std::vector<double> final_cum_loss;   // per owner
  double buyer_cost = 0.0;
};

SimTrace run_trace(const MarketInstance& m, const MechanismRules& rules,
                   const ThresholdProfile& thresholds,
                   const StrategyOverrides& overrides, std::uint64_t seed,
                   std::uint64_t trial = 0);

struct SimStats {
  std::uint64_t trials = 0;
  double buyer_cost_mean = 0.0;
  double buyer_cost_se = kNaN;  // NaN when trials == 1
  std::vector<double> owner_payoff_mean, owner_payoff_se;
  std::vector<double> mean_cum_eps;
  /// stop_histogram[owner][t] = count of trials stopping at t.
  std::vector<std::vector<std::uint64_t>> stop_histogram;
  std::vector<SimTrace> kept_traces;
  nlohmann::json to_json() const;
};

/// Streaming aggregation over independent trials; pairwise-summed so the
/// aggregate is identical regardless of batching order.
SimStats monte_carlo(const MarketInstance& m, const MechanismRules& rules,
                     const ThresholdProfile& thresholds,
                     const StrategyOverrides& overrides, std::uint64_t trials,
                     std::uint64_t seed, int keep_traces = 0);

}  // namespace privm
