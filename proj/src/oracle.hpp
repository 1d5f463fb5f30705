// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth incentive verification. One-shot deviation gains are computed
// cell by cell; the multi-period search evaluates every (state, report,
// stop/continue) choice by a backward sweep over the deviator's Markov state
// (t, true value, budget bin) — the mechanism tables are memoryless in
// reports and beliefs stay fixed at truthful play, so past reports carry no
// payoff information. Values here are computed by the oracle's own
// recursion, independent of the stopping solver.
#pragma once

#include "solver.hpp"

namespace privm {

struct DeviationCell {
  int owner, t, bin, v_true, v_report;
  double stop_gain;       // deviation stop branch minus truthful stop branch
  double continue_gain;   // deviation continue minus truthful continue (NaN at T)
  double combined_gain;   // deviation best branch minus truthful best branch
};

struct DeviationReport {
  std::vector<DeviationCell> cells;
  double max_gain = 0.0;
  DeviationCell argmax{};
  // per (owner, t): branch maxima over reachable states, for the
  // certificate-soundness comparison
  std::vector<std::vector<double>> max_stop_gain, max_continue_gain;
  std::optional<double> best_multi_gain;  // filled at desk scale
  bool multi_beats_one_shot = false;
  nlohmann::json to_json() const;
};

struct OracleOptions {
  bool multi_period = false;
};

/// Branch gains of the single one-shot deviation (owner, t, bin, v -> vhat).
std::pair<double, double> one_shot_deviation_gain(
    const MarketInstance& m, const MechanismRules& rules,
    const BeliefModel& beliefs, int owner, int t, int bin, int v_true,
    int v_report);

/// Full one-shot table over reachable (t, bin) states; optionally the best
/// state-contingent multi-period deviation (desk scale: T <= 3, grid <= 4,
/// n <= 2, else CapacityError).
DeviationReport max_deviation_gain(const MarketInstance& m,
                                   const MechanismRules& rules,
                                   const OracleOptions& opts = {});

/// Prop 3.2: best multi-period gain <= best one-shot gain + 1e-8.
struct OneShotPrincipleResult {
  bool holds = false;
  double gap = 0.0;  // multi best minus one-shot best
  double one_shot_best = 0.0, multi_best = 0.0;
};
OneShotPrincipleResult verify_one_shot_principle(const MarketInstance& m,
                                                 const MechanismRules& rules);

/// Bellman stop decision vs the kappa up-set rule at every reachable state.
struct ThresholdMismatch {
  int owner, t, bin, v;
  double g_minus_rho;
};
struct ThresholdOptimality {
  bool agrees = true;
  std::vector<ThresholdMismatch> mismatches;
};
ThresholdOptimality verify_threshold_optimality(const MarketInstance& m,
                                                const MechanismRules& rules);

/// Value of an explicit state-contingent strategy (choice[t][v][bin] =
/// {report index, stop flag}) from state (t, v, bin), by forward evaluation.
/// Used by tests as an independent check on the sweep's optimum.
struct StrategyChoice {
  int report = 0;
  bool stop = false;
};
double strategy_value(const MarketInstance& m, const MechanismRules& rules,
                      const BeliefModel& beliefs, int owner,
                      const std::vector<std::vector<std::vector<StrategyChoice>>>& choice,
                      int t, int v, int bin);

}  // namespace privm
