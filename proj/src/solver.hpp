// SPDX-License-Identifier: Apache-2.0
//
// Finite-horizon backward induction for each owner's value function, the
// stopping-incentive term G, stopping regions, and threshold extraction.
// The truthful stopping problem and the fixed-horizon payoff machinery used
// by the rent/payment checks both live here.
#pragma once

#include "beliefs.hpp"

namespace privm {

struct OwnerSolution {
  Table3 U, J_stop, J_cont, G;  // [t][v][bin]; J_cont and G are NaN at t = T
  /// stop[t][bin] is a bitmap over the value grid (Bellman decision,
  /// continue-on-indifference, forced stop at T).
  std::vector<std::vector<std::vector<std::uint8_t>>> stop;
  /// kl/kr[t][bin]: threshold rule extracted from the stop region.
  std::vector<std::vector<std::optional<double>>> kl, kr;
  /// Periods whose stop region is not an up-set (threshold premise broken).
  std::vector<int> non_threshold_t;
};

struct ValueSolution {
  std::vector<OwnerSolution> owners;
  bool converged = true;
  int iterations = 1;
};

/// One backward pass at fixed beliefs.
ValueSolution solve_value_function(const MarketInstance& m,
                                   const MechanismRules& rules,
                                   const BeliefModel& beliefs);

/// Thresholds at the expected-path bins (one value per period), the form the
/// belief survival filter and the payment synthesis consume.
ThresholdProfile collapse_thresholds(const MarketInstance& m,
                                     const ValueSolution& sol,
                                     const BeliefModel& beliefs);

/// Iterates build_beliefs -> solve -> extract thresholds until the threshold
/// tables stop changing (cap 50 iterations; non-convergence is reported in
/// the result, not hidden).
ValueSolution solve_fixed_point(const MarketInstance& m,
                                const MechanismRules& rules,
                                BeliefModel* beliefs_out);

/// Stop region {v : G <= rho} with the continue-on-indifference convention.
std::vector<int> stopping_region(const MarketInstance& m,
                                 const ValueSolution& sol, int owner, int t,
                                 int bin);

/// G such that "stop iff G <= rho(t)" reproduces the Bellman decision
/// exactly; errors at t = T where stopping is forced.
double g_incentive(const ValueSolution& sol, int owner, int t, int v, int bin);

/// One-off truthful interim payoff at a fixed stopping horizon tau >= t.
/// Builds the fixed-horizon tables for a single query; batch callers should
/// hold a FixedHorizonEvaluator instead.
double interim_payoff(const MarketInstance& m, const MechanismRules& rules,
                      const BeliefModel& beliefs, int owner, int t, int v,
                      int bin, int tau);

/// Truthful interim payoffs at fixed stopping horizons, and the deviation
/// variant without the current-period beta (the J-bar of the DIC distance
/// machinery). Tables are built once per owner and shared.
class FixedHorizonEvaluator {
 public:
  FixedHorizonEvaluator(const MarketInstance& m, const MechanismRules& rules,
                        const BeliefModel& beliefs, int owner);

  /// Expected payoff from continuing through tau-1 and stopping at tau.
  double interim(int t, int v, int bin, int tau) const;

  /// Period-t report v_hat, true value v_true, current-period beta excluded.
  double jbar(int t, int v_true, int v_hat, int bin, int tau) const;

  /// Same with the period-t others-cell pinned instead of belief-averaged.
  double jbar_at_cell(int t, int v_true, int v_hat, std::size_t others_cell,
                      int bin, int tau) const;

  /// Stopping horizons available from t (respects commitment gating).
  std::vector<int> allowed_taus(int t) const;

 private:
  double stop_now(int t, int v) const;
  // period-t leg with report already folded into `cell`; no current beta
  double continue_term(int t, int v_true, std::size_t cell, int bin,
                       int tau) const;

  const MarketInstance& m_;
  const MechanismRules& rules_;
  const BeliefModel& beliefs_;
  int owner_;
  // w_[tau][s][v][bin] for s in [tau..T]: truthful fixed-horizon values
  std::vector<std::vector<Table3>> w_;
};

}  // namespace privm
