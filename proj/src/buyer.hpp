// SPDX-License-Identifier: Apache-2.0
//
// Buyer-side evaluation: the ex-ante expected cost of a full mechanism (exact
// enumeration at desk scale, seeded Monte Carlo beyond it), the first-order
// relaxed objective with the virtual-cost handicap, expected stopping times,
// IR margins, and the coordinate-descent search over (sigma, kappa).
#pragma once

#include "payments.hpp"

namespace privm {

struct CostEstimate {
  double value = 0.0;
  bool exact = true;
  double std_error = 0.0;  // zero when exact
};

/// Ex-ante expected buyer cost under the rules and the given stopping
/// thresholds: per period, accuracy loss plus beta for continuing owners and
/// theta + rho at each owner's stopping period.
CostEstimate direct_cost(const MarketInstance& m, const MechanismRules& rules,
                         const ThresholdProfile& thresholds);

/// First-order objective: accuracy + true flow losses + the virtual-cost
/// handicap (1 - e^sigma)(1 - F_0)/f_0 weighted by the sensitivity products,
/// over paths truncated at the kappa-implied stopping times.
double relaxed_cost(const MarketInstance& m,
                    const std::vector<std::vector<int>>& sigma,
                    const ThresholdProfile& kappa);

/// E[stopping time] under the truthful forward process with the threshold
/// rule (stop at the first t with v >= kappa(t); forced stop at T).
double expected_stopping_time(const MarketInstance& m,
                              const std::vector<std::vector<int>>& sigma,
                              const ThresholdProfile& kappa, int owner);

struct IrMargins {
  double ex_ante = 0.0;     // E[U(0, .)] + b
  double worst_type = 0.0;  // value of the top type under the kappa rule
};
std::vector<IrMargins> check_ir(const MarketInstance& m,
                                const MechanismRules& rules,
                                const ThresholdProfile& thresholds,
                                const BeliefModel& beliefs,
                                const ValueSolution& solution);

struct OptimizerLogRow {
  int evaluation = 0;
  double cost = 0.0;
  bool accepted = false;
};

struct OptimizationResult {
  std::vector<std::vector<int>> sigma;
  ThresholdProfile kappa;
  std::vector<double> expected_stop;  // per owner, under the best kappa
  double relaxed = kInf;
  CostEstimate direct;
  std::vector<IrMargins> ir;
  MarginReport margins;
  DicCertificate certificate;
  bool feasible = false;
  int evaluations = 0;
  std::vector<OptimizerLogRow> log;
  nlohmann::json to_json() const;
};

/// Coordinate descent with multi-start over the family's parameters and the
/// per-period thresholds; IR is a hard constraint, DIC margins are reported.
/// Throws ValidationError("infeasible under parametrization") when no start
/// yields an IR-feasible candidate.
OptimizationResult optimize(const MarketInstance& m, const SigmaSpec& family,
                            const OptimizerConfig& cfg);

}  // namespace privm
