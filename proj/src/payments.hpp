// SPDX-License-Identifier: Apache-2.0
//
// Synthesis of the compensation rules from the assignment rule (the design
// regime of the main theorem), the sufficient / necessary DIC condition
// checks, and the delta-DIC certificate.
#pragma once

#include "rent.hpp"
#include "solver.hpp"

namespace privm {

/// theta_t(v, v_others) = Lambda(v, v_bar; t) + flow_loss(v, sigma_t(...)).
std::vector<std::vector<std::vector<double>>> synthesize_theta(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma,
    const BeliefModel& beliefs, const RentTable& rents);

/// beta_t(v, v_others) = sup_tau Lambda(v, v_bar; tau)
///   - E[sup_tau' Lambda(v', v_bar; tau') | v] + flow_loss(v, sigma_t(...)).
std::vector<std::vector<std::vector<double>>> synthesize_beta(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma,
    const BeliefModel& beliefs, const RentTable& rents);

/// rho(t): expected rent combination along the kappa-capped process started
/// at the threshold (truthful kernel, post-hoc capping of the rent
/// arguments). Never-stop thresholds are capped at v_bar; the substitution
/// is reported through `warnings` when given.
std::vector<std::vector<double>> synthesize_rho(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma,
    const BeliefModel& beliefs, const RentTable& rents,
    const ThresholdProfile& kappa, std::vector<std::string>* warnings);

/// Full pipeline: beliefs -> rents -> payments -> solve -> thresholds,
/// iterated to a fixed point of the threshold tables (cap 50).
struct SynthesisResult {
  MechanismRules rules;
  BeliefModel beliefs;
  ValueSolution solution;
  ThresholdProfile thresholds;
  RentTable rents;
  bool converged = true;
  int iterations = 0;
  std::vector<std::string> warnings;
};
SynthesisResult synthesize_mechanism(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma,
    const std::optional<ThresholdProfile>& kappa_override = std::nullopt);

struct MarginEntry {
  double margin = kInf;
  int v = -1, v_hat = -1;
  long cell = -1;  // others-cell index; -1 = belief expectation
};

struct MarginReport {
  // per (owner, t)
  std::vector<std::vector<MarginEntry>> c1, c2;
  double min_c1 = kInf, min_c2 = kInf;
  bool pass() const { return min_c1 >= -kTieTol && min_c2 >= -kTieTol; }
  nlohmann::json to_json() const;
};

/// Conditions (thm_sigma_C1)/(thm_sigma_C2): worst case over grid pairs,
/// per others-cell and in belief expectation.
MarginReport check_sufficient(const MarketInstance& m,
                              const SynthesisResult& synth);

/// Necessary-condition margins (rent differences vs the distances).
MarginReport check_necessary(const MarketInstance& m,
                             const SynthesisResult& synth);

struct DicCertificate {
  std::vector<std::vector<double>> delta_s, delta_not_s;  // [owner][t]
  double max_delta_s = -kInf, max_delta_not_s = -kInf;
  std::string verdict;  // "DIC" | "approx-DIC" | "violated-conditions"
  nlohmann::json to_json() const;
};

DicCertificate delta_dic_certificate(const MarketInstance& m,
                                     const SynthesisResult& synth);

/// Zero-rho corollary: per (owner, t), the first grid point solving the rho
/// expression, or "infeasible at t" (nullopt) when no root exists.
struct ZeroRhoResult {
  // kappa[owner][t]; nullopt marks infeasibility at that period
  std::vector<std::vector<std::optional<double>>> kappa;
  std::vector<int> infeasible_t;  // flattened (owner * (T+1) + t) is overkill;
                                  // keep period list per summary
};
ZeroRhoResult zero_rho_threshold_solve(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma);

/// Limited-stopping-effect corollary: can the buyer retain an owner through
/// T, or force a stop exactly at `period`, with some sigma in the family?
struct ControlTarget {
  enum class Kind { RetainUntilHorizon, ForceStopAt } kind;
  int period = 0;
};
struct ControlFeasibility {
  bool feasible = false;
  int candidate_index = -1;
  double best_min_margin = -kInf;
  int candidates_checked = 0;
};
ControlFeasibility stopping_control_feasibility(const MarketInstance& m,
                                                int owner,
                                                const ControlTarget& target,
                                                const SigmaSpec& family);

}  // namespace privm
