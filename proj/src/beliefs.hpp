// SPDX-License-Identifier: Apache-2.0
//
// Each owner's belief about the others under truthful play: per-period
// marginals over (value, active) propagated through the kernels, survival
// filtered by the stopping thresholds, plus the expected epsilon path that
// anchors budget bins and commitment periods.
#pragma once

#include <optional>
#include <utility>

#include "mechanism.hpp"

namespace privm {

/// Stopping thresholds collapsed to one value per period (grid point, or
/// nullopt for "never stop at this period").
struct OwnerThresholds {
  std::vector<std::optional<double>> kl, kr;
};
using ThresholdProfile = std::vector<OwnerThresholds>;  // per owner

/// Never-stop profile (forced horizon stop only).
ThresholdProfile never_stop_profile(const MarketInstance& m);

struct BeliefModel {
  /// marginal[i][t][sym]: owner i's report-symbol distribution at period t
  /// (last symbol = departed).
  std::vector<std::vector<std::vector<double>>> marginal;
  /// survival[i][t]: probability owner i is still active at period t.
  std::vector<std::vector<double>> survival;

  std::vector<double> expected_eps;  // E[eps_t]
  std::vector<double> expected_cum;  // cumulative through t inclusive
  std::vector<int> path_bin;         // bin state at period t
  std::vector<int> commitment_t;     // expected commitment period; -1 = not reached

  /// others[i][t]: encoded cells over owners != i (owner i's symbol zeroed)
  /// with their probabilities under independence.
  std::vector<std::vector<std::vector<std::pair<std::size_t, double>>>> others;
  /// joint[t]: full joint-report cell distribution.
  std::vector<std::vector<std::pair<std::size_t, double>>> joint;

  /// Whether owner i may stop voluntarily at period t (commitment gating on
  /// the expected path; the horizon end is always a stop).
  bool stop_allowed(int owner, int t, int horizon,
                    bool gating_enabled) const {
    if (t >= horizon) return true;
    if (!gating_enabled) return true;
    return commitment_t[owner] >= 0 && t >= commitment_t[owner];
  }
};

/// Forward pass t = 0..T. Absent thresholds mean every owner stays active
/// through T (only the forced horizon stop).
BeliefModel build_beliefs(const MarketInstance& m,
                          const std::vector<std::vector<int>>& sigma,
                          const std::optional<ThresholdProfile>& thresholds);

/// Budget bins reachable at each period from the zero-loss start under the
/// given assignment table.
std::vector<std::vector<int>> reachable_bins(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma);

}  // namespace privm
