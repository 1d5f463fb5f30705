// SPDX-License-Identifier: Apache-2.0
//
// Epsilon arithmetic: linear composition of per-period privacy losses,
// m-point indistinguishability factors, and budget/commitment accounting.
#pragma once

#include <optional>
#include <vector>

#include "common.hpp"

namespace privm {

/// Sum of per-round privacy losses; the exponent in the composed likelihood
/// bound exp(sum eps_i). Summation is fixed left-to-right so ledger state is
/// bit-reproducible. Entries must satisfy 0 < eps <= eps_cap.
double compose_epsilons(const std::vector<double>& history, double eps_cap);

/// Likelihood-ratio bound exp(m * eps) for databases at Hamming distance m.
/// eps = 0 is accepted here (limiting checks); m must be >= 1.
double indistinguishability_factor(double eps, long m);

/// Smallest t with sum_{s=0..t} eps_s >= budget, or nullopt when the
/// cumulative loss stays below the budget over the whole history.
std::optional<int> commitment_period(const std::vector<double>& history,
                                     double eps_cap, double budget);

/// Append-only record of realized privacy losses against a tolerance budget.
class PrivacyLedger {
 public:
  PrivacyLedger(double budget, double eps_cap);

  /// Records one period's loss; throws ValidationError outside (0, eps_cap].
  void record(double eps);

  double cumulative() const { return cumulative_; }
  double budget() const { return budget_; }
  double eps_cap() const { return eps_cap_; }
  const std::vector<double>& history() const { return history_; }

  /// True once cumulative loss has reached the budget.
  bool budget_reached() const { return cumulative_ >= budget_; }

  std::optional<int> commitment() const {
    return commitment_period(history_, eps_cap_, budget_);
  }

 private:
  double budget_;
  double eps_cap_;
  double cumulative_ = 0.0;
  std::vector<double> history_;
};

}  // namespace privm
