// SPDX-License-Identifier: Apache-2.0
#include "ledger.hpp"

#include <cmath>
#include <string>

namespace privm {

namespace {
void check_entry(double eps, double eps_cap, std::size_t index) {
  if (!(eps > 0.0))
    throw ValidationError("privacy loss at index " + std::to_string(index) +
                          " must be positive, got " + std::to_string(eps));
  if (eps > eps_cap)
    throw ValidationError("privacy loss at index " + std::to_string(index) +
                          " exceeds the cap " + std::to_string(eps_cap));
}
}  // namespace

double compose_epsilons(const std::vector<double>& history, double eps_cap) {
  double total = 0.0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    check_entry(history[i], eps_cap, i);
    total += history[i];
  }
  return total;
}

double indistinguishability_factor(double eps, long m) {
  if (eps < 0.0) throw ValidationError("epsilon must be nonnegative");
  if (m < 1) throw ValidationError("Hamming distance m must be at least 1");
  return std::exp(static_cast<double>(m) * eps);
}

std::optional<int> commitment_period(const std::vector<double>& history,
                                     double eps_cap, double budget) {
  if (budget < 0.0) throw ValidationError("budget must be nonnegative");
  double cum = 0.0;
  for (std::size_t t = 0; t < history.size(); ++t) {
    check_entry(history[t], eps_cap, t);
    cum += history[t];
    if (cum >= budget) return static_cast<int>(t);
  }
  return std::nullopt;
}

PrivacyLedger::PrivacyLedger(double budget, double eps_cap)
    : budget_(budget), eps_cap_(eps_cap) {
  if (budget < 0.0) throw ValidationError("budget must be nonnegative");
  if (!(eps_cap > 0.0) || !std::isfinite(eps_cap))
    throw ValidationError("epsilon cap must be finite and positive");
}

void PrivacyLedger::record(double eps) {
  check_entry(eps, eps_cap_, history_.size());
  history_.push_back(eps);
  cumulative_ += eps;
}

}  // namespace privm
