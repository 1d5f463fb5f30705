// SPDX-License-Identifier: Apache-2.0
//
// Envelope machinery: the derivative of the interim payoff in the true type
// (a sum of (1 - e^sigma) terms weighted by products of kernel sensitivity
// ratios) and the information rents obtained by integrating it along the
// value grid.
#pragma once

#include "beliefs.hpp"

namespace privm {

/// E[ sum_{s=t}^{tau} (1 - exp(sigma_s)) * G^s_t ] with G^t_t = 1 and, for
/// s > t, the product over steps of (-dF/dx)/f from kernel_cdf_sensitivity.
/// Expectation by forward enumeration over the kernel, the others' belief
/// cells, and the budget-bin advance.
double envelope_derivative(const MarketInstance& m,
                           const std::vector<std::vector<int>>& sigma,
                           const BeliefModel& beliefs, int owner, int t,
                           int v, int bin, int tau);

/// One-off information rent Lambda(v, anchor; tau); batch callers should
/// build a RentTable.
double information_rent(const MarketInstance& m,
                        const std::vector<std::vector<int>>& sigma,
                        const BeliefModel& beliefs, int owner, int t, int v,
                        int anchor, int tau);

/// Rents for one assignment rule. Integrands are evaluated at the
/// expected-path bin of each period; the mechanism tables they feed carry no
/// epsilon-history coordinate, so neither can the rents.
class RentTable {
 public:
  RentTable() = default;
  RentTable(const MarketInstance& m,
            const std::vector<std::vector<int>>& sigma,
            const BeliefModel& beliefs);

  /// Envelope integrand at grid point x for horizon tau (tau in [t..T]).
  double integrand(int owner, int t, int x, int tau) const;

  /// Information rent Lambda(v, anchor; tau): trapezoid quadrature of the
  /// integrand from anchor to v. Lambda(top, top; tau) = 0 exactly.
  double lam(int owner, int t, int v, int anchor, int tau) const;

  /// Lambda(v, v_bar; tau) against the top type.
  double lam_top(int owner, int t, int v, int tau) const {
    return lam_top_[owner][t][v][tau - t];
  }

  /// sup over allowed tau in {t..T} of Lambda(v, v_bar; tau).
  double sup_lam_top(int owner, int t, int v) const {
    return sup_lam_[owner][t][v];
  }

  const std::vector<int>& allowed_taus(int owner, int t) const {
    return taus_[owner][t];
  }

 private:
  const MarketInstance* m_ = nullptr;
  // integrand_[i][t][x][tau - t]
  std::vector<std::vector<std::vector<std::vector<double>>>> integrand_;
  std::vector<std::vector<std::vector<std::vector<double>>>> lam_top_;
  std::vector<std::vector<std::vector<double>>> sup_lam_;
  std::vector<std::vector<std::vector<int>>> taus_;
};

}  // namespace privm
