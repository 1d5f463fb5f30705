// SPDX-License-Identifier: Apache-2.0
//
// Discretized Markovian endogenous dynamics: the distribution of the next
// instrumental preference conditions on the current one and on the binned
// accumulated privacy loss.
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grids.hpp"

namespace privm {

struct TransitionKernel {
  /// Initial distribution f0 over the value grid.
  std::vector<double> f0;

  /// rows[t-1][v_prev][bin] -> probability vector over the value grid,
  /// defined for t = 1..T (the distribution of v_t).
  std::vector<std::vector<std::vector<std::vector<double>>>> rows;

  int horizon() const { return static_cast<int>(rows.size()); }

  const std::vector<double>& row(int t, int v_prev, int bin) const {
    return rows[t - 1][v_prev][bin];
  }

  /// CDF of the period-t row up to and including grid index k.
  double cdf(int t, int v_prev, int bin, int k) const;
};

struct KernelViolation {
  std::string kind;  // "normalization" | "support" | "fosd" | "shape"
  int t = 0, bin = 0, v_low = 0, v_high = 0, index = 0;
  double value = 0.0;
};

struct KernelReport {
  std::vector<KernelViolation> normalization;
  std::vector<KernelViolation> support;
  // First (t, bin, v_low, v_high, grid index) breaking first-order
  // stochastic dominance, if any.
  std::optional<KernelViolation> fosd;

  bool ok() const {
    return normalization.empty() && support.empty() && !fosd.has_value();
  }
  std::string summary() const;
};

/// Checks normalization (sum 1 within 1e-12), full support (every entry > 0)
/// and FOSD monotonicity of the conditional rows. Throws ValidationError on a
/// structural shape mismatch.
KernelReport validate_kernel(const TransitionKernel& k, int grid_size,
                             int horizon, int bin_count);

/// Finite-difference estimate of dF(v_realized | x, bin)/dx at x = v_prev
/// (central over neighboring conditioning rows, one-sided at the ends), plus
/// the density proxy f = mass / cell width at v_realized. t in [1..T].
std::pair<double, double> kernel_cdf_sensitivity(const TransitionKernel& k,
                                                 const ValueGrid& grid, int t,
                                                 int v_realized, int v_prev,
                                                 int bin);

// Named generators; every emitted table passes validate_kernel.
TransitionKernel make_uniform_kernel(const ValueGrid& grid, int horizon,
                                     int bin_count);

/// Stays put with probability p, spreads the remainder uniformly; rows are
/// FOSD-ordered because the atom follows the conditioning value.
TransitionKernel make_sticky_kernel(const ValueGrid& grid, int horizon,
                                    int bin_count, double p);

/// Discretized Laplace location family centered at v_prev + delta * cum_loss
/// (bin lower edge), mixed with a small uniform floor for full support.
TransitionKernel make_drift_kernel(const ValueGrid& grid, int horizon,
                                   int bin_count, double delta,
                                   const BudgetBins& bins,
                                   double scale = 0.0);

}  // namespace privm
