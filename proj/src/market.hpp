// SPDX-License-Identifier: Apache-2.0
//
// Problem data: owners (grids, kernels, budgets), the shared epsilon grid,
// budget binning, buyer loss scale, and the flow loss / utility primitives.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kernel.hpp"
#include "ledger.hpp"

#include "json.hpp"

namespace privm {

/// Monetary flow loss v * (exp(eps) - 1) from one period of eps-level usage.
inline double flow_loss(double v, double eps) { return v * std::expm1(eps); }

/// Owner's period utility: compensation minus flow loss.
inline double stage_utility(double v, double eps, double pay) {
  return -flow_loss(v, eps) + pay;
}

/// Buyer's accuracy loss L * exp(-eps); L is the maximum loss as eps -> 0.
inline double buyer_utility_loss(double eps, double L) {
  return L * std::exp(-eps);
}

struct OwnerSpec {
  ValueGrid grid;
  TransitionKernel kernel;
  std::string intrinsic;  // opaque intrinsic-preference label
  double budget = 0.0;    // tolerance B = lambda(intrinsic), applied upstream
};

struct OptimizerConfig {
  std::string family = "separable";
  int starts = 3;
  int sweeps = 25;
  std::uint64_t seed = 1;
  double tolerance = 1e-8;
  // explicit sigma candidates for the "candidates" family
  nlohmann::json candidates = nlohmann::json::array();
};

struct MarketInstance {
  int horizon = 0;  // final period index T; periods are {0..T}
  std::vector<OwnerSpec> owners;
  EpsilonGrid eps_grid;
  BudgetBins bins;
  double max_loss_scale = 1.0;     // L
  double participation_pay = 0.0;  // b
  bool commitment_gating = false;
  bool allow_degenerate = false;
  OptimizerConfig optimizer;

  int n() const { return static_cast<int>(owners.size()); }

  /// Structural validation; kernel assumption checks live in validate_kernel.
  void validate() const;

  /// Per-owner kernel reports (Assumptions 4.1/4.2).
  std::vector<KernelReport> validate_kernels() const;

  static MarketInstance from_json(const nlohmann::json& j);
  static MarketInstance from_file(const std::string& path);
};

}  // namespace privm
