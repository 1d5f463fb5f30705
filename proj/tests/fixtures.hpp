// SPDX-License-Identifier: Apache-2.0
//
// Instance and sigma builders shared by the unit and acceptance suites.
#pragma once

#include <vector>

#include "buyer.hpp"
#include "oracle.hpp"
#include "payments.hpp"
#include "sim.hpp"

namespace fixtures {

using namespace privm;

inline MarketInstance one_owner(int T, std::vector<double> grid_pts,
                                std::vector<double> eps_pts, int bins,
                                double L = 4.0, double b = 0.5) {
  MarketInstance m;
  m.horizon = T;
  m.eps_grid.pts = std::move(eps_pts);
  m.bins = BudgetBins::uniform((T + 1) * m.eps_grid.cap(), bins);
  m.max_loss_scale = L;
  m.participation_pay = b;
  OwnerSpec o;
  o.grid.pts = std::move(grid_pts);
  o.budget = (T + 1) * m.eps_grid.cap();
  o.kernel = make_uniform_kernel(o.grid, T, bins);
  m.owners.push_back(std::move(o));
  m.validate();
  return m;
}

/// Random full-support FOSD kernel: a sticky/drift mixture with seeded
/// parameters. Also randomizes f0.
inline void randomize_kernel(MarketInstance& m, int owner, SplitMix64& rng) {
  auto& o = m.owners[owner];
  const double p = 0.25 + 0.5 * rng.uniform();
  const double scale =
      0.2 * (o.grid.hi() - o.grid.lo()) * (0.5 + rng.uniform());
  TransitionKernel sticky =
      make_sticky_kernel(o.grid, m.horizon, m.bins.count(), p);
  TransitionKernel drift = make_drift_kernel(o.grid, m.horizon,
                                             m.bins.count(), 0.0, m.bins,
                                             scale);
  const double mix = rng.uniform();
  for (int t = 1; t <= m.horizon; ++t)
    for (int vp = 0; vp < o.grid.size(); ++vp)
      for (int bin = 0; bin < m.bins.count(); ++bin)
        for (int j = 0; j < o.grid.size(); ++j)
          sticky.rows[t - 1][vp][bin][j] =
              mix * sticky.rows[t - 1][vp][bin][j] +
              (1.0 - mix) * drift.rows[t - 1][vp][bin][j];
  // random positive f0
  double sum = 0.0;
  for (auto& f : sticky.f0) {
    f = 0.2 + rng.uniform();
    sum += f;
  }
  for (auto& f : sticky.f0) f /= sum;
  o.kernel = std::move(sticky);
}

/// Canonical monotone fixture: n=1, T=3, 6-point grid, strict-FOSD kernel.
inline MarketInstance canonical() {
  MarketInstance m = one_owner(3, ValueGrid::linspace(1.0, 2.0, 6).pts,
                               {0.10, 0.20, 0.30, 0.40, 0.50}, 4);
  m.owners[0].kernel = make_sticky_kernel(m.owners[0].grid, 3, 4, 0.55);
  return m;
}

/// Randomized FOSD-valid fixture for the threshold/monotonicity criteria.
inline MarketInstance random_fosd(std::uint64_t seed) {
  SplitMix64 rng(seed * 0x9e3779b9ULL + 17);
  MarketInstance m = one_owner(3, ValueGrid::linspace(1.0, 2.0, 6).pts,
                               {0.10, 0.20, 0.30, 0.40, 0.50}, 4,
                               3.0 + 2.0 * rng.uniform());
  randomize_kernel(m, 0, rng);
  return m;
}

/// Tiny fixture for exhaustive searches: n=1, T=2, 3-point grid.
inline MarketInstance tiny(std::uint64_t seed) {
  SplitMix64 rng(seed * 0x51ab1eedULL + 3);
  MarketInstance m = one_owner(2, {1.0, 1.4, 2.0}, {0.20, 0.35, 0.50}, 3);
  randomize_kernel(m, 0, rng);
  return m;
}

/// Two owners, T=1, 3-point grids (the Monte Carlo criterion fixture).
inline MarketInstance two_owner() {
  MarketInstance m;
  m.horizon = 1;
  m.eps_grid.pts = {0.2, 0.3, 0.4};
  m.bins = BudgetBins::uniform(2 * 0.4, 4);
  m.max_loss_scale = 4.0;
  m.participation_pay = 0.5;
  for (int i = 0; i < 2; ++i) {
    OwnerSpec o;
    o.grid.pts = i == 0 ? std::vector<double>{1.0, 1.5, 2.0}
                        : std::vector<double>{0.8, 1.2, 1.9};
    o.budget = 2 * 0.4;
    o.kernel = make_sticky_kernel(o.grid, 1, 4, 0.5);
    m.owners.push_back(std::move(o));
  }
  m.validate();
  return m;
}

/// 64-point-grid fixture with a smooth strict-FOSD kernel (envelope and
/// identity criteria).
inline MarketInstance dense64(int T = 2) {
  MarketInstance m = one_owner(T, ValueGrid::linspace(1.0, 2.0, 64).pts,
                               {0.15, 0.30, 0.45}, 3, 5.0, 1.0);
  m.owners[0].kernel =
      make_drift_kernel(m.owners[0].grid, T, 3, 0.0, m.bins, 0.30);
  return m;
}

inline std::vector<std::vector<int>> constant_sigma(const MarketInstance& m,
                                                    double eps) {
  return decode_sigma(m, SigmaSpec::constant(m, eps));
}

/// Random report-independent sigma (per-period constants).
inline std::vector<std::vector<int>> random_separable_sigma(
    const MarketInstance& m, SplitMix64& rng) {
  SigmaSpec s;
  s.family = SigmaSpec::Family::Separable;
  for (int t = 0; t <= m.horizon; ++t)
    s.per_period.push_back(static_cast<int>(rng.below(m.eps_grid.size())));
  return decode_sigma(m, s);
}

/// Mildly decreasing affine-in-mean-report sigma (more protection for higher
/// reported preference), within the theorem's DIC-friendly direction.
inline std::vector<std::vector<int>> decreasing_affine_sigma(
    const MarketInstance& m, SplitMix64& rng) {
  SigmaSpec s;
  s.family = SigmaSpec::Family::AffineMeanReport;
  const double span = m.owners[0].grid.hi() - m.owners[0].grid.lo();
  const double eps_span = m.eps_grid.cap() - m.eps_grid[0];
  for (int t = 0; t <= m.horizon; ++t) {
    const double slope = -0.5 * eps_span / span * rng.uniform();
    s.slope.push_back(slope);
    s.intercept.push_back(m.eps_grid[0] + eps_span * (0.4 + 0.5 * rng.uniform()) -
                          slope * m.owners[0].grid.lo());
  }
  return decode_sigma(m, s);
}

/// Assignment rule that rewards high reports with much lower epsilon, paired
/// with zero payments: the classic profitable misreport.
inline MechanismRules adversarial_zero_payment_rules(const MarketInstance& m) {
  SigmaSpec s;
  s.family = SigmaSpec::Family::AffineMeanReport;
  const double span = m.owners[0].grid.hi() - m.owners[0].grid.lo();
  const double eps_span = m.eps_grid.cap() - m.eps_grid[0];
  for (int t = 0; t <= m.horizon; ++t) {
    s.slope.push_back(-eps_span / span);
    s.intercept.push_back(m.eps_grid.cap() + eps_span / span * m.owners[0].grid.lo());
  }
  return MechanismRules::zero_payments(m, decode_sigma(m, s));
}

}  // namespace fixtures
