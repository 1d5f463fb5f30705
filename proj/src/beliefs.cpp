// SPDX-License-Identifier: Apache-2.0
#include "beliefs.hpp"

#include <set>

namespace privm {

std::vector<std::vector<int>> reachable_bins(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma) {
  std::vector<std::vector<int>> reach(m.horizon + 1);
  std::set<int> cur{m.bins.locate(0.0)};
  for (int t = 0; t <= m.horizon; ++t) {
    reach[t].assign(cur.begin(), cur.end());
    std::set<int> next;
    for (int b : cur) {
      std::set<int> eps_idx(sigma[t].begin(), sigma[t].end());
      for (int e : eps_idx) next.insert(m.bins.advance(b, m.eps_grid[e]));
    }
    cur.swap(next);
  }
  return reach;
}

ThresholdProfile never_stop_profile(const MarketInstance& m) {
  ThresholdProfile p(m.n());
  for (auto& o : p) {
    o.kl.assign(m.horizon + 1, std::nullopt);
    o.kr.assign(m.horizon + 1, std::nullopt);
  }
  return p;
}

namespace {

bool stops_at(const OwnerThresholds& th, double v, int t, int horizon) {
  if (t == horizon) return true;
  if (!th.kl[t].has_value()) return false;
  return v >= *th.kl[t];
}

}  // namespace

BeliefModel build_beliefs(const MarketInstance& m,
                          const std::vector<std::vector<int>>& sigma,
                          const std::optional<ThresholdProfile>& thresholds) {
  const int T = m.horizon;
  const int n = m.n();
  const ReportSpace space(m);
  const ThresholdProfile th =
      thresholds.has_value() ? *thresholds : never_stop_profile(m);

  BeliefModel b;
  b.marginal.assign(n, std::vector<std::vector<double>>(T + 1));
  b.survival.assign(n, std::vector<double>(T + 1, 0.0));
  b.expected_eps.assign(T + 1, 0.0);
  b.expected_cum.assign(T + 1, 0.0);
  b.path_bin.assign(T + 1, 0);
  b.commitment_t.assign(n, -1);
  b.others.assign(
      n, std::vector<std::vector<std::pair<std::size_t, double>>>(T + 1));
  b.joint.assign(T + 1, {});

  for (int i = 0; i < n; ++i) {
    auto& m0 = b.marginal[i][0];
    m0.assign(space.radix[i], 0.0);
    for (int k = 0; k < m.owners[i].grid.size(); ++k)
      m0[k] = m.owners[i].kernel.f0[k];
  }
  b.path_bin[0] = m.bins.locate(0.0);

  // commitment periods come from the expected path, so they are filled as the
  // pass advances; gating at period t only needs cumulative loss through t,
  // which is known by then
  double cum = 0.0;
  for (int t = 0; t <= T; ++t) {
    for (int i = 0; i < n; ++i) {
      double alive = 0.0;
      for (int k = 0; k < m.owners[i].grid.size(); ++k)
        alive += b.marginal[i][t][k];
      b.survival[i][t] = alive;
    }

    // joint and per-owner "others" cell distributions at t
    auto product_cells = [&](int skip_owner) {
      std::vector<std::pair<std::size_t, double>> cells{{0, 1.0}};
      for (int j = 0; j < n; ++j) {
        if (j == skip_owner) continue;
        std::vector<std::pair<std::size_t, double>> next;
        next.reserve(cells.size() * space.radix[j]);
        for (const auto& [base, p] : cells)
          for (int sym = 0; sym < space.radix[j]; ++sym) {
            const double q = b.marginal[j][t][sym];
            if (q > 0.0)
              next.emplace_back(base + sym * space.stride[j], p * q);
          }
        cells.swap(next);
      }
      return cells;
    };
    b.joint[t] = product_cells(-1);
    for (int i = 0; i < n; ++i) b.others[i][t] = product_cells(i);

    double e = 0.0;
    for (const auto& [cell, p] : b.joint[t])
      e += p * m.eps_grid[sigma[t][cell]];
    b.expected_eps[t] = e;
    cum += e;
    b.expected_cum[t] = cum;
    for (int i = 0; i < n; ++i)
      if (b.commitment_t[i] < 0 && cum >= m.owners[i].budget)
        b.commitment_t[i] = t;

    if (t == T) break;
    const int next_bin = m.bins.advance(b.path_bin[t], e);
    b.path_bin[t + 1] = next_bin;

    for (int i = 0; i < n; ++i) {
      const auto& grid = m.owners[i].grid;
      const auto& cur = b.marginal[i][t];
      std::vector<double> next(space.radix[i], 0.0);
      const int dep = space.departed_symbol(i);
      next[dep] = cur[dep];
      const bool may_stop = b.stop_allowed(i, t, T, m.commitment_gating);
      for (int k = 0; k < grid.size(); ++k) {
        if (cur[k] <= 0.0) continue;
        if (may_stop && stops_at(th[i], grid[k], t, T)) {
          next[dep] += cur[k];
        } else {
          const auto& row = m.owners[i].kernel.row(t + 1, k, next_bin);
          for (int j = 0; j < grid.size(); ++j) next[j] += cur[k] * row[j];
        }
      }
      b.marginal[i][t + 1] = std::move(next);
    }
  }
  return b;
}

}  // namespace privm
