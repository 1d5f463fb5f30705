// SPDX-License-Identifier: Apache-2.0
#include "rent.hpp"

#include <cmath>

namespace privm {

namespace {

// One forward pass from (t, v, bin) accumulating the envelope sum for every
// horizon tau in [t..T] at once. out[tau - t] receives the partial sums.
void envelope_all_taus(const MarketInstance& m,
                       const std::vector<std::vector<int>>& sigma,
                       const BeliefModel& beliefs, int owner, int t, int v,
                       int bin, std::vector<double>& out) {
  const int T = m.horizon;
  const auto& grid = m.owners[owner].grid;
  const auto& kernel = m.owners[owner].kernel;
  const int g = grid.size();
  const int B = m.bins.count();
  const ReportSpace space(m);
  const auto stride = space.stride[owner];

  out.assign(T - t + 1, 0.0);
  // G-weighted measure over (value, bin)
  std::vector<std::vector<double>> cur(g, std::vector<double>(B, 0.0));
  std::vector<std::vector<double>> next(g, std::vector<double>(B, 0.0));
  cur[v][bin] = 1.0;

  double running = 0.0;
  for (int s = t; s <= T; ++s) {
    double term = 0.0;
    for (int w = 0; w < g; ++w)
      for (int b = 0; b < B; ++b) {
        const double wt = cur[w][b];
        if (wt == 0.0) continue;
        double a = 0.0;
        for (const auto& [base, p] : beliefs.others[owner][s]) {
          const double e = m.eps_grid[sigma[s][base + w * stride]];
          a += p * (1.0 - std::exp(e));
        }
        term += wt * a;
      }
    running += term;
    out[s - t] = running;
    if (s == T) break;

    for (auto& col : next) std::fill(col.begin(), col.end(), 0.0);
    for (int w = 0; w < g; ++w)
      for (int b = 0; b < B; ++b) {
        const double wt = cur[w][b];
        if (wt == 0.0) continue;
        for (const auto& [base, p] : beliefs.others[owner][s]) {
          const double e = m.eps_grid[sigma[s][base + w * stride]];
          const int nb = m.bins.advance(b, e);
          if (g == 1) continue;  // degenerate grid: no type sensitivity
          const auto& row = kernel.row(s + 1, w, nb);
          for (int j = 0; j < g; ++j) {
            if (row[j] <= 0.0) continue;
            const auto [dF, f] =
                kernel_cdf_sensitivity(kernel, grid, s + 1, j, w, nb);
            next[j][nb] += wt * p * row[j] * (-dF / f);
          }
        }
      }
    cur.swap(next);
  }
}

}  // namespace

double envelope_derivative(const MarketInstance& m,
                           const std::vector<std::vector<int>>& sigma,
                           const BeliefModel& beliefs, int owner, int t,
                           int v, int bin, int tau) {
  if (tau < t || tau > m.horizon)
    throw ValidationError("envelope horizon tau must lie in [t, T]");
  std::vector<double> sums;
  envelope_all_taus(m, sigma, beliefs, owner, t, v, bin, sums);
  return sums[tau - t];
}

RentTable::RentTable(const MarketInstance& m,
                     const std::vector<std::vector<int>>& sigma,
                     const BeliefModel& beliefs)
    : m_(&m) {
  const int T = m.horizon;
  const int n = m.n();
  integrand_.resize(n);
  lam_top_.resize(n);
  sup_lam_.resize(n);
  taus_.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& grid = m.owners[i].grid;
    const int g = grid.size();
    integrand_[i].resize(T + 1);
    lam_top_[i].resize(T + 1);
    sup_lam_[i].resize(T + 1);
    taus_[i].resize(T + 1);
    for (int t = 0; t <= T; ++t) {
      taus_[i][t].clear();
      for (int tau = t; tau <= T; ++tau)
        if (beliefs.stop_allowed(i, tau, T, m.commitment_gating))
          taus_[i][t].push_back(tau);

      integrand_[i][t].assign(g, {});
      const int bin = beliefs.path_bin[t];
      for (int x = 0; x < g; ++x)
        envelope_all_taus(m, sigma, beliefs, i, t, x, bin,
                          integrand_[i][t][x]);

      // Lambda(v, v_bar; tau): integrate the integrand from the top anchor
      // down; trapezoid keeps Lambda(v_bar, .) = 0 exact.
      lam_top_[i][t].assign(g, std::vector<double>(T - t + 1, 0.0));
      for (int tau = t; tau <= T; ++tau) {
        double acc = 0.0;
        lam_top_[i][t][g - 1][tau - t] = 0.0;
        for (int k = g - 2; k >= 0; --k) {
          const double seg = (grid[k + 1] - grid[k]) *
                             (integrand_[i][t][k][tau - t] +
                              integrand_[i][t][k + 1][tau - t]) /
                             2.0;
          acc -= seg;  // integral from v_bar down to grid[k]
          lam_top_[i][t][k][tau - t] = acc;
        }
      }
      sup_lam_[i][t].assign(g, -kInf);
      for (int v = 0; v < g; ++v)
        for (int tau : taus_[i][t])
          sup_lam_[i][t][v] =
              std::max(sup_lam_[i][t][v], lam_top_[i][t][v][tau - t]);
    }
  }
}

double information_rent(const MarketInstance& m,
                        const std::vector<std::vector<int>>& sigma,
                        const BeliefModel& beliefs, int owner, int t, int v,
                        int anchor, int tau) {
  return RentTable(m, sigma, beliefs).lam(owner, t, v, anchor, tau);
}

double RentTable::integrand(int owner, int t, int x, int tau) const {
  return integrand_[owner][t][x][tau - t];
}

double RentTable::lam(int owner, int t, int v, int anchor, int tau) const {
  if (v == anchor) return 0.0;
  const auto& grid = m_->owners[owner].grid;
  const int lo = std::min(v, anchor);
  const int hi = std::max(v, anchor);
  double acc = 0.0;
  for (int k = lo; k < hi; ++k)
    acc += (grid[k + 1] - grid[k]) *
           (integrand_[owner][t][k][tau - t] +
            integrand_[owner][t][k + 1][tau - t]) /
           2.0;
  return v > anchor ? acc : -acc;
}

}  // namespace privm
