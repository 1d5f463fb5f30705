// SPDX-License-Identifier: Apache-2.0
#include "solver.hpp"

#include <algorithm>
#include <cmath>

namespace privm {

namespace {

using Cells = std::vector<std::pair<std::size_t, double>>;

}  // namespace

ValueSolution solve_value_function(const MarketInstance& m,
                                   const MechanismRules& rules,
                                   const BeliefModel& beliefs) {
  const int T = m.horizon;
  const int B = m.bins.count();
  ValueSolution sol;
  sol.owners.resize(m.n());

  for (int i = 0; i < m.n(); ++i) {
    const auto& grid = m.owners[i].grid;
    const int g = grid.size();
    auto& out = sol.owners[i];
    out.U = Table3(T + 1, g, B, kNaN);
    out.J_stop = Table3(T + 1, g, B, kNaN);
    out.J_cont = Table3(T + 1, g, B, kNaN);
    out.G = Table3(T + 1, g, B, kNaN);
    out.stop.assign(T + 1, std::vector<std::vector<std::uint8_t>>(
                               B, std::vector<std::uint8_t>(g, 0)));
    out.kl.assign(T + 1, std::vector<std::optional<double>>(B));
    out.kr.assign(T + 1, std::vector<std::optional<double>>(B));

    const auto stride = rules.space.stride[i];
    for (int t = T; t >= 0; --t) {
      const Cells& cells = beliefs.others[i][t];
      const bool allowed =
          beliefs.stop_allowed(i, t, T, m.commitment_gating);
      for (int v = 0; v < g; ++v) {
        const double val = grid[v];
        double js = rules.rho[i][t];
        for (const auto& [base, p] : cells) {
          const std::size_t cell = base + v * stride;
          const double e = rules.eps_at(m, t, cell);
          js += p * (-flow_loss(val, e) + rules.theta[i][t][cell]);
        }
        for (int bin = 0; bin < B; ++bin) {
          out.J_stop.at(t, v, bin) = js;
          if (t == T) {
            out.U.at(t, v, bin) = js;
            out.stop[t][bin][v] = 1;
            continue;
          }
          double jc = 0.0;
          for (const auto& [base, p] : cells) {
            const std::size_t cell = base + v * stride;
            const double e = rules.eps_at(m, t, cell);
            const int nb = m.bins.advance(bin, e);
            double cont = 0.0;
            const auto& row = m.owners[i].kernel.row(t + 1, v, nb);
            for (int j = 0; j < g; ++j)
              cont += row[j] * out.U.at(t + 1, j, nb);
            jc += p * (-flow_loss(val, e) + rules.beta[i][t][cell] + cont);
          }
          out.J_cont.at(t, v, bin) = jc;
          out.G.at(t, v, bin) = jc - js + rules.rho[i][t];
          out.U.at(t, v, bin) = allowed ? std::max(js, jc) : jc;
          out.stop[t][bin][v] =
              (allowed && js - jc > kTieTol) ? 1 : 0;
        }
      }
    }

    // threshold extraction; terminal convention kl(T) = kr(T) = v_lower
    for (int t = 0; t <= T; ++t)
      for (int bin = 0; bin < B; ++bin) {
        if (t == T) {
          out.kl[t][bin] = grid.lo();
          out.kr[t][bin] = grid.lo();
          continue;
        }
        const auto& flags = out.stop[t][bin];
        int first = -1;
        bool upset = true;
        for (int v = 0; v < g; ++v) {
          if (flags[v] && first < 0) first = v;
          if (first >= 0 && !flags[v]) upset = false;
        }
        if (first >= 0) out.kl[t][bin] = grid[first];
        if (!upset &&
            std::find(out.non_threshold_t.begin(), out.non_threshold_t.end(),
                      t) == out.non_threshold_t.end())
          out.non_threshold_t.push_back(t);
        int band = -1;
        for (int v = 0; v < g; ++v)
          if (std::abs(out.G.at(t, v, bin) - rules.rho[i][t]) <= kTieTol)
            band = v;
        if (band >= 0)
          out.kr[t][bin] = grid[band];
        else
          out.kr[t][bin] = out.kl[t][bin];
      }
  }
  return sol;
}

ThresholdProfile collapse_thresholds(const MarketInstance& m,
                                     const ValueSolution& sol,
                                     const BeliefModel& beliefs) {
  ThresholdProfile p(m.n());
  for (int i = 0; i < m.n(); ++i) {
    p[i].kl.resize(m.horizon + 1);
    p[i].kr.resize(m.horizon + 1);
    for (int t = 0; t <= m.horizon; ++t) {
      const int bin = beliefs.path_bin[t];
      p[i].kl[t] = sol.owners[i].kl[t][bin];
      p[i].kr[t] = sol.owners[i].kr[t][bin];
    }
  }
  return p;
}

namespace {
bool same_profile(const ThresholdProfile& a, const ThresholdProfile& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].kl != b[i].kl) return false;
  return true;
}
}  // namespace

ValueSolution solve_fixed_point(const MarketInstance& m,
                                const MechanismRules& rules,
                                BeliefModel* beliefs_out) {
  ThresholdProfile th = never_stop_profile(m);
  ValueSolution sol;
  BeliefModel beliefs;
  constexpr int kMaxIter = 50;
  for (int iter = 1; iter <= kMaxIter; ++iter) {
    beliefs = build_beliefs(m, rules.sigma, th);
    sol = solve_value_function(m, rules, beliefs);
    ThresholdProfile next = collapse_thresholds(m, sol, beliefs);
    sol.iterations = iter;
    if (same_profile(next, th)) {
      sol.converged = true;
      if (beliefs_out) *beliefs_out = std::move(beliefs);
      return sol;
    }
    th = std::move(next);
  }
  sol.converged = false;
  if (beliefs_out) *beliefs_out = std::move(beliefs);
  return sol;
}

std::vector<int> stopping_region(const MarketInstance&,
                                 const ValueSolution& sol, int owner, int t,
                                 int bin) {
  std::vector<int> region;
  const auto& flags = sol.owners[owner].stop[t][bin];
  for (int v = 0; v < static_cast<int>(flags.size()); ++v)
    if (flags[v]) region.push_back(v);
  return region;
}

double g_incentive(const ValueSolution& sol, int owner, int t, int v,
                   int bin) {
  if (t >= sol.owners[owner].G.periods() - 1)
    throw ValidationError("G is undefined at the horizon end (stop is forced)");
  return sol.owners[owner].G.at(t, v, bin);
}

double interim_payoff(const MarketInstance& m, const MechanismRules& rules,
                      const BeliefModel& beliefs, int owner, int t, int v,
                      int bin, int tau) {
  return FixedHorizonEvaluator(m, rules, beliefs, owner)
      .interim(t, v, bin, tau);
}

FixedHorizonEvaluator::FixedHorizonEvaluator(const MarketInstance& m,
                                             const MechanismRules& rules,
                                             const BeliefModel& beliefs,
                                             int owner)
    : m_(m), rules_(rules), beliefs_(beliefs), owner_(owner) {
  const int T = m.horizon;
  const int g = m.owners[owner].grid.size();
  const int B = m.bins.count();
  w_.resize(T + 1);
  for (int tau = 0; tau <= T; ++tau) {
    auto& w = w_[tau];
    w.assign(tau + 1, Table3());
    w[tau] = Table3(1, g, B, 0.0);
    for (int v = 0; v < g; ++v) {
      const double sn = stop_now(tau, v);
      for (int bin = 0; bin < B; ++bin) w[tau].at(0, v, bin) = sn;
    }
    for (int s = tau - 1; s >= 0; --s) {
      w[s] = Table3(1, g, B, 0.0);
      for (int v = 0; v < g; ++v)
        for (int bin = 0; bin < B; ++bin) {
          double acc = 0.0;
          for (const auto& [base, p] : beliefs_.others[owner_][s]) {
            const std::size_t cell =
                base + v * rules_.space.stride[owner_];
            const double e = rules_.eps_at(m_, s, cell);
            const int nb = m_.bins.advance(bin, e);
            double cont = 0.0;
            const auto& row = m_.owners[owner_].kernel.row(s + 1, v, nb);
            for (int j = 0; j < g; ++j)
              cont += row[j] * w[s + 1].at(0, j, nb);
            acc += p * (-flow_loss(m_.owners[owner_].grid[v], e) +
                        rules_.beta[owner_][s][cell] + cont);
          }
          w[s].at(0, v, bin) = acc;
        }
    }
  }
}

double FixedHorizonEvaluator::stop_now(int t, int v) const {
  double acc = rules_.rho[owner_][t];
  const double val = m_.owners[owner_].grid[v];
  for (const auto& [base, p] : beliefs_.others[owner_][t]) {
    const std::size_t cell = base + v * rules_.space.stride[owner_];
    const double e = rules_.eps_at(m_, t, cell);
    acc += p * (-flow_loss(val, e) + rules_.theta[owner_][t][cell]);
  }
  return acc;
}

double FixedHorizonEvaluator::continue_term(int t, int v_true,
                                            std::size_t cell, int bin,
                                            int tau) const {
  const double e = rules_.eps_at(m_, t, cell);
  const int nb = m_.bins.advance(bin, e);
  double cont = 0.0;
  const auto& row = m_.owners[owner_].kernel.row(t + 1, v_true, nb);
  const int g = m_.owners[owner_].grid.size();
  for (int j = 0; j < g; ++j) cont += row[j] * w_[tau][t + 1].at(0, j, nb);
  return -flow_loss(m_.owners[owner_].grid[v_true], e) + cont;
}

double FixedHorizonEvaluator::interim(int t, int v, int bin, int tau) const {
  if (tau < t)
    throw ValidationError("stopping horizon tau must be at least t");
  if (tau == t) return stop_now(t, v);
  double acc = 0.0;
  for (const auto& [base, p] : beliefs_.others[owner_][t]) {
    const std::size_t cell = base + v * rules_.space.stride[owner_];
    acc += p * (continue_term(t, v, cell, bin, tau) +
                rules_.beta[owner_][t][cell]);
  }
  return acc;
}

double FixedHorizonEvaluator::jbar(int t, int v_true, int v_hat, int bin,
                                   int tau) const {
  if (tau < t)
    throw ValidationError("stopping horizon tau must be at least t");
  double acc = 0.0;
  const double val = m_.owners[owner_].grid[v_true];
  for (const auto& [base, p] : beliefs_.others[owner_][t]) {
    const std::size_t cell = base + v_hat * rules_.space.stride[owner_];
    if (tau == t) {
      const double e = rules_.eps_at(m_, t, cell);
      acc += p * (-flow_loss(val, e) + rules_.theta[owner_][t][cell]);
    } else {
      acc += p * continue_term(t, v_true, cell, bin, tau);
    }
  }
  if (tau == t) acc += rules_.rho[owner_][t];
  return acc;
}

double FixedHorizonEvaluator::jbar_at_cell(int t, int v_true, int v_hat,
                                           std::size_t others_cell, int bin,
                                           int tau) const {
  if (tau < t)
    throw ValidationError("stopping horizon tau must be at least t");
  const double val = m_.owners[owner_].grid[v_true];
  const std::size_t cell =
      others_cell + v_hat * rules_.space.stride[owner_];
  if (tau == t) {
    const double e = rules_.eps_at(m_, t, cell);
    return -flow_loss(val, e) + rules_.theta[owner_][t][cell] +
           rules_.rho[owner_][t];
  }
  return continue_term(t, v_true, cell, bin, tau);
}

std::vector<int> FixedHorizonEvaluator::allowed_taus(int t) const {
  std::vector<int> taus;
  for (int tau = t; tau <= m_.horizon; ++tau)
    if (beliefs_.stop_allowed(owner_, tau, m_.horizon, m_.commitment_gating))
      taus.push_back(tau);
  return taus;
}

}  // namespace privm
