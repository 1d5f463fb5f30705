// SPDX-License-Identifier: Apache-2.0
#include "sim.hpp"

#include <cmath>

namespace privm {

namespace {

int sample_index(const std::vector<double>& dist, double u) {
  double c = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    c += dist[j];
    if (u < c) return static_cast<int>(j);
  }
  return static_cast<int>(dist.size()) - 1;
}

}  // namespace

SimTrace run_trace(const MarketInstance& m, const MechanismRules& rules,
                   const ThresholdProfile& thresholds,
                   const StrategyOverrides& overrides, std::uint64_t seed,
                   std::uint64_t trial) {
  const int T = m.horizon;
  const int n = m.n();
  if (!overrides.empty()) {
    if (static_cast<int>(overrides.report.size()) != n)
      throw ValidationError("strategy override table must cover every owner");
    for (int i = 0; i < n; ++i)
      for (const auto& per_t : overrides.report[i])
        for (int rep : per_t)
          if (rep >= m.owners[i].grid.size())
            throw ValidationError("strategy override is off the value grid");
  }
  SimTrace trace;
  trace.active_count.assign(T + 1, 0);
  trace.owner_payoff.assign(n, 0.0);
  trace.stop_period.assign(n, T);
  trace.final_cum_loss.assign(n, 0.0);

  std::vector<SplitMix64> rng;
  rng.reserve(n);
  for (int i = 0; i < n; ++i) rng.emplace_back(stream_seed(seed, trial, i));

  std::vector<int> value(n);
  std::vector<bool> active(n, true);
  std::vector<double> ledger(n, 0.0);
  for (int i = 0; i < n; ++i)
    value[i] = sample_index(m.owners[i].kernel.f0, rng[i].uniform());

  int bin = m.bins.locate(0.0);
  for (int t = 0; t <= T; ++t) {
    std::vector<int> syms(n);
    for (int i = 0; i < n; ++i) {
      if (!active[i]) {
        syms[i] = rules.space.departed_symbol(i);
        continue;
      }
      int rep = value[i];
      if (!overrides.empty()) {
        const int o = overrides.report[i][t][value[i]];
        if (o >= 0) rep = o;
      }
      syms[i] = rep;
      ++trace.active_count[t];
    }
    const std::size_t cell = rules.space.encode(syms);
    const double eps = rules.eps_at(m, t, cell);
    trace.buyer_cost += buyer_utility_loss(eps, m.max_loss_scale);

    for (int i = 0; i < n; ++i) {
      TraceRow row;
      row.t = t;
      row.owner = i;
      row.active = active[i];
      row.report_sym = syms[i];
      row.eps = active[i] ? eps : 0.0;
      if (active[i]) {
        row.v_true = m.owners[i].grid[value[i]];
        ledger[i] += eps;
        bool gate_ok = true;
        if (m.commitment_gating && t < T)
          gate_ok = ledger[i] >= m.owners[i].budget - 1e-15;
        const bool stops =
            t == T || (gate_ok && thresholds[i].kl[t].has_value() &&
                       row.v_true >= *thresholds[i].kl[t]);
        row.stops = stops;
        row.payment = stops
                          ? rules.theta[i][t][cell] + rules.rho[i][t]
                          : rules.beta[i][t][cell];
        trace.owner_payoff[i] +=
            stage_utility(row.v_true, eps, row.payment);
        trace.buyer_cost += row.payment;
        if (stops) {
          active[i] = false;
          trace.stop_period[i] = t;
        }
      }
      row.cum_loss = ledger[i];
      trace.rows.push_back(row);
    }

    if (t == T) break;
    const int nb = m.bins.advance(bin, eps);
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      const auto& row = m.owners[i].kernel.row(t + 1, value[i], nb);
      value[i] = sample_index(row, rng[i].uniform());
    }
    bin = nb;
  }
  for (int i = 0; i < n; ++i) trace.final_cum_loss[i] = ledger[i];
  return trace;
}

SimStats monte_carlo(const MarketInstance& m, const MechanismRules& rules,
                     const ThresholdProfile& thresholds,
                     const StrategyOverrides& overrides, std::uint64_t trials,
                     std::uint64_t seed, int keep_traces) {
  if (trials < 1) throw ValidationError("monte_carlo needs trials >= 1");
  const int n = m.n();
  SimStats stats;
  stats.trials = trials;
  PairwiseSum cost_sum, cost_sq;
  std::vector<PairwiseSum> pay_sum(n), pay_sq(n), eps_sum(n);
  stats.stop_histogram.assign(
      n, std::vector<std::uint64_t>(m.horizon + 1, 0));

  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    SimTrace tr = run_trace(m, rules, thresholds, overrides, seed, trial);
    cost_sum.add(tr.buyer_cost);
    cost_sq.add(tr.buyer_cost * tr.buyer_cost);
    for (int i = 0; i < n; ++i) {
      pay_sum[i].add(tr.owner_payoff[i]);
      pay_sq[i].add(tr.owner_payoff[i] * tr.owner_payoff[i]);
      eps_sum[i].add(tr.final_cum_loss[i]);
      stats.stop_histogram[i][tr.stop_period[i]]++;
    }
    if (static_cast<int>(stats.kept_traces.size()) < keep_traces)
      stats.kept_traces.push_back(std::move(tr));
  }

  const double nt = static_cast<double>(trials);
  auto se = [&](const PairwiseSum& sq, double mean) {
    if (trials < 2) return kNaN;
    const double var =
        std::max(0.0, sq.total() / nt - mean * mean) / (nt - 1.0);
    return std::sqrt(var);
  };
  stats.buyer_cost_mean = cost_sum.total() / nt;
  stats.buyer_cost_se = se(cost_sq, stats.buyer_cost_mean);
  stats.owner_payoff_mean.resize(n);
  stats.owner_payoff_se.resize(n);
  stats.mean_cum_eps.resize(n);
  for (int i = 0; i < n; ++i) {
    stats.owner_payoff_mean[i] = pay_sum[i].total() / nt;
    stats.owner_payoff_se[i] =
        se(pay_sq[i], stats.owner_payoff_mean[i]);
    stats.mean_cum_eps[i] = eps_sum[i].total() / nt;
  }
  return stats;
}

nlohmann::json SimStats::to_json() const {
  auto num_or_null = [](double x) {
    return std::isnan(x) ? nlohmann::json() : nlohmann::json(x);
  };
  nlohmann::json owners = nlohmann::json::array();
  for (std::size_t i = 0; i < owner_payoff_mean.size(); ++i)
    owners.push_back({{"payoff_mean", owner_payoff_mean[i]},
                      {"payoff_se", num_or_null(owner_payoff_se[i])},
                      {"mean_cum_eps", mean_cum_eps[i]},
                      {"stop_histogram", stop_histogram[i]}});
  return {{"trials", trials},
          {"buyer_cost_mean", buyer_cost_mean},
          {"buyer_cost_se", num_or_null(buyer_cost_se)},
          {"owners", owners}};
}

}  // namespace privm
