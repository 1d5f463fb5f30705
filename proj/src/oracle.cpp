// SPDX-License-Identifier: Apache-2.0
#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace privm {

namespace {

// Oracle-side truthful and deviation values. mode:
//   kTruthful: report = true value, stop by value comparison
//   kFree:     report and stop chosen adversarially at every period
enum class Mode { kTruthful, kFree };

class OracleDp {
 public:
  OracleDp(const MarketInstance& m, const MechanismRules& rules,
           const BeliefModel& beliefs, int owner, Mode mode)
      : m_(m), rules_(rules), beliefs_(beliefs), owner_(owner), mode_(mode) {
    const int g = m.owners[owner].grid.size();
    value_ = Table3(m.horizon + 1, g, m.bins.count(), kNaN);
    for (int t = m.horizon; t >= 0; --t)
      for (int v = 0; v < g; ++v)
        for (int b = 0; b < m.bins.count(); ++b)
          value_.at(t, v, b) = compute(t, v, b);
  }

  double value(int t, int v, int b) const { return value_.at(t, v, b); }

  double stop_branch(int t, int v_true, int v_report) const {
    double acc = rules_.rho[owner_][t];
    const double val = m_.owners[owner_].grid[v_true];
    for (const auto& [base, p] : beliefs_.others[owner_][t]) {
      const std::size_t cell = base + v_report * rules_.space.stride[owner_];
      const double e = rules_.eps_at(m_, t, cell);
      acc += p * (-flow_loss(val, e) + rules_.theta[owner_][t][cell]);
    }
    return acc;
  }

  // continuation at bin with tabulated next-period values
  double continue_from(int t, int v_true, int v_report, int bin) const {
    const double val = m_.owners[owner_].grid[v_true];
    const int g = m_.owners[owner_].grid.size();
    double acc = 0.0;
    for (const auto& [base, p] : beliefs_.others[owner_][t]) {
      const std::size_t cell = base + v_report * rules_.space.stride[owner_];
      const double e = rules_.eps_at(m_, t, cell);
      const int nb = m_.bins.advance(bin, e);
      double cont = 0.0;
      const auto& row = m_.owners[owner_].kernel.row(t + 1, v_true, nb);
      for (int j = 0; j < g; ++j) cont += row[j] * value_.at(t + 1, j, nb);
      acc += p * (-flow_loss(val, e) + rules_.beta[owner_][t][cell] + cont);
    }
    return acc;
  }

 private:
  double compute(int t, int v, int b) {
    const int g = m_.owners[owner_].grid.size();
    const bool allowed =
        beliefs_.stop_allowed(owner_, t, m_.horizon, m_.commitment_gating);
    if (mode_ == Mode::kTruthful) {
      const double js = stop_branch(t, v, v);
      if (t == m_.horizon) return js;
      const double jc = continue_from(t, v, v, b);
      return allowed ? std::max(js, jc) : jc;
    }
    double best = -kInf;
    for (int rep = 0; rep < g; ++rep) {
      if (t == m_.horizon || allowed)
        best = std::max(best, stop_branch(t, v, rep));
      if (t < m_.horizon) best = std::max(best, continue_from(t, v, rep, b));
    }
    return best;
  }

  const MarketInstance& m_;
  const MechanismRules& rules_;
  const BeliefModel& beliefs_;
  int owner_;
  Mode mode_;
  Table3 value_;
};

}  // namespace

std::pair<double, double> one_shot_deviation_gain(
    const MarketInstance& m, const MechanismRules& rules,
    const BeliefModel& beliefs, int owner, int t, int bin, int v_true,
    int v_report) {
  OracleDp truthful(m, rules, beliefs, owner, Mode::kTruthful);
  const double dev_stop = truthful.stop_branch(t, v_true, v_report);
  const double true_stop = truthful.stop_branch(t, v_true, v_true);
  double stop_gain = dev_stop - true_stop;
  double cont_gain = kNaN;
  if (t < m.horizon) {
    const double dev_cont = truthful.continue_from(t, v_true, v_report, bin);
    const double true_cont = truthful.continue_from(t, v_true, v_true, bin);
    cont_gain = dev_cont - true_cont;
  }
  return {stop_gain, cont_gain};
}

DeviationReport max_deviation_gain(const MarketInstance& m,
                                   const MechanismRules& rules,
                                   const OracleOptions& opts) {
  BeliefModel beliefs;
  solve_fixed_point(m, rules, &beliefs);

  DeviationReport report;
  report.max_stop_gain.assign(m.n(),
                              std::vector<double>(m.horizon + 1, -kInf));
  report.max_continue_gain.assign(m.n(),
                                  std::vector<double>(m.horizon + 1, -kInf));
  report.max_gain = -kInf;
  const auto reach = reachable_bins(m, rules.sigma);

  double multi_best = -kInf;
  if (opts.multi_period) {
    if (m.horizon > 3 || m.n() > 2)
      throw CapacityError(
          "multi-period enumeration supports T <= 3 and n <= 2; got T=" +
          std::to_string(m.horizon) + " n=" + std::to_string(m.n()));
    for (const auto& o : m.owners)
      if (o.grid.size() > 4)
        throw CapacityError(
            "multi-period enumeration supports grids <= 4 points; got " +
            std::to_string(o.grid.size()));
  }

  for (int i = 0; i < m.n(); ++i) {
    OracleDp truthful(m, rules, beliefs, i, Mode::kTruthful);
    const int g = m.owners[i].grid.size();
    for (int t = 0; t <= m.horizon; ++t) {
      const bool allowed =
          beliefs.stop_allowed(i, t, m.horizon, m.commitment_gating);
      for (int bin : reach[t])
        for (int v = 0; v < g; ++v) {
          const double true_stop = truthful.stop_branch(t, v, v);
          const double true_cont =
              t < m.horizon ? truthful.continue_from(t, v, v, bin) : -kInf;
          const double true_best =
              t == m.horizon ? true_stop
              : allowed      ? std::max(true_stop, true_cont)
                             : true_cont;
          for (int rep = 0; rep < g; ++rep) {
            DeviationCell cell{i, t, bin, v, rep, 0.0, kNaN, 0.0};
            const double dev_stop = truthful.stop_branch(t, v, rep);
            cell.stop_gain = dev_stop - true_stop;
            double dev_best =
                (t == m.horizon || allowed) ? dev_stop : -kInf;
            if (t < m.horizon) {
              const double dev_cont = truthful.continue_from(t, v, rep, bin);
              cell.continue_gain = dev_cont - true_cont;
              dev_best = std::max(dev_best, dev_cont);
            }
            cell.combined_gain = dev_best - true_best;
            report.max_stop_gain[i][t] =
                std::max(report.max_stop_gain[i][t], cell.stop_gain);
            if (t < m.horizon)
              report.max_continue_gain[i][t] =
                  std::max(report.max_continue_gain[i][t], cell.continue_gain);
            if (cell.combined_gain > report.max_gain) {
              report.max_gain = cell.combined_gain;
              report.argmax = cell;
            }
            report.cells.push_back(cell);
          }
        }
    }
    if (opts.multi_period) {
      OracleDp free(m, rules, beliefs, i, Mode::kFree);
      for (int t = 0; t <= m.horizon; ++t)
        for (int bin : reach[t])
          for (int v = 0; v < g; ++v)
            multi_best = std::max(
                multi_best, free.value(t, v, bin) - truthful.value(t, v, bin));
    }
  }
  if (opts.multi_period) {
    report.best_multi_gain = multi_best;
    report.multi_beats_one_shot = multi_best > report.max_gain + 1e-8;
  }
  return report;
}

OneShotPrincipleResult verify_one_shot_principle(const MarketInstance& m,
                                                 const MechanismRules& rules) {
  OracleOptions opts;
  opts.multi_period = true;
  const DeviationReport rep = max_deviation_gain(m, rules, opts);
  OneShotPrincipleResult out;
  out.one_shot_best = rep.max_gain;
  out.multi_best = *rep.best_multi_gain;
  out.gap = out.multi_best - out.one_shot_best;
  out.holds = out.gap <= 1e-8;
  return out;
}

ThresholdOptimality verify_threshold_optimality(const MarketInstance& m,
                                                const MechanismRules& rules) {
  BeliefModel beliefs;
  ValueSolution sol = solve_fixed_point(m, rules, &beliefs);
  const auto reach = reachable_bins(m, rules.sigma);
  ThresholdOptimality out;
  for (int i = 0; i < m.n(); ++i) {
    const auto& grid = m.owners[i].grid;
    for (int t = 0; t <= m.horizon; ++t)
      for (int bin : reach[t])
        for (int v = 0; v < grid.size(); ++v) {
          const bool bellman = sol.owners[i].stop[t][bin][v] != 0;
          const auto& kl = sol.owners[i].kl[t][bin];
          const bool upset =
              t == m.horizon || (kl.has_value() && grid[v] >= *kl);
          if (bellman != upset) {
            out.agrees = false;
            const double gr = t == m.horizon
                                  ? 0.0
                                  : sol.owners[i].G.at(t, v, bin) -
                                        rules.rho[i][t];
            out.mismatches.push_back({i, t, bin, v, gr});
          }
        }
  }
  return out;
}

double strategy_value(
    const MarketInstance& m, const MechanismRules& rules,
    const BeliefModel& beliefs, int owner,
    const std::vector<std::vector<std::vector<StrategyChoice>>>& choice,
    int t, int v, int bin) {
  const auto& grid = m.owners[owner].grid;
  const int g = grid.size();
  const auto stride = rules.space.stride[owner];
  const StrategyChoice c = choice[t][v][bin];
  const bool allowed =
      beliefs.stop_allowed(owner, t, m.horizon, m.commitment_gating);
  const bool stopping = t == m.horizon || (c.stop && allowed);
  double acc = stopping ? rules.rho[owner][t] : 0.0;
  for (const auto& [base, p] : beliefs.others[owner][t]) {
    const std::size_t cell = base + c.report * stride;
    const double e = rules.eps_at(m, t, cell);
    double term = -flow_loss(grid[v], e);
    if (stopping) {
      term += rules.theta[owner][t][cell];
    } else {
      term += rules.beta[owner][t][cell];
      const int nb = m.bins.advance(bin, e);
      const auto& row = m.owners[owner].kernel.row(t + 1, v, nb);
      for (int j = 0; j < g; ++j)
        term += row[j] * strategy_value(m, rules, beliefs, owner, choice,
                                        t + 1, j, nb);
    }
    acc += p * term;
  }
  return acc;
}

nlohmann::json DeviationReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : cells)
    rows.push_back({{"owner", c.owner},
                    {"t", c.t},
                    {"bin", c.bin},
                    {"v_true", c.v_true},
                    {"v_report", c.v_report},
                    {"stop_gain", c.stop_gain},
                    {"continue_gain",
                     std::isnan(c.continue_gain)
                         ? nlohmann::json()
                         : nlohmann::json(c.continue_gain)},
                    {"combined_gain", c.combined_gain}});
  nlohmann::json j{{"max_gain", max_gain},
                   {"argmax",
                    {{"owner", argmax.owner},
                     {"t", argmax.t},
                     {"bin", argmax.bin},
                     {"v_true", argmax.v_true},
                     {"v_report", argmax.v_report}}},
                   {"cells", rows}};
  if (best_multi_gain) {
    j["best_multi_gain"] = *best_multi_gain;
    j["multi_beats_one_shot"] = multi_beats_one_shot;
  }
  return j;
}

}  // namespace privm
