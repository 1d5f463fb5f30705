// SPDX-License-Identifier: Apache-2.0
#include "buyer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace privm {

namespace {

bool threshold_stop(const OwnerThresholds& th, double v, int t, int T) {
  if (t == T) return true;
  return th.kl[t].has_value() && v >= *th.kl[t];
}

// Exact buyer-cost tree walk. State: per-owner symbol (value index or
// departed), the binned epsilon state, and the exact cumulative loss used by
// commitment gating. Paths multiply out the kernel rows, so this is the
// product-chain enumeration; the caller guards the path count.
struct CostWalker {
  const MarketInstance& m;
  const MechanismRules& rules;
  const ThresholdProfile& th;
  double total = 0.0;

  void walk(int t, std::vector<int> syms, int bin, double cum, double prob) {
    const int T = m.horizon;
    const std::size_t cell = rules.space.encode(syms);
    const double eps = rules.eps_at(m, t, cell);
    double period_cost = buyer_utility_loss(eps, m.max_loss_scale);
    std::vector<int> stopping(m.n(), 0);
    for (int i = 0; i < m.n(); ++i) {
      const int sym = syms[i];
      if (sym == rules.space.departed_symbol(i)) continue;
      const double v = m.owners[i].grid[sym];
      bool gate_ok = true;
      if (m.commitment_gating && t < T)
        gate_ok = cum + eps >= m.owners[i].budget - 1e-15;
      const bool stops = t == T || (gate_ok && threshold_stop(th[i], v, t, T));
      stopping[i] = stops ? 1 : 0;
      period_cost += stops ? rules.theta[i][t][cell] + rules.rho[i][t]
                           : rules.beta[i][t][cell];
    }
    total += prob * period_cost;
    if (t == T) return;

    const int nb = m.bins.advance(bin, eps);
    const double ncum = cum + eps;
    // advance surviving owners jointly through their kernels
    std::function<void(int, std::vector<int>&, double)> branch =
        [&](int i, std::vector<int>& next, double p) {
          if (i == m.n()) {
            walk(t + 1, next, nb, ncum, p);
            return;
          }
          if (syms[i] == rules.space.departed_symbol(i) || stopping[i]) {
            next[i] = rules.space.departed_symbol(i);
            branch(i + 1, next, p);
            return;
          }
          const auto& row = m.owners[i].kernel.row(t + 1, syms[i], nb);
          for (int j = 0; j < m.owners[i].grid.size(); ++j) {
            if (row[j] <= 0.0) continue;
            next[i] = j;
            branch(i + 1, next, p * row[j]);
          }
        };
    std::vector<int> next(m.n(), 0);
    branch(0, next, prob);
  }
};

double estimate_paths(const MarketInstance& m) {
  double paths = 1.0;
  for (const auto& o : m.owners) paths *= o.grid.size();
  double per_period = paths;
  for (int t = 0; t < m.horizon; ++t) paths *= per_period;
  return paths;
}

}  // namespace

CostEstimate direct_cost(const MarketInstance& m, const MechanismRules& rules,
                         const ThresholdProfile& thresholds) {
  if (estimate_paths(m) <= 2e6) {
    CostWalker w{m, rules, thresholds};
    std::function<void(int, std::vector<int>&, double)> init =
        [&](int i, std::vector<int>& syms, double p) {
          if (i == m.n()) {
            w.walk(0, syms, m.bins.locate(0.0), 0.0, p);
            return;
          }
          for (int j = 0; j < m.owners[i].grid.size(); ++j) {
            if (m.owners[i].kernel.f0[j] <= 0.0) continue;
            syms[i] = j;
            init(i + 1, syms, p * m.owners[i].kernel.f0[j]);
          }
        };
    std::vector<int> syms(m.n(), 0);
    init(0, syms, 1.0);
    return {w.total, true, 0.0};
  }

  // Monte Carlo fallback with a reported standard error.
  const int trials = 20000;
  PairwiseSum sum, sumsq;
  for (int trial = 0; trial < trials; ++trial) {
    double cost = 0.0;
    std::vector<int> syms(m.n());
    std::vector<SplitMix64> rng;
    for (int i = 0; i < m.n(); ++i)
      rng.emplace_back(stream_seed(0xc05ffeeULL, trial, i));
    for (int i = 0; i < m.n(); ++i) {
      double u = rng[i].uniform(), c = 0.0;
      syms[i] = m.owners[i].grid.size() - 1;
      for (int j = 0; j < m.owners[i].grid.size(); ++j) {
        c += m.owners[i].kernel.f0[j];
        if (u < c) {
          syms[i] = j;
          break;
        }
      }
    }
    int bin = m.bins.locate(0.0);
    double cum = 0.0;
    for (int t = 0; t <= m.horizon; ++t) {
      const std::size_t cell = rules.space.encode(syms);
      const double eps = rules.eps_at(m, t, cell);
      cost += buyer_utility_loss(eps, m.max_loss_scale);
      for (int i = 0; i < m.n(); ++i) {
        if (syms[i] == rules.space.departed_symbol(i)) continue;
        const double v = m.owners[i].grid[syms[i]];
        bool gate_ok = true;
        if (m.commitment_gating && t < m.horizon)
          gate_ok = cum + eps >= m.owners[i].budget - 1e-15;
        const bool stops =
            t == m.horizon ||
            (gate_ok && threshold_stop(thresholds[i], v, t, m.horizon));
        cost += stops ? rules.theta[i][t][cell] + rules.rho[i][t]
                      : rules.beta[i][t][cell];
        if (stops) syms[i] = -1;  // mark to depart below
      }
      if (t == m.horizon) break;
      const int nb = m.bins.advance(bin, eps);
      cum += eps;
      for (int i = 0; i < m.n(); ++i) {
        if (syms[i] == -1 || syms[i] == rules.space.departed_symbol(i)) {
          syms[i] = rules.space.departed_symbol(i);
          continue;
        }
        const auto& row = m.owners[i].kernel.row(t + 1, syms[i], nb);
        double u = rng[i].uniform(), c = 0.0;
        int nextv = m.owners[i].grid.size() - 1;
        for (int j = 0; j < m.owners[i].grid.size(); ++j) {
          c += row[j];
          if (u < c) {
            nextv = j;
            break;
          }
        }
        syms[i] = nextv;
      }
      bin = nb;
    }
    sum.add(cost);
    sumsq.add(cost * cost);
  }
  const double mean = sum.total() / trials;
  const double var =
      std::max(0.0, sumsq.total() / trials - mean * mean) / (trials - 1.0);
  return {mean, false, std::sqrt(var)};
}

double relaxed_cost(const MarketInstance& m,
                    const std::vector<std::vector<int>>& sigma,
                    const ThresholdProfile& kappa) {
  const int T = m.horizon;
  const BeliefModel beliefs = build_beliefs(m, sigma, kappa);
  const ReportSpace space(m);

  double total = 0.0;
  for (int t = 0; t <= T; ++t)
    for (const auto& [cell, p] : beliefs.joint[t])
      total += p * buyer_utility_loss(m.eps_grid[sigma[t][cell]],
                                      m.max_loss_scale);

  for (int i = 0; i < m.n(); ++i) {
    const auto& grid = m.owners[i].grid;
    const auto& kernel = m.owners[i].kernel;
    const int g = grid.size();
    const int B = m.bins.count();
    const auto stride = space.stride[i];

    // alive probability measure and the handicap measure carrying
    // (1 - F0) * cell width * sensitivity-ratio products
    std::vector<std::vector<double>> nu(g, std::vector<double>(B, 0.0));
    std::vector<std::vector<double>> eta(g, std::vector<double>(B, 0.0));
    std::vector<std::vector<double>> nu2 = nu, eta2 = eta;
    const int bin0 = m.bins.locate(0.0);
    double tail = 1.0;  // 1 - F0 just above the current point, built downward
    {
      std::vector<double> one_minus_f(g, 0.0);
      double acc = 0.0;
      for (int k = g - 1; k >= 0; --k) {
        one_minus_f[k] = acc;  // P(v0 > grid[k])
        acc += kernel.f0[k];
      }
      for (int k = 0; k < g; ++k) {
        nu[k][bin0] = kernel.f0[k];
        eta[k][bin0] = one_minus_f[k] * grid.cell_width(k);
      }
    }
    (void)tail;

    for (int t = 0; t <= T; ++t) {
      const bool allowed = beliefs.stop_allowed(i, t, T, m.commitment_gating);
      for (int w = 0; w < g; ++w)
        for (int b = 0; b < B; ++b) {
          if (nu[w][b] == 0.0 && eta[w][b] == 0.0) continue;
          for (const auto& [base, p] : beliefs.others[i][t]) {
            const double e = m.eps_grid[sigma[t][base + w * stride]];
            total += p * (nu[w][b] * flow_loss(grid[w], e) +
                          eta[w][b] * (1.0 - std::exp(e)));
          }
        }
      if (t == T) break;
      for (auto& col : nu2) std::fill(col.begin(), col.end(), 0.0);
      for (auto& col : eta2) std::fill(col.begin(), col.end(), 0.0);
      for (int w = 0; w < g; ++w) {
        const bool stops =
            allowed && threshold_stop(kappa[i], grid[w], t, T);
        if (stops) continue;  // path truncated at the stopping time
        for (int b = 0; b < B; ++b) {
          if (nu[w][b] == 0.0 && eta[w][b] == 0.0) continue;
          for (const auto& [base, p] : beliefs.others[i][t]) {
            const double e = m.eps_grid[sigma[t][base + w * stride]];
            const int nb = m.bins.advance(b, e);
            const auto& row = kernel.row(t + 1, w, nb);
            for (int j = 0; j < g; ++j) {
              if (row[j] <= 0.0) continue;
              nu2[j][nb] += nu[w][b] * p * row[j];
              const auto [dF, f] =
                  kernel_cdf_sensitivity(kernel, grid, t + 1, j, w, nb);
              eta2[j][nb] += eta[w][b] * p * row[j] * (-dF / f);
            }
          }
        }
      }
      nu.swap(nu2);
      eta.swap(eta2);
    }
  }
  return total;
}

double expected_stopping_time(const MarketInstance& m,
                              const std::vector<std::vector<int>>& sigma,
                              const ThresholdProfile& kappa, int owner) {
  const int T = m.horizon;
  const BeliefModel beliefs = build_beliefs(m, sigma, kappa);
  const ReportSpace space(m);
  const auto& grid = m.owners[owner].grid;
  const auto& kernel = m.owners[owner].kernel;
  const int g = grid.size();
  const int B = m.bins.count();
  const auto stride = space.stride[owner];

  std::vector<std::vector<double>> alive(g, std::vector<double>(B, 0.0));
  std::vector<std::vector<double>> next = alive;
  for (int k = 0; k < g; ++k) alive[k][m.bins.locate(0.0)] = kernel.f0[k];

  double expectation = 0.0;
  for (int t = 0; t <= T; ++t) {
    const bool allowed =
        beliefs.stop_allowed(owner, t, T, m.commitment_gating);
    double stop_mass = 0.0;
    for (auto& col : next) std::fill(col.begin(), col.end(), 0.0);
    for (int w = 0; w < g; ++w) {
      const bool stops =
          t == T || (allowed && threshold_stop(kappa[owner], grid[w], t, T));
      for (int b = 0; b < B; ++b) {
        const double mass = alive[w][b];
        if (mass == 0.0) continue;
        if (stops) {
          stop_mass += mass;
          continue;
        }
        if (t == T) continue;
        for (const auto& [base, p] : beliefs.others[owner][t]) {
          const double e = m.eps_grid[sigma[t][base + w * stride]];
          const int nb = m.bins.advance(b, e);
          const auto& row = kernel.row(t + 1, w, nb);
          for (int j = 0; j < g; ++j) next[j][nb] += mass * p * row[j];
        }
      }
    }
    expectation += static_cast<double>(t) * stop_mass;
    alive.swap(next);
  }
  return expectation;
}

std::vector<IrMargins> check_ir(const MarketInstance& m,
                                const MechanismRules& rules,
                                const ThresholdProfile& thresholds,
                                const BeliefModel& beliefs,
                                const ValueSolution& solution) {
  const int T = m.horizon;
  std::vector<IrMargins> out(m.n());
  const int bin0 = m.bins.locate(0.0);
  for (int i = 0; i < m.n(); ++i) {
    const auto& grid = m.owners[i].grid;
    const int g = grid.size();
    double ex_ante = 0.0;
    for (int v = 0; v < g; ++v)
      ex_ante += m.owners[i].kernel.f0[v] * solution.owners[i].U.at(0, v, bin0);
    out[i].ex_ante = ex_ante + m.participation_pay;

    // top type's value when stopping is forced by the threshold rule
    const int B = m.bins.count();
    Table3 w(T + 1, g, B, 0.0);
    const auto stride = rules.space.stride[i];
    for (int t = T; t >= 0; --t) {
      const bool allowed = beliefs.stop_allowed(i, t, T, m.commitment_gating);
      for (int v = 0; v < g; ++v) {
        const bool stops =
            t == T ||
            (allowed && threshold_stop(thresholds[i], grid[v], t, T));
        for (int b = 0; b < B; ++b) {
          double acc = stops ? rules.rho[i][t] : 0.0;
          for (const auto& [base, p] : beliefs.others[i][t]) {
            const std::size_t cell = base + v * stride;
            const double e = rules.eps_at(m, t, cell);
            double term = -flow_loss(grid[v], e);
            if (stops) {
              term += rules.theta[i][t][cell];
            } else {
              term += rules.beta[i][t][cell];
              const int nb = m.bins.advance(b, e);
              const auto& row = m.owners[i].kernel.row(t + 1, v, nb);
              double cont = 0.0;
              for (int j = 0; j < g; ++j) cont += row[j] * w.at(t + 1, j, nb);
              term += cont;
            }
            acc += p * term;
          }
          w.at(t, v, b) = acc;
        }
      }
    }
    out[i].worst_type = w.at(0, g - 1, bin0);
  }
  return out;
}

namespace {

struct Candidate {
  std::vector<int> sigma_params;  // meaning depends on the family
  ThresholdProfile kappa;
};

std::vector<std::vector<int>> decode_params(const MarketInstance& m,
                                            const SigmaSpec& family,
                                            const std::vector<int>& params) {
  switch (family.family) {
    case SigmaSpec::Family::Separable: {
      SigmaSpec s;
      s.family = SigmaSpec::Family::Separable;
      s.per_period = params;
      return decode_sigma(m, s);
    }
    case SigmaSpec::Family::Candidates:
      return family.candidates.at(params.at(0));
    default: {
      // full-table: params indexes flatten (t, cell)
      const ReportSpace space(m);
      SigmaSpec s;
      s.family = SigmaSpec::Family::FullTable;
      s.table.assign(m.horizon + 1, std::vector<int>(space.cells, 0));
      for (int t = 0; t <= m.horizon; ++t)
        for (std::size_t c = 0; c < space.cells; ++c)
          s.table[t][c] = params[t * space.cells + c];
      return decode_sigma(m, s);
    }
  }
}

}  // namespace

nlohmann::json OptimizationResult::to_json() const {
  nlohmann::json kap = nlohmann::json::array();
  for (const auto& o : kappa) {
    nlohmann::json kl = nlohmann::json::array();
    for (const auto& k : o.kl)
      kl.push_back(k.has_value() ? nlohmann::json(*k) : nlohmann::json());
    kap.push_back({{"kl", kl}});
  }
  nlohmann::json ir_j = nlohmann::json::array();
  for (const auto& x : ir)
    ir_j.push_back({{"ex_ante", x.ex_ante}, {"worst_type", x.worst_type}});
  return {{"sigma", sigma},
          {"kappa", kap},
          {"expected_stopping_time", expected_stop},
          {"relaxed_cost", relaxed},
          {"direct_cost", direct.value},
          {"direct_cost_exact", direct.exact},
          {"direct_cost_std_error", direct.std_error},
          {"ir_margins", ir_j},
          {"dic_margins", margins.to_json()},
          {"certificate", certificate.to_json()},
          {"feasible", feasible},
          {"evaluations", evaluations}};
}

OptimizationResult optimize(const MarketInstance& m, const SigmaSpec& family,
                            const OptimizerConfig& cfg) {
  const int T = m.horizon;
  const int E = m.eps_grid.size();

  // parameter dimensions and value ranges per family
  int dims = 0;
  int choices = 0;
  switch (family.family) {
    case SigmaSpec::Family::Separable:
      dims = T + 1;
      choices = E;
      break;
    case SigmaSpec::Family::Candidates:
      dims = 1;
      choices = static_cast<int>(family.candidates.size());
      break;
    case SigmaSpec::Family::FullTable: {
      const ReportSpace space(m);
      dims = (T + 1) * static_cast<int>(space.cells);
      choices = E;
      break;
    }
    default:
      throw ValidationError("optimizer supports separable, full-table and "
                            "candidate sigma families");
  }
  if (choices == 0)
    throw ValidationError("infeasible under parametrization");

  OptimizationResult best;
  bool have_best = false;
  int evals = 0;
  std::vector<OptimizerLogRow> log;

  auto evaluate = [&](const std::vector<int>& params,
                      const ThresholdProfile& kappa) {
    const auto sigma = decode_params(m, family, params);
    const double cost = relaxed_cost(m, sigma, kappa);
    ++evals;
    return cost;
  };

  auto ir_feasible = [&](const std::vector<int>& params,
                         const ThresholdProfile& kappa,
                         std::vector<IrMargins>* margins_out) {
    const auto sigma = decode_params(m, family, params);
    SynthesisResult synth = synthesize_mechanism(m, sigma, kappa);
    auto ir = check_ir(m, synth.rules, kappa, synth.beliefs, synth.solution);
    bool ok = true;
    for (const auto& x : ir)
      if (std::min(x.ex_ante, x.worst_type) < -kTieTol) ok = false;
    if (margins_out) *margins_out = std::move(ir);
    return ok;
  };

  for (int start = 0; start < cfg.starts; ++start) {
    SplitMix64 rng(stream_seed(cfg.seed, start, 0));
    std::vector<int> params(dims);
    ThresholdProfile kappa = never_stop_profile(m);
    if (start == 0) {
      std::fill(params.begin(), params.end(), choices / 2);
    } else {
      for (int& x : params) x = static_cast<int>(rng.below(choices));
      for (int i = 0; i < m.n(); ++i)
        for (int t = 0; t < T; ++t) {
          const int g = m.owners[i].grid.size();
          const int pick = static_cast<int>(rng.below(g + 1));
          kappa[i].kl[t] = pick == g
                               ? std::optional<double>{}
                               : std::optional<double>{m.owners[i].grid[pick]};
        }
    }
    for (auto& o : kappa) o.kl[T] = std::optional<double>{};
    for (int i = 0; i < m.n(); ++i)
      kappa[i].kl[T] = m.owners[i].grid.lo();  // forced horizon stop

    double cur = evaluate(params, kappa);
    log.push_back({evals, cur, true});

    for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
      double before = cur;
      for (int d = 0; d < dims; ++d) {
        int best_choice = params[d];
        for (int c = 0; c < choices; ++c) {
          if (c == params[d]) continue;
          std::vector<int> trial = params;
          trial[d] = c;
          const double cost = evaluate(trial, kappa);
          const bool better = cost < cur - 1e-15;
          log.push_back({evals, cost, better});
          if (better) {
            cur = cost;
            best_choice = c;
          }
        }
        params[d] = best_choice;
      }
      for (int i = 0; i < m.n(); ++i)
        for (int t = 0; t < T; ++t) {
          const int g = m.owners[i].grid.size();
          std::optional<double> best_k = kappa[i].kl[t];
          for (int pick = 0; pick <= g; ++pick) {
            std::optional<double> k =
                pick == g ? std::optional<double>{}
                          : std::optional<double>{m.owners[i].grid[pick]};
            if (k == kappa[i].kl[t]) continue;
            ThresholdProfile trial = kappa;
            trial[i].kl[t] = k;
            const double cost = evaluate(params, trial);
            const bool better = cost < cur - 1e-15;
            log.push_back({evals, cost, better});
            if (better) {
              cur = cost;
              best_k = k;
            }
          }
          kappa[i].kl[t] = best_k;
        }
      if (before - cur < cfg.tolerance) break;
    }

    std::vector<IrMargins> ir;
    if (!ir_feasible(params, kappa, &ir)) continue;
    if (!have_best || cur < best.relaxed) {
      best.relaxed = cur;
      best.sigma = decode_params(m, family, params);
      best.kappa = kappa;
      best.ir = std::move(ir);
      have_best = true;
    }
  }

  if (!have_best) throw ValidationError("infeasible under parametrization");

  SynthesisResult synth = synthesize_mechanism(m, best.sigma, best.kappa);
  for (int i = 0; i < m.n(); ++i)
    best.expected_stop.push_back(
        expected_stopping_time(m, best.sigma, best.kappa, i));
  best.margins = check_sufficient(m, synth);
  best.certificate = delta_dic_certificate(m, synth);
  // actual behavior: thresholds from the solved fixed point under the rules
  BeliefModel beliefs;
  ValueSolution sol = solve_fixed_point(m, synth.rules, &beliefs);
  best.direct = direct_cost(m, synth.rules, collapse_thresholds(m, sol, beliefs));
  best.feasible = true;
  best.evaluations = evals;
  best.log = std::move(log);
  return best;
}

}  // namespace privm
