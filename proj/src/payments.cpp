// SPDX-License-Identifier: Apache-2.0
#include "payments.hpp"

#include <algorithm>
#include <cmath>

namespace privm {

namespace {

int grid_index(const ValueGrid& grid, double v) {
  for (int k = 0; k < grid.size(); ++k)
    if (std::abs(grid[k] - v) <= 1e-12) return k;
  throw ValidationError("threshold value is not a grid point");
}

}  // namespace

std::vector<std::vector<std::vector<double>>> synthesize_theta(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma,
    const BeliefModel&, const RentTable& rents) {
  const ReportSpace space(m);
  const int T = m.horizon;
  std::vector<std::vector<std::vector<double>>> theta(
      m.n(), std::vector<std::vector<double>>(
                 T + 1, std::vector<double>(space.cells, 0.0)));
  for (int i = 0; i < m.n(); ++i) {
    const auto& grid = m.owners[i].grid;
    const int dep = space.departed_symbol(i);
    for (int t = 0; t <= T; ++t)
      for (std::size_t c = 0; c < space.cells; ++c) {
        const int sym = space.symbol_of(c, i);
        if (sym == dep) continue;  // departed owners receive nothing
        const double e = m.eps_grid[sigma[t][c]];
        theta[i][t][c] =
            rents.lam_top(i, t, sym, t) + flow_loss(grid[sym], e);
      }
  }
  return theta;
}

std::vector<std::vector<std::vector<double>>> synthesize_beta(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma,
    const BeliefModel& beliefs, const RentTable& rents) {
  const ReportSpace space(m);
  const int T = m.horizon;
  std::vector<std::vector<std::vector<double>>> beta(
      m.n(), std::vector<std::vector<double>>(
                 T + 1, std::vector<double>(space.cells, 0.0)));
  for (int i = 0; i < m.n(); ++i) {
    const auto& grid = m.owners[i].grid;
    const int g = grid.size();
    const int dep = space.departed_symbol(i);
    for (int t = 0; t <= T; ++t)
      for (std::size_t c = 0; c < space.cells; ++c) {
        const int sym = space.symbol_of(c, i);
        if (sym == dep) continue;
        const double e = m.eps_grid[sigma[t][c]];
        double future = 0.0;
        if (t < T) {
          const int nb = m.bins.advance(beliefs.path_bin[t], e);
          const auto& row = m.owners[i].kernel.row(t + 1, sym, nb);
          for (int j = 0; j < g; ++j)
            future += row[j] * rents.sup_lam_top(i, t + 1, j);
        }
        beta[i][t][c] = rents.sup_lam_top(i, t, sym) - future +
                        flow_loss(grid[sym], e);
      }
  }
  return beta;
}

std::vector<std::vector<double>> synthesize_rho(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma,
    const BeliefModel& beliefs, const RentTable& rents,
    const ThresholdProfile& kappa, std::vector<std::string>* warnings) {
  const int T = m.horizon;
  const ReportSpace space(m);
  std::vector<std::vector<double>> rho(m.n(),
                                       std::vector<double>(T + 1, 0.0));
  for (int i = 0; i < m.n(); ++i) {
    const auto& grid = m.owners[i].grid;
    const int g = grid.size();
    const int B = m.bins.count();
    const auto stride = space.stride[i];

    // capped index per period; never-stop thresholds use the v_bar cap
    std::vector<int> cap_idx(T + 1, g - 1);
    for (int t = 0; t <= T; ++t) {
      if (kappa[i].kl[t].has_value()) {
        cap_idx[t] = grid_index(grid, *kappa[i].kl[t]);
      } else if (t < T && warnings) {
        warnings->push_back("owner " + std::to_string(i) + " period " +
                            std::to_string(t) +
                            ": rho uses the v_bar cap for a never-stop "
                            "threshold");
        warnings = nullptr;  // one note is enough
      }
    }

    for (int t = 0; t < T; ++t) {
      const int start = cap_idx[t];
      // forward enumeration of the truthful process started at kappa(t),
      // rent arguments capped post-hoc
      std::vector<std::vector<double>> cur(g, std::vector<double>(B, 0.0));
      std::vector<std::vector<double>> next(g,
                                            std::vector<double>(B, 0.0));
      cur[start][beliefs.path_bin[t]] = 1.0;
      double acc = 0.0;
      for (int s = t; s < T; ++s) {
        // bracket at s: -(Lambda(c_s; s) - sup Lambda_s(c_s)) terms combine
        // with the s+1 terms below; accumulate both sides explicitly
        for (int w = 0; w < g; ++w)
          for (int b = 0; b < B; ++b) {
            const double wt = cur[w][b];
            if (wt == 0.0) continue;
            const int cs = std::min(w, cap_idx[s]);
            acc -= wt * (rents.lam_top(i, s, cs, s) -
                         rents.sup_lam_top(i, s, cs));
          }
        for (auto& col : next) std::fill(col.begin(), col.end(), 0.0);
        for (int w = 0; w < g; ++w)
          for (int b = 0; b < B; ++b) {
            const double wt = cur[w][b];
            if (wt == 0.0) continue;
            for (const auto& [base, p] : beliefs.others[i][s]) {
              const double e = m.eps_grid[sigma[s][base + w * stride]];
              const int nb = m.bins.advance(b, e);
              const auto& row = m.owners[i].kernel.row(s + 1, w, nb);
              for (int j = 0; j < g; ++j)
                next[j][nb] += wt * p * row[j];
            }
          }
        cur.swap(next);
        for (int w = 0; w < g; ++w)
          for (int b = 0; b < B; ++b) {
            const double wt = cur[w][b];
            if (wt == 0.0) continue;
            const int cs = std::min(w, cap_idx[s + 1]);
            acc += wt * (rents.lam_top(i, s + 1, cs, s + 1) -
                         rents.sup_lam_top(i, s + 1, cs));
          }
      }
      rho[i][t] = acc;
    }
    rho[i][T] = 0.0;  // empty sum
  }
  return rho;
}

SynthesisResult synthesize_mechanism(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma,
    const std::optional<ThresholdProfile>& kappa_override) {
  SynthesisResult out;
  ThresholdProfile th =
      kappa_override.has_value() ? *kappa_override : never_stop_profile(m);
  constexpr int kMaxIter = 50;
  const int iters = kappa_override.has_value() ? 1 : kMaxIter;
  for (int iter = 1; iter <= iters; ++iter) {
    out.iterations = iter;
    out.beliefs = build_beliefs(m, sigma, th);
    out.rents = RentTable(m, sigma, out.beliefs);
    out.rules = MechanismRules::zero_payments(m, sigma);
    out.rules.theta = synthesize_theta(m, sigma, out.beliefs, out.rents);
    out.rules.beta = synthesize_beta(m, sigma, out.beliefs, out.rents);
    out.warnings.clear();
    out.rules.rho =
        synthesize_rho(m, sigma, out.beliefs, out.rents, th, &out.warnings);
    out.solution = solve_value_function(m, out.rules, out.beliefs);
    ThresholdProfile next = collapse_thresholds(m, out.solution, out.beliefs);
    if (kappa_override.has_value()) {
      out.thresholds = th;
      out.converged = true;
      return out;
    }
    bool same = true;
    for (int i = 0; i < m.n() && same; ++i) same = (next[i].kl == th[i].kl);
    if (same) {
      out.thresholds = th;
      out.converged = true;
      return out;
    }
    th = std::move(next);
  }
  out.thresholds = th;
  out.converged = false;
  return out;
}

namespace {

void scan_conditions(const MarketInstance& m, const SynthesisResult& synth,
                     MarginReport* sufficient, MarginReport* necessary) {
  const int T = m.horizon;
  const ReportSpace& space = synth.rules.space;
  MarginReport suf, nec;
  suf.c1.assign(m.n(), std::vector<MarginEntry>(T + 1));
  suf.c2.assign(m.n(), std::vector<MarginEntry>(T + 1));
  nec.c1.assign(m.n(), std::vector<MarginEntry>(T + 1));
  nec.c2.assign(m.n(), std::vector<MarginEntry>(T + 1));

  const auto reach = reachable_bins(m, synth.rules.sigma);

  for (int i = 0; i < m.n(); ++i) {
    const auto& grid = m.owners[i].grid;
    const int g = grid.size();
    const auto stride = space.stride[i];
    FixedHorizonEvaluator fh(m, synth.rules, synth.beliefs, i);

    for (int t = 0; t <= T; ++t) {
      const auto& cells = synth.beliefs.others[i][t];
      const auto& taus = synth.rents.allowed_taus(i, t);
      double sup_rho = -kInf;
      for (int tau : taus) sup_rho = std::max(sup_rho, synth.rules.rho[i][tau]);

      auto note = [](MarginEntry& e, double margin, int v, int vh, long c) {
        if (margin < e.margin) e = MarginEntry{margin, v, vh, c};
      };

      for (int v = 0; v < g; ++v)
        for (int vh = 0; vh < g; ++vh) {
          // d_S per cell and belief-averaged
          double ds_avg = 0.0;
          const double lam_vh_v = synth.rents.lam(i, t, vh, v, t);
          const double lam_diff_t = synth.rents.lam_top(i, t, vh, t) -
                                    synth.rents.lam_top(i, t, v, t);
          for (long ci = 0; ci < static_cast<long>(cells.size()); ++ci) {
            const auto& [base, p] = cells[ci];
            const double e =
                synth.rules.eps_at(m, t, base + vh * stride);
            const double ds =
                -flow_loss(grid[vh], e) + flow_loss(grid[v], e);
            ds_avg += p * ds;
            note(suf.c1[i][t], ds - lam_vh_v, v, vh, ci);
            note(nec.c1[i][t], ds - lam_diff_t, v, vh, ci);
          }
          note(suf.c1[i][t], ds_avg - lam_vh_v, v, vh, -1);
          note(nec.c1[i][t], ds_avg - lam_diff_t, v, vh, -1);

          // d_{-S}: inf / sup over tau of jbar(vh,vh)-jbar(v,vh), worst case
          // over reachable bins, belief-averaged and per period-t cell
          const double sup_diff = synth.rents.sup_lam_top(i, t, vh) -
                                  synth.rents.sup_lam_top(i, t, v);
          for (int bin : reach[t]) {
            double inf_dns = kInf, sup_dns = -kInf;
            for (int tau : taus) {
              const double d = fh.jbar(t, vh, vh, bin, tau) -
                               fh.jbar(t, v, vh, bin, tau);
              inf_dns = std::min(inf_dns, d);
              sup_dns = std::max(sup_dns, d);
            }
            note(suf.c2[i][t], inf_dns - sup_rho - sup_diff, v, vh, -1);
            note(nec.c2[i][t], sup_dns - sup_diff, v, vh, -1);
            for (long ci = 0; ci < static_cast<long>(cells.size()); ++ci) {
              const auto& base = cells[ci].first;
              double inf_c = kInf, sup_c = -kInf;
              for (int tau : taus) {
                const double d = fh.jbar_at_cell(t, vh, vh, base, bin, tau) -
                                 fh.jbar_at_cell(t, v, vh, base, bin, tau);
                inf_c = std::min(inf_c, d);
                sup_c = std::max(sup_c, d);
              }
              note(suf.c2[i][t], inf_c - sup_rho - sup_diff, v, vh, ci);
              note(nec.c2[i][t], sup_c - sup_diff, v, vh, ci);
            }
          }
        }
      suf.min_c1 = std::min(suf.min_c1, suf.c1[i][t].margin);
      suf.min_c2 = std::min(suf.min_c2, suf.c2[i][t].margin);
      nec.min_c1 = std::min(nec.min_c1, nec.c1[i][t].margin);
      nec.min_c2 = std::min(nec.min_c2, nec.c2[i][t].margin);
    }
  }
  if (sufficient) *sufficient = std::move(suf);
  if (necessary) *necessary = std::move(nec);
}

nlohmann::json entry_json(const MarginEntry& e) {
  return {{"margin", e.margin},
          {"v", e.v},
          {"v_hat", e.v_hat},
          {"others_cell", e.cell}};
}

}  // namespace

nlohmann::json MarginReport::to_json() const {
  nlohmann::json per;
  for (std::size_t i = 0; i < c1.size(); ++i)
    for (std::size_t t = 0; t < c1[i].size(); ++t)
      per.push_back({{"owner", i},
                     {"t", t},
                     {"c1", entry_json(c1[i][t])},
                     {"c2", entry_json(c2[i][t])}});
  return {{"min_c1", min_c1},
          {"min_c2", min_c2},
          {"pass", pass()},
          {"cells", per}};
}

MarginReport check_sufficient(const MarketInstance& m,
                              const SynthesisResult& synth) {
  MarginReport suf;
  scan_conditions(m, synth, &suf, nullptr);
  return suf;
}

MarginReport check_necessary(const MarketInstance& m,
                             const SynthesisResult& synth) {
  MarginReport nec;
  scan_conditions(m, synth, nullptr, &nec);
  return nec;
}

nlohmann::json DicCertificate::to_json() const {
  nlohmann::json per;
  for (std::size_t i = 0; i < delta_s.size(); ++i)
    for (std::size_t t = 0; t < delta_s[i].size(); ++t)
      per.push_back({{"owner", i},
                     {"t", t},
                     {"delta_stop", delta_s[i][t]},
                     {"delta_continue", delta_not_s[i][t]}});
  return {{"verdict", verdict},
          {"max_delta_stop", max_delta_s},
          {"max_delta_continue", max_delta_not_s},
          {"cells", per}};
}

DicCertificate delta_dic_certificate(const MarketInstance& m,
                                     const SynthesisResult& synth) {
  MarginReport suf;
  scan_conditions(m, synth, &suf, nullptr);
  DicCertificate cert;
  const int T = m.horizon;
  cert.delta_s.assign(m.n(), std::vector<double>(T + 1, 0.0));
  cert.delta_not_s.assign(m.n(), std::vector<double>(T + 1, 0.0));
  for (int i = 0; i < m.n(); ++i)
    for (int t = 0; t <= T; ++t) {
      cert.delta_s[i][t] = -suf.c1[i][t].margin;
      cert.delta_not_s[i][t] = -suf.c2[i][t].margin;
      cert.max_delta_s = std::max(cert.max_delta_s, cert.delta_s[i][t]);
      cert.max_delta_not_s =
          std::max(cert.max_delta_not_s, cert.delta_not_s[i][t]);
    }
  bool assumptions_ok = true;
  for (const auto& rep : m.validate_kernels())
    if (!rep.ok()) assumptions_ok = false;
  if (!assumptions_ok)
    cert.verdict = "violated-conditions";
  else if (cert.max_delta_s <= kTieTol && cert.max_delta_not_s <= kTieTol)
    cert.verdict = "DIC";
  else
    cert.verdict = "approx-DIC";
  return cert;
}

ZeroRhoResult zero_rho_threshold_solve(
    const MarketInstance& m, const std::vector<std::vector<int>>& sigma) {
  const int T = m.horizon;
  ZeroRhoResult out;
  out.kappa.assign(m.n(),
                   std::vector<std::optional<double>>(T + 1, std::nullopt));

  // the expression depends on the candidate only through the start state
  // (the bracketed differences telescope along every path), so each period
  // scans independently under the equilibrium-free beliefs
  BeliefModel beliefs = build_beliefs(m, sigma, std::nullopt);
  RentTable rents(m, sigma, beliefs);

  for (int i = 0; i < m.n(); ++i) {
    const auto& grid = m.owners[i].grid;
    const int g = grid.size();
    out.kappa[i][T] = grid.lo();
    for (int t = T - 1; t >= 0; --t) {
      std::vector<double> expr(g, 0.0);
      for (int c = 0; c < g; ++c) {
        ThresholdProfile probe = never_stop_profile(m);
        probe[i].kl[t] = grid[c];
        for (int s = t + 1; s <= T; ++s) probe[i].kl[s] = out.kappa[i][s];
        auto rho = synthesize_rho(m, sigma, beliefs, rents, probe, nullptr);
        expr[c] = rho[i][t];
      }
      int chosen = -1;
      for (int c = 0; c < g && chosen < 0; ++c)
        if (std::abs(expr[c]) <= 1e-12) chosen = c;
      if (chosen < 0)
        for (int c = 0; c + 1 < g && chosen < 0; ++c)
          if ((expr[c] < 0.0) != (expr[c + 1] < 0.0)) chosen = c + 1;
      if (chosen >= 0)
        out.kappa[i][t] = grid[chosen];
      else
        out.infeasible_t.push_back(t);
    }
  }
  return out;
}

ControlFeasibility stopping_control_feasibility(const MarketInstance& m,
                                                int owner,
                                                const ControlTarget& target,
                                                const SigmaSpec& family) {
  // enumerate the family
  std::vector<std::vector<std::vector<int>>> members;
  if (family.family == SigmaSpec::Family::Candidates) {
    members = family.candidates;
  } else if (family.family == SigmaSpec::Family::Separable) {
    const int E = m.eps_grid.size();
    const int T = m.horizon;
    double count = std::pow(static_cast<double>(E), T + 1);
    if (count > 20000.0)
      throw CapacityError("separable family has " + std::to_string(count) +
                          " members; exhaustive scan capped at 20000");
    std::vector<int> idx(T + 1, 0);
    while (true) {
      SigmaSpec s;
      s.family = SigmaSpec::Family::Separable;
      s.per_period = idx;
      members.push_back(decode_sigma(m, s));
      int k = 0;
      while (k <= T && ++idx[k] == E) idx[k++] = 0;
      if (k > T) break;
    }
  } else {
    SigmaSpec one = family;
    members.push_back(decode_sigma(m, one));
  }

  ControlFeasibility result;
  result.candidates_checked = static_cast<int>(members.size());
  for (std::size_t ci = 0; ci < members.size(); ++ci) {
    const auto& sigma = members[ci];
    // equilibrium thresholds for the others, the target for this owner
    SynthesisResult equilibrium = synthesize_mechanism(m, sigma);
    ThresholdProfile kappa = equilibrium.thresholds;
    auto& own = kappa[owner];
    const auto& grid = m.owners[owner].grid;
    for (int t = 0; t <= m.horizon; ++t) {
      if (target.kind == ControlTarget::Kind::RetainUntilHorizon)
        own.kl[t] = grid.hi();
      else
        own.kl[t] = t < target.period ? grid.hi()
                    : t == target.period ? grid.lo()
                                         : grid.lo();
      own.kr[t] = own.kl[t];
    }
    SynthesisResult forced = synthesize_mechanism(m, sigma, kappa);
    MarginReport rep = check_sufficient(m, forced);
    const double worst = std::min(rep.min_c1, rep.min_c2);
    if (worst > result.best_min_margin) {
      result.best_min_margin = worst;
      result.candidate_index = static_cast<int>(ci);
    }
    if (rep.pass()) {
      result.feasible = true;
      result.candidate_index = static_cast<int>(ci);
      result.best_min_margin = worst;
      break;
    }
  }
  return result;
}

}  // namespace privm
