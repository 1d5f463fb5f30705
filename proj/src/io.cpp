// SPDX-License-Identifier: Apache-2.0
#include "io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace privm {

std::string solution_to_csv(const MarketInstance& m,
                            const ValueSolution& sol) {
  std::ostringstream os;
  os << "owner,t,bin,v,J_stop,J_cont,U,G,stop_flag\n";
  os.precision(17);
  for (int i = 0; i < m.n(); ++i) {
    const auto& o = sol.owners[i];
    const auto& grid = m.owners[i].grid;
    for (int t = 0; t <= m.horizon; ++t)
      for (int b = 0; b < m.bins.count(); ++b)
        for (int v = 0; v < grid.size(); ++v) {
          os << i << ',' << t << ',' << b << ',' << grid[v] << ','
             << o.J_stop.at(t, v, b) << ',' << o.J_cont.at(t, v, b) << ','
             << o.U.at(t, v, b) << ',' << o.G.at(t, v, b) << ','
             << int(o.stop[t][b][v]) << '\n';
        }
  }
  return os.str();
}

nlohmann::json thresholds_to_json(const MarketInstance& m,
                                  const ValueSolution& sol,
                                  const BeliefModel& beliefs) {
  auto opt = [](const std::optional<double>& x) {
    return x.has_value() ? nlohmann::json(*x) : nlohmann::json();
  };
  nlohmann::json owners = nlohmann::json::array();
  const ThresholdProfile collapsed = collapse_thresholds(m, sol, beliefs);
  for (int i = 0; i < m.n(); ++i) {
    nlohmann::json per_bin = nlohmann::json::array();
    for (int t = 0; t <= m.horizon; ++t) {
      nlohmann::json kl = nlohmann::json::array(),
                     kr = nlohmann::json::array();
      for (int b = 0; b < m.bins.count(); ++b) {
        kl.push_back(opt(sol.owners[i].kl[t][b]));
        kr.push_back(opt(sol.owners[i].kr[t][b]));
      }
      per_bin.push_back({{"t", t}, {"kl", kl}, {"kr", kr}});
    }
    nlohmann::json ckl = nlohmann::json::array(),
                   ckr = nlohmann::json::array();
    for (int t = 0; t <= m.horizon; ++t) {
      ckl.push_back(opt(collapsed[i].kl[t]));
      ckr.push_back(opt(collapsed[i].kr[t]));
    }
    owners.push_back({{"owner", i},
                      {"per_bin", per_bin},
                      {"kl", ckl},
                      {"kr", ckr},
                      {"non_threshold_periods", sol.owners[i].non_threshold_t}});
  }
  return {{"converged", sol.converged},
          {"iterations", sol.iterations},
          {"owners", owners}};
}

std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream os;
  os << "t,owner,active,v_true,report_sym,eps,payment,stops,cum_loss\n";
  os.precision(17);
  for (const auto& r : trace.rows)
    os << r.t << ',' << r.owner << ',' << int(r.active) << ','
       << (std::isnan(r.v_true) ? std::string() : std::to_string(r.v_true))
       << ',' << r.report_sym << ',' << r.eps << ',' << r.payment << ','
       << int(r.stops) << ',' << r.cum_loss << '\n';
  return os.str();
}

std::string optimizer_log_to_csv(const std::vector<OptimizerLogRow>& log) {
  std::ostringstream os;
  os << "evaluation,cost,accepted\n";
  os.precision(17);
  for (const auto& r : log)
    os << r.evaluation << ',' << r.cost << ',' << int(r.accepted) << '\n';
  return os.str();
}

nlohmann::json kernel_reports_to_json(
    const std::vector<KernelReport>& reports) {
  nlohmann::json owners = nlohmann::json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& rep = reports[i];
    nlohmann::json viols = nlohmann::json::array();
    for (const auto& v : rep.normalization)
      viols.push_back({{"kind", v.kind}, {"t", v.t}, {"bin", v.bin},
                       {"v_prev", v.v_low}, {"sum", v.value}});
    for (const auto& v : rep.support)
      viols.push_back({{"kind", v.kind}, {"t", v.t}, {"bin", v.bin},
                       {"v_prev", v.v_low}, {"index", v.index}});
    if (rep.fosd)
      viols.push_back({{"kind", rep.fosd->kind}, {"t", rep.fosd->t},
                       {"bin", rep.fosd->bin}, {"v_low", rep.fosd->v_low},
                       {"v_high", rep.fosd->v_high},
                       {"grid_index", rep.fosd->index}});
    owners.push_back(
        {{"owner", i}, {"ok", rep.ok()}, {"violations", viols}});
  }
  return owners;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file '" + path + "'");
  out << content;
}

}  // namespace privm
