// SPDX-License-Identifier: Apache-2.0
#include "mechanism.hpp"

#include <algorithm>
#include <fstream>

namespace privm {

ReportSpace::ReportSpace(const MarketInstance& m) {
  radix.reserve(m.n());
  stride.reserve(m.n());
  for (const auto& o : m.owners) {
    radix.push_back(o.grid.size() + 1);
    stride.push_back(cells);
    cells *= static_cast<std::size_t>(o.grid.size() + 1);
  }
  if (cells > (1u << 20))
    throw CapacityError("joint report space has " + std::to_string(cells) +
                        " cells; desk scale supports n <= 3, grid <= 8");
}

MechanismRules MechanismRules::zero_payments(
    const MarketInstance& m, std::vector<std::vector<int>> sigma_table) {
  MechanismRules r;
  r.space = ReportSpace(m);
  r.sigma = std::move(sigma_table);
  const int T = m.horizon;
  r.beta.assign(m.n(), std::vector<std::vector<double>>(
                           T + 1, std::vector<double>(r.space.cells, 0.0)));
  r.theta = r.beta;
  r.rho.assign(m.n(), std::vector<double>(T + 1, 0.0));
  return r;
}

void MechanismRules::validate(const MarketInstance& m) const {
  const std::size_t cells = ReportSpace(m).cells;
  const int T = m.horizon;
  auto check_payment = [&](const auto& tab, const char* name) {
    if (static_cast<int>(tab.size()) != m.n())
      throw ValidationError(std::string(name) + " table missing owners");
    for (const auto& per_t : tab) {
      if (static_cast<int>(per_t.size()) != T + 1)
        throw ValidationError(std::string(name) +
                              " table not defined for every period");
      for (const auto& row : per_t)
        if (row.size() != cells)
          throw ValidationError(std::string(name) +
                                " table not defined for every report cell");
    }
  };
  if (static_cast<int>(sigma.size()) != T + 1)
    throw ValidationError("sigma not defined for every period");
  for (const auto& row : sigma) {
    if (row.size() != cells)
      throw ValidationError("sigma not defined for every report cell");
    for (int e : row)
      if (e < 0 || e >= m.eps_grid.size())
        throw ValidationError("sigma output off the epsilon grid");
  }
  check_payment(beta, "beta");
  check_payment(theta, "theta");
  if (static_cast<int>(rho.size()) != m.n())
    throw ValidationError("rho table missing owners");
  for (const auto& r : rho)
    if (static_cast<int>(r.size()) != T + 1)
      throw ValidationError("rho not defined for every period");
}

nlohmann::json MechanismRules::to_json() const {
  nlohmann::json j;
  j["sigma"] = sigma;
  j["beta"] = beta;
  j["theta"] = theta;
  j["rho"] = rho;
  return j;
}

MechanismRules MechanismRules::from_json(const MarketInstance& m,
                                         const nlohmann::json& j) {
  MechanismRules r;
  r.space = ReportSpace(m);
  try {
    r.sigma = j.at("sigma").get<std::vector<std::vector<int>>>();
    r.beta =
        j.at("beta").get<std::vector<std::vector<std::vector<double>>>>();
    r.theta =
        j.at("theta").get<std::vector<std::vector<std::vector<double>>>>();
    r.rho = j.at("rho").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("rules parse error: ") + e.what());
  }
  r.validate(m);
  return r;
}

MechanismRules MechanismRules::from_file(const MarketInstance& m,
                                         const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open rules file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("rules '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(m, j);
}

SigmaSpec SigmaSpec::constant(const MarketInstance& m, double eps) {
  SigmaSpec s;
  s.family = Family::Separable;
  s.per_period.assign(m.horizon + 1, m.eps_grid.nearest(eps));
  return s;
}

SigmaSpec SigmaSpec::from_json(const MarketInstance& m,
                               const nlohmann::json& j) {
  SigmaSpec s;
  try {
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "separable") {
      s.family = Family::Separable;
      if (j.contains("eps")) {
        for (double e : j.at("eps").get<std::vector<double>>())
          s.per_period.push_back(m.eps_grid.nearest(e));
      } else {
        s.per_period = j.at("eps_index").get<std::vector<int>>();
      }
      if (static_cast<int>(s.per_period.size()) == 1)
        s.per_period.assign(m.horizon + 1, s.per_period[0]);
    } else if (fam == "affine-mean") {
      s.family = Family::AffineMeanReport;
      s.slope = j.at("slope").get<std::vector<double>>();
      s.intercept = j.at("intercept").get<std::vector<double>>();
    } else if (fam == "full-table") {
      s.family = Family::FullTable;
      s.table = j.at("eps_index").get<std::vector<std::vector<int>>>();
    } else if (fam == "candidates") {
      s.family = Family::Candidates;
      for (const auto& c : j.at("tables"))
        s.candidates.push_back(
            c.get<std::vector<std::vector<int>>>());
    } else {
      throw ParseError("unknown sigma family '" + fam + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sigma parse error: ") + e.what());
  }
  return s;
}

std::vector<std::vector<int>> decode_sigma(const MarketInstance& m,
                                           const SigmaSpec& spec) {
  const ReportSpace space(m);
  const int T = m.horizon;
  std::vector<std::vector<int>> table(T + 1,
                                      std::vector<int>(space.cells, 0));
  switch (spec.family) {
    case SigmaSpec::Family::Separable: {
      if (static_cast<int>(spec.per_period.size()) != T + 1)
        throw ValidationError("separable sigma needs one epsilon per period");
      for (int t = 0; t <= T; ++t) {
        const int e = spec.per_period[t];
        if (e < 0 || e >= m.eps_grid.size())
          throw ValidationError("separable sigma index off the epsilon grid");
        std::fill(table[t].begin(), table[t].end(), e);
      }
      break;
    }
    case SigmaSpec::Family::AffineMeanReport: {
      if (static_cast<int>(spec.slope.size()) != T + 1 ||
          static_cast<int>(spec.intercept.size()) != T + 1)
        throw ValidationError("affine sigma needs slope/intercept per period");
      for (int t = 0; t <= T; ++t)
        for (std::size_t c = 0; c < space.cells; ++c) {
          double sum = 0.0;
          int active = 0;
          for (int i = 0; i < m.n(); ++i) {
            const int sym = space.symbol_of(c, i);
            if (sym != space.departed_symbol(i)) {
              sum += m.owners[i].grid[sym];
              ++active;
            }
          }
          const double mean = active > 0 ? sum / active : 0.0;
          table[t][c] =
              m.eps_grid.nearest(spec.intercept[t] + spec.slope[t] * mean);
        }
      break;
    }
    case SigmaSpec::Family::FullTable: {
      if (static_cast<int>(spec.table.size()) != T + 1)
        throw ValidationError("full-table sigma needs every period");
      for (const auto& row : spec.table)
        if (row.size() != space.cells)
          throw ValidationError("full-table sigma needs every report cell");
      table = spec.table;
      for (const auto& row : table)
        for (int e : row)
          if (e < 0 || e >= m.eps_grid.size())
            throw ValidationError("full-table sigma index off the grid");
      break;
    }
    case SigmaSpec::Family::Candidates:
      throw ValidationError(
          "a candidate family decodes one member at a time");
  }
  return table;
}

}  // namespace privm
