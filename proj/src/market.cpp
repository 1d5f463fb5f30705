// SPDX-License-Identifier: Apache-2.0
#include "market.hpp"

#include <cmath>
#include <fstream>

namespace privm {

void MarketInstance::validate() const {
  if (horizon < 0) throw ValidationError("horizon must be >= 0");
  if (owners.empty()) throw ValidationError("instance has no owners");
  if (!(max_loss_scale > 0.0))
    throw ValidationError("buyer loss scale L must be positive");
  if (participation_pay < 0.0)
    throw ValidationError("participation payment b must be nonnegative");
  eps_grid.validate();
  bins.validate((horizon + 1) * eps_grid.cap());
  for (std::size_t i = 0; i < owners.size(); ++i) {
    const auto& o = owners[i];
    o.grid.validate(allow_degenerate);
    if (o.budget < 0.0)
      throw ValidationError("owner " + std::to_string(i) +
                            " has a negative budget");
    // shape check only; assumption checks are a separate report
    validate_kernel(o.kernel, o.grid.size(), horizon, bins.count());
  }
}

std::vector<KernelReport> MarketInstance::validate_kernels() const {
  std::vector<KernelReport> reports;
  reports.reserve(owners.size());
  for (const auto& o : owners)
    reports.push_back(
        validate_kernel(o.kernel, o.grid.size(), horizon, bins.count()));
  return reports;
}

namespace {

using nlohmann::json;

std::vector<double> parse_points(const json& j, const char* what) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (j.is_object() && j.contains("lo") && j.contains("hi") && j.contains("n")) {
    const int n = j.at("n").get<int>();
    if (n < 1) throw ParseError(std::string(what) + ": n must be >= 1");
    return ValueGrid::linspace(j.at("lo").get<double>(),
                               j.at("hi").get<double>(), n)
        .pts;
  }
  throw ParseError(std::string(what) +
                   " must be an array or {lo, hi, n} object");
}

TransitionKernel parse_kernel(const json& j, const ValueGrid& grid,
                              int horizon, const BudgetBins& bins) {
  TransitionKernel k;
  const int n = grid.size();
  if (j.contains("generator")) {
    const std::string gen = j.at("generator").get<std::string>();
    if (gen == "uniform") {
      k = make_uniform_kernel(grid, horizon, bins.count());
    } else if (gen == "sticky") {
      k = make_sticky_kernel(grid, horizon, bins.count(),
                             j.at("p").get<double>());
    } else if (gen == "drift") {
      k = make_drift_kernel(grid, horizon, bins.count(),
                            j.at("delta").get<double>(), bins,
                            j.value("scale", 0.0));
    } else {
      throw ParseError("unknown kernel generator '" + gen + "'");
    }
    if (j.contains("initial"))
      k.f0 = j.at("initial").get<std::vector<double>>();
  } else if (j.contains("table")) {
    k.f0 = j.at("f0").get<std::vector<double>>();
    k.rows = j.at("table")
                 .get<std::vector<
                     std::vector<std::vector<std::vector<double>>>>>();
  } else {
    throw ParseError("kernel needs either a 'generator' or a 'table'");
  }
  if (static_cast<int>(k.f0.size()) != n)
    throw ParseError("kernel initial distribution does not match the grid");
  return k;
}

}  // namespace

MarketInstance MarketInstance::from_json(const nlohmann::json& j) {
  MarketInstance m;
  try {
    m.horizon = j.at("horizon").get<int>();
    m.eps_grid.pts = parse_points(j.at("epsilon_grid"), "epsilon_grid");
    m.eps_grid.validate();

    const int bin_count = j.value("budget_bins", 1);
    if (j.contains("budget_bin_edges"))
      m.bins.edges = j.at("budget_bin_edges").get<std::vector<double>>();
    else
      m.bins = BudgetBins::uniform((m.horizon + 1) * m.eps_grid.cap(),
                                   bin_count);

    m.max_loss_scale = j.at("L").get<double>();
    m.participation_pay = j.value("b", 0.0);
    m.commitment_gating = j.value("commitment_gating", false);
    m.allow_degenerate = j.value("allow_degenerate", false);

    for (const auto& jo : j.at("owners")) {
      OwnerSpec o;
      o.grid.pts = parse_points(jo.at("grid"), "owner grid");
      o.grid.validate(m.allow_degenerate);
      o.intrinsic = jo.value("intrinsic", "");
      o.budget = jo.value("budget", (m.horizon + 1) * m.eps_grid.cap());
      o.kernel = parse_kernel(jo.at("kernel"), o.grid, m.horizon, m.bins);
      m.owners.push_back(std::move(o));
    }

    if (j.contains("optimizer")) {
      const auto& jopt = j.at("optimizer");
      m.optimizer.family = jopt.value("family", std::string("separable"));
      m.optimizer.starts = jopt.value("starts", 3);
      m.optimizer.sweeps = jopt.value("sweeps", 25);
      m.optimizer.seed = jopt.value("seed", std::uint64_t{1});
      m.optimizer.tolerance = jopt.value("tolerance", 1e-8);
      if (jopt.contains("candidates")) m.optimizer.candidates = jopt["candidates"];
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("instance parse error: ") + e.what());
  }
  m.validate();
  return m;
}

MarketInstance MarketInstance::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("instance '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

}  // namespace privm
