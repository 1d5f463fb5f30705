// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "buyer.hpp"
#include "sim.hpp"

namespace privm {

inline constexpr const char* kToolVersion = "0.1.0";

/// Columnar export: owner, t, bin, v, J_stop, J_cont, U, G, stop_flag.
std::string solution_to_csv(const MarketInstance& m, const ValueSolution& sol);

/// Threshold summary: per owner, per period, per bin kl/kr plus the
/// expected-path collapse.
nlohmann::json thresholds_to_json(const MarketInstance& m,
                                  const ValueSolution& sol,
                                  const BeliefModel& beliefs);

/// One row per owner-period.
std::string trace_to_csv(const SimTrace& trace);

std::string optimizer_log_to_csv(const std::vector<OptimizerLogRow>& log);

nlohmann::json kernel_reports_to_json(
    const std::vector<KernelReport>& reports);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace privm
