// SPDX-License-Identifier: Apache-2.0
//
// The buyer's take-it-or-leave-it offer: the assignment rule sigma, the two
// preference-dependent compensation rules beta / theta, and the
// preference-independent stopping payment rho. All tables are total over
// every period and every joint-report cell, including departed owners
// (footnote-2 convention).
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "market.hpp"

namespace privm {

/// Mixed-radix encoding of joint reports. Each owner contributes a symbol in
/// [0, grid_size]; grid_size itself is the reserved "departed" symbol.
struct ReportSpace {
  std::vector<int> radix;     // per owner: grid size + 1
  std::vector<std::size_t> stride;
  std::size_t cells = 1;

  explicit ReportSpace(const MarketInstance& m);
  ReportSpace() = default;

  int departed_symbol(int owner) const { return radix[owner] - 1; }

  std::size_t encode(const std::vector<int>& syms) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < syms.size(); ++i) c += syms[i] * stride[i];
    return c;
  }
  int symbol_of(std::size_t cell, int owner) const {
    return static_cast<int>((cell / stride[owner]) % radix[owner]);
  }
  /// Replaces one owner's symbol in an encoded cell.
  std::size_t with_symbol(std::size_t cell, int owner, int sym) const {
    return cell - symbol_of(cell, owner) * stride[owner] +
           static_cast<std::size_t>(sym) * stride[owner];
  }
};

struct MechanismRules {
  ReportSpace space;
  /// sigma[t][cell] -> epsilon grid index.
  std::vector<std::vector<int>> sigma;
  /// beta[owner][t][cell], theta[owner][t][cell]: monetary payments.
  std::vector<std::vector<std::vector<double>>> beta, theta;
  /// rho[owner][t]: stopping payment, preference independent.
  std::vector<std::vector<double>> rho;

  double eps_at(const MarketInstance& m, int t, std::size_t cell) const {
    return m.eps_grid[sigma[t][cell]];
  }

  /// All-zero payments around a given assignment table.
  static MechanismRules zero_payments(const MarketInstance& m,
                                      std::vector<std::vector<int>> sigma_table);

  void validate(const MarketInstance& m) const;

  nlohmann::json to_json() const;
  static MechanismRules from_json(const MarketInstance& m,
                                  const nlohmann::json& j);
  static MechanismRules from_file(const MarketInstance& m,
                                  const std::string& path);
};

/// Assignment-rule families the optimizer searches over; decode always lands
/// on the epsilon grid and defines departed cells.
struct SigmaSpec {
  enum class Family { FullTable, Separable, AffineMeanReport, Candidates };
  Family family = Family::Separable;

  // Separable: one epsilon index per period.
  std::vector<int> per_period;
  // Affine: eps_t = clamp(intercept_t + slope_t * mean active report).
  std::vector<double> slope, intercept;
  // FullTable: explicit sigma[t][cell] epsilon indices.
  std::vector<std::vector<int>> table;
  // Candidates: explicit list of decoded tables to scan exhaustively.
  std::vector<std::vector<std::vector<int>>> candidates;

  static SigmaSpec constant(const MarketInstance& m, double eps);
  static SigmaSpec from_json(const MarketInstance& m, const nlohmann::json& j);
};

std::vector<std::vector<int>> decode_sigma(const MarketInstance& m,
                                           const SigmaSpec& spec);

}  // namespace privm
