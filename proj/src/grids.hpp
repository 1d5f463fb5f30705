// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "common.hpp"

namespace privm {

/// Strictly increasing grid of instrumental-preference values.
struct ValueGrid {
  std::vector<double> pts;

  int size() const { return static_cast<int>(pts.size()); }
  double lo() const { return pts.front(); }
  double hi() const { return pts.back(); }
  double operator[](int k) const { return pts[k]; }

  /// Midpoint cell width; half-cells at the boundaries. Density proxy is
  /// probability mass divided by this width.
  double cell_width(int k) const;

  static ValueGrid linspace(double lo, double hi, int n);

  /// allow_degenerate permits a single-point grid (test-only mode).
  void validate(bool allow_degenerate = false) const;
};

/// Strictly increasing epsilon grid in (0, cap]; the last point is the cap.
struct EpsilonGrid {
  std::vector<double> pts;

  int size() const { return static_cast<int>(pts.size()); }
  double cap() const { return pts.back(); }
  double operator[](int k) const { return pts[k]; }

  /// Index of the closest grid point (ties to the lower index).
  int nearest(double eps) const;

  void validate() const;
};

/// Finite sufficient statistic for the accumulated privacy loss: bin edges
/// over [0, reach]. The dynamic-programming state advances with the bin's
/// lower edge as the representative cumulative loss, identically in every
/// module, so enumeration and simulation agree exactly.
struct BudgetBins {
  std::vector<double> edges;  // size count()+1, strictly increasing, edges[0]=0

  int count() const { return static_cast<int>(edges.size()) - 1; }
  double lower_edge(int bin) const { return edges[bin]; }

  /// Bin containing cumulative loss x (clamped into the covered range).
  int locate(double x) const;

  /// State advance after one more period of loss eps.
  int advance(int bin, double eps) const { return locate(edges[bin] + eps); }

  static BudgetBins uniform(double reach, int count);

  void validate(double reach) const;
};

}  // namespace privm
