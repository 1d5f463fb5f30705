// SPDX-License-Identifier: Apache-2.0
#include "grids.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace privm {

double ValueGrid::cell_width(int k) const {
  const int n = size();
  if (n == 1) return 1.0;  // degenerate grid: unit measure
  if (k == 0) return (pts[1] - pts[0]) / 2.0;
  if (k == n - 1) return (pts[n - 1] - pts[n - 2]) / 2.0;
  return (pts[k + 1] - pts[k - 1]) / 2.0;
}

ValueGrid ValueGrid::linspace(double lo, double hi, int n) {
  ValueGrid g;
  g.pts.resize(n);
  for (int i = 0; i < n; ++i)
    g.pts[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1 > 0 ? n - 1 : 1);
  if (n > 1) g.pts[n - 1] = hi;
  return g;
}

void ValueGrid::validate(bool allow_degenerate) const {
  if (pts.empty()) throw ValidationError("value grid is empty");
  if (pts.size() == 1 && !allow_degenerate)
    throw ValidationError(
        "value grid needs at least 2 points (single-point grids are a "
        "degenerate test mode)");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!std::isfinite(pts[i]))
      throw ValidationError("value grid point " + std::to_string(i) +
                            " is not finite");
    if (i > 0 && !(pts[i] > pts[i - 1]))
      throw ValidationError("value grid must be strictly increasing at index " +
                            std::to_string(i));
  }
}

int EpsilonGrid::nearest(double eps) const {
  int best = 0;
  double dist = std::abs(pts[0] - eps);
  for (int k = 1; k < size(); ++k) {
    const double d = std::abs(pts[k] - eps);
    if (d < dist - 1e-15) {
      dist = d;
      best = k;
    }
  }
  return best;
}

void EpsilonGrid::validate() const {
  if (pts.empty()) throw ValidationError("epsilon grid is empty");
  if (!(pts.front() > 0.0))
    throw ValidationError("epsilon grid must start above 0");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!std::isfinite(pts[i]))
      throw ValidationError("epsilon grid point " + std::to_string(i) +
                            " is not finite");
    if (i > 0 && !(pts[i] > pts[i - 1]))
      throw ValidationError(
          "epsilon grid must be strictly increasing at index " +
          std::to_string(i));
  }
}

int BudgetBins::locate(double x) const {
  if (x <= edges.front()) return 0;
  if (x >= edges.back()) return count() - 1;
  // bins are [e_k, e_{k+1}) except the last, which is closed
  int lo = 0, hi = count() - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (x >= edges[mid])
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

BudgetBins BudgetBins::uniform(double reach, int count) {
  if (count < 1) throw ValidationError("budget bin count must be >= 1");
  BudgetBins b;
  b.edges.resize(count + 1);
  for (int k = 0; k <= count; ++k)
    b.edges[k] = reach * static_cast<double>(k) / count;
  b.edges[0] = 0.0;
  return b;
}

void BudgetBins::validate(double reach) const {
  if (edges.size() < 2) throw ValidationError("budget binning needs >= 1 bin");
  if (edges.front() != 0.0)
    throw ValidationError("budget bin edges must start at 0");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]))
      throw ValidationError("budget bin edges must be strictly increasing");
  if (edges.back() < reach - 1e-12)
    throw ValidationError("budget bins do not cover the reachable range");
}

}  // namespace privm
