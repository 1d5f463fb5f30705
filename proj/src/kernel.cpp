// SPDX-License-Identifier: Apache-2.0
#include "kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace privm {

double TransitionKernel::cdf(int t, int v_prev, int bin, int k) const {
  const auto& r = row(t, v_prev, bin);
  double c = 0.0;
  for (int j = 0; j <= k; ++j) c += r[j];
  return c;
}

std::string KernelReport::summary() const {
  if (ok()) return "kernel valid";
  std::ostringstream os;
  for (const auto& v : normalization)
    os << "normalization violation at t=" << v.t << " v_prev=" << v.v_low
       << " bin=" << v.bin << " (sum=" << v.value << ")\n";
  for (const auto& v : support)
    os << "full-support violation at t=" << v.t << " v_prev=" << v.v_low
       << " bin=" << v.bin << " index=" << v.index << "\n";
  if (fosd)
    os << "FOSD violation at t=" << fosd->t << " bin=" << fosd->bin
       << " v_low=" << fosd->v_low << " v_high=" << fosd->v_high
       << " grid index=" << fosd->index << "\n";
  return os.str();
}

KernelReport validate_kernel(const TransitionKernel& k, int grid_size,
                             int horizon, int bin_count) {
  if (static_cast<int>(k.f0.size()) != grid_size)
    throw ValidationError("kernel f0 length does not match the value grid");
  if (k.horizon() != horizon)
    throw ValidationError("kernel row count does not match the horizon");
  for (int t = 1; t <= horizon; ++t) {
    const auto& slab = k.rows[t - 1];
    if (static_cast<int>(slab.size()) != grid_size)
      throw ValidationError("kernel slab at t=" + std::to_string(t) +
                            " does not match the value grid");
    for (const auto& per_bin : slab) {
      if (static_cast<int>(per_bin.size()) != bin_count)
        throw ValidationError("kernel slab at t=" + std::to_string(t) +
                              " does not match the budget binning");
      for (const auto& r : per_bin)
        if (static_cast<int>(r.size()) != grid_size)
          throw ValidationError("kernel row at t=" + std::to_string(t) +
                                " has the wrong length");
    }
  }

  KernelReport report;
  auto check_row = [&](const std::vector<double>& r, int t, int vp, int bin) {
    double sum = 0.0;
    for (double x : r) sum += x;
    if (std::abs(sum - 1.0) > 1e-12)
      report.normalization.push_back({"normalization", t, bin, vp, 0, 0, sum});
    for (int j = 0; j < grid_size; ++j)
      if (!(r[j] > 0.0))
        report.support.push_back({"support", t, bin, vp, 0, j, r[j]});
  };

  check_row(k.f0, 0, -1, 0);
  for (int t = 1; t <= horizon; ++t)
    for (int vp = 0; vp < grid_size; ++vp)
      for (int bin = 0; bin < bin_count; ++bin)
        check_row(k.row(t, vp, bin), t, vp, bin);

  // FOSD: for fixed (t, bin), the CDF row of a higher conditioning value must
  // be pointwise <= the CDF row of a lower one.
  for (int t = 1; t <= horizon && !report.fosd; ++t)
    for (int bin = 0; bin < bin_count && !report.fosd; ++bin)
      for (int lo = 0; lo + 1 < grid_size && !report.fosd; ++lo) {
        const int hi = lo + 1;
        double cdf_lo = 0.0, cdf_hi = 0.0;
        for (int j = 0; j < grid_size; ++j) {
          cdf_lo += k.row(t, lo, bin)[j];
          cdf_hi += k.row(t, hi, bin)[j];
          if (cdf_hi > cdf_lo + 1e-12) {
            report.fosd = KernelViolation{"fosd", t, bin, lo, hi, j,
                                          cdf_hi - cdf_lo};
            break;
          }
        }
      }
  return report;
}

std::pair<double, double> kernel_cdf_sensitivity(const TransitionKernel& k,
                                                 const ValueGrid& grid, int t,
                                                 int v_realized, int v_prev,
                                                 int bin) {
  const int n = grid.size();
  if (n < 2)
    throw ValidationError(
        "sensitivity undefined: single-row kernel has no neighboring "
        "conditioning value");
  int lo = v_prev - 1, hi = v_prev + 1;
  if (lo < 0) {
    lo = 0;
    hi = 1;
  } else if (hi >= n) {
    lo = n - 2;
    hi = n - 1;
  }
  const double dF = (k.cdf(t, hi, bin, v_realized) -
                     k.cdf(t, lo, bin, v_realized)) /
                    (grid[hi] - grid[lo]);
  const double mass = k.row(t, v_prev, bin)[v_realized];
  const double density = mass / grid.cell_width(v_realized);
  return {dF, density};
}

namespace {
TransitionKernel filled(const ValueGrid& grid, int horizon, int bin_count) {
  TransitionKernel k;
  const int n = grid.size();
  k.rows.assign(horizon, std::vector<std::vector<std::vector<double>>>(
                             n, std::vector<std::vector<double>>(
                                    bin_count, std::vector<double>(n, 0.0))));
  k.f0.assign(n, 1.0 / n);
  return k;
}

void normalize(std::vector<double>& r) {
  double s = 0.0;
  for (double x : r) s += x;
  for (double& x : r) x /= s;
}
}  // namespace

TransitionKernel make_uniform_kernel(const ValueGrid& grid, int horizon,
                                     int bin_count) {
  TransitionKernel k = filled(grid, horizon, bin_count);
  const int n = grid.size();
  for (auto& slab : k.rows)
    for (auto& per_bin : slab)
      for (auto& r : per_bin) r.assign(n, 1.0 / n);
  return k;
}

TransitionKernel make_sticky_kernel(const ValueGrid& grid, int horizon,
                                    int bin_count, double p) {
  if (!(p >= 0.0) || !(p < 1.0))
    throw ValidationError("sticky kernel needs p in [0, 1)");
  TransitionKernel k = filled(grid, horizon, bin_count);
  const int n = grid.size();
  for (auto& slab : k.rows)
    for (int vp = 0; vp < n; ++vp)
      for (auto& r : slab[vp]) {
        r.assign(n, (1.0 - p) / n);
        r[vp] += p;
      }
  return k;
}

TransitionKernel make_drift_kernel(const ValueGrid& grid, int horizon,
                                   int bin_count, double delta,
                                   const BudgetBins& bins, double scale) {
  TransitionKernel k = filled(grid, horizon, bin_count);
  const int n = grid.size();
  const double span = grid.hi() - grid.lo();
  const double s = scale > 0.0 ? scale : std::max(span / 4.0, 1e-9);
  for (int t = 1; t <= horizon; ++t)
    for (int vp = 0; vp < n; ++vp)
      for (int bin = 0; bin < bin_count; ++bin) {
        auto& r = k.rows[t - 1][vp][bin];
        const double center = grid[vp] + delta * bins.lower_edge(bin);
        for (int j = 0; j < n; ++j)
          r[j] = std::exp(-std::abs(grid[j] - center) / s) * grid.cell_width(j);
        normalize(r);
        // mix with a uniform floor; the Laplace part is MLR-ordered in the
        // center, so the mixture stays FOSD-ordered and fully supported
        for (int j = 0; j < n; ++j) r[j] = 0.98 * r[j] + 0.02 / n;
      }
  return k;
}

}  // namespace privm
