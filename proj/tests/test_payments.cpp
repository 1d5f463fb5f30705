// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "fixtures.hpp"

#include <cmath>

using namespace privm;

namespace {

MarketInstance uniform_canonical() {
  auto m = fixtures::canonical();
  m.owners[0].kernel = make_uniform_kernel(m.owners[0].grid, 3, 4);
  return m;
}

}  // namespace

TEST_CASE("theta at the top type is the bare flow loss") {
  const auto m = fixtures::random_fosd(31);
  SplitMix64 rng(31);
  const auto sigma = fixtures::random_separable_sigma(m, rng);
  const auto synth = synthesize_mechanism(m, sigma);
  const auto& grid = m.owners[0].grid;
  for (int t = 0; t <= m.horizon; ++t) {
    const std::size_t cell = 5;  // own symbol = top grid point (n = 1)
    CHECK(synth.rules.theta[0][t][cell] ==
          doctest::Approx(flow_loss(grid.hi(),
                                    m.eps_grid[sigma[t][cell]]))
              .epsilon(1e-12));
  }
}

TEST_CASE("constant sigma closed forms: theta, beta, rho, delta_S") {
  const double eps = 0.3;
  const double unit = std::exp(eps) - 1.0;

  // value-independent kernel: every closed form binds at once
  const auto m = uniform_canonical();
  const auto synth = synthesize_mechanism(m, fixtures::constant_sigma(m, eps));
  REQUIRE(synth.converged);
  const auto& grid = m.owners[0].grid;
  double e_v = 0.0;
  for (int j = 0; j < 6; ++j) e_v += m.owners[0].kernel.f0[j] * grid[j];
  for (int t = 0; t <= m.horizon; ++t)
    for (int v = 0; v < 6; ++v) {
      CHECK(std::abs(synth.rules.theta[0][t][v] - grid.hi() * unit) <= 1e-10);
      if (t < m.horizon) {
        // beta = vbar(e-1) - E[vbar - v'](e-1); uniform rows make E[v'] the
        // f0 mean at every conditioning value
        CHECK(synth.rules.beta[0][t][v] ==
              doctest::Approx(grid.hi() * unit - (grid.hi() - e_v) * unit)
                  .epsilon(1e-10));
      } else {
        CHECK(synth.rules.beta[0][t][v] ==
              doctest::Approx((grid.hi() - grid[v]) * unit + grid[v] * unit)
                  .epsilon(1e-10));
      }
    }
  for (int t = 0; t <= m.horizon; ++t) CHECK(std::abs(synth.rules.rho[0][t]) <= 1e-10);
  const auto cert = delta_dic_certificate(m, synth);
  for (int t = 0; t <= m.horizon; ++t) {
    CHECK(std::abs(cert.delta_s[0][t]) <= 1e-10);
    CHECK(cert.delta_not_s[0][t] <= 1e-9);
  }
  CHECK(cert.verdict == "DIC");

  // strict-FOSD kernel: theta and rho keep the closed forms (tau = t rents;
  // never-stop fixed point caps rho at the top)
  const auto m2 = fixtures::canonical();
  const auto synth2 =
      synthesize_mechanism(m2, fixtures::constant_sigma(m2, eps));
  REQUIRE(synth2.converged);
  for (int t = 0; t <= m2.horizon; ++t) {
    for (int v = 0; v < 6; ++v)
      CHECK(std::abs(synth2.rules.theta[0][t][v] - grid.hi() * unit) <= 1e-10);
    CHECK(std::abs(synth2.rules.rho[0][t]) <= 1e-10);
  }
  const auto cert2 = delta_dic_certificate(m2, synth2);
  for (int t = 0; t <= m2.horizon; ++t)
    CHECK(std::abs(cert2.delta_s[0][t]) <= 1e-10);
}

TEST_CASE("nearly-degenerate sticky kernel: the continuation expectation in "
          "beta collapses to a point evaluation") {
  auto m = fixtures::one_owner(2, {1.0, 1.5, 2.0}, {0.2, 0.4}, 2);
  m.owners[0].kernel =
      make_sticky_kernel(m.owners[0].grid, 2, 2, 1.0 - 1e-6);
  const double eps = 0.4;
  const auto synth = synthesize_mechanism(m, fixtures::constant_sigma(m, eps));
  for (int t = 0; t < m.horizon; ++t)
    for (int v = 0; v < 3; ++v) {
      const double closed = synth.rents.sup_lam_top(0, t, v) -
                            synth.rents.sup_lam_top(0, t + 1, v) +
                            flow_loss(m.owners[0].grid[v], eps);
      CHECK(synth.rules.beta[0][t][v] ==
            doctest::Approx(closed).epsilon(1e-4));
    }
}

TEST_CASE("beta at the horizon is the one-period rent plus the flow loss") {
  const auto m = fixtures::random_fosd(99);
  SplitMix64 rng(99);
  const auto sigma = fixtures::random_separable_sigma(m, rng);
  const auto synth = synthesize_mechanism(m, sigma);
  const int T = m.horizon;
  for (int v = 0; v < 6; ++v)
    CHECK(synth.rules.beta[0][T][v] ==
          doctest::Approx(synth.rents.lam_top(0, T, v, T) +
                          flow_loss(m.owners[0].grid[v],
                                    m.eps_grid[sigma[T][v]]))
              .epsilon(1e-12));
}

TEST_CASE("rho: zero at the horizon, telescoped identity, hand enumeration "
          "on a two-period instance") {
  const auto m = fixtures::tiny(5);
  SplitMix64 rng(5);
  const auto sigma = fixtures::random_separable_sigma(m, rng);
  const auto beliefs = build_beliefs(m, sigma, std::nullopt);
  const RentTable rents(m, sigma, beliefs);

  ThresholdProfile kappa = never_stop_profile(m);
  kappa[0].kl[0] = m.owners[0].grid[1];
  kappa[0].kl[1] = m.owners[0].grid[2];
  kappa[0].kl[2] = m.owners[0].grid.lo();
  const auto rho = synthesize_rho(m, sigma, beliefs, rents, kappa, nullptr);
  CHECK(rho[0][m.horizon] == 0.0);

  // every bracket telescopes along each path, so rho(t) collapses to
  // sup_tau Lambda(kappa(t); tau) - Lambda(kappa(t); t)
  for (int t = 0; t < m.horizon; ++t) {
    const int k = t == 0 ? 1 : 2;
    CHECK(rho[0][t] == doctest::Approx(rents.sup_lam_top(0, t, k) -
                                       rents.lam_top(0, t, k, t))
                           .epsilon(1e-10));
  }

  // literal hand enumeration at t = T-1 over the 3-point kernel
  const int t = 1, start = 2;
  const int bin1 = beliefs.path_bin[1];
  const double e1 = m.eps_grid[sigma[1][start]];
  const int bin2 = m.bins.advance(bin1, e1);
  const auto& row = m.owners[0].kernel.row(2, start, bin2);
  double hand = -(rents.lam_top(0, 1, start, 1) -
                  rents.sup_lam_top(0, 1, start));
  for (int j = 0; j < 3; ++j) {
    const int capped = std::min(j, 0);  // kappa(2) = v_lower
    hand += row[j] * (rents.lam_top(0, 2, capped, 2) -
                      rents.sup_lam_top(0, 2, capped));
  }
  CHECK(rho[0][t] == doctest::Approx(hand).epsilon(1e-10));
}

TEST_CASE("rho substitutes the top cap for never-stop thresholds with a "
          "warning") {
  const auto m = fixtures::canonical();
  const auto sigma = fixtures::constant_sigma(m, 0.3);
  const auto beliefs = build_beliefs(m, sigma, std::nullopt);
  const RentTable rents(m, sigma, beliefs);
  std::vector<std::string> warnings;
  const auto rho = synthesize_rho(m, sigma, beliefs, rents,
                                  never_stop_profile(m), &warnings);
  CHECK(!warnings.empty());
  for (double r : rho[0]) CHECK(std::abs(r) <= 1e-12);
}

TEST_CASE("check_sufficient: clean margins under report-independent sigma, "
          "zero at equal reports") {
  const auto m = uniform_canonical();
  const auto synth = synthesize_mechanism(m, fixtures::constant_sigma(m, 0.3));
  const auto rep = check_sufficient(m, synth);
  CHECK(rep.pass());
  CHECK(rep.min_c1 >= -1e-10);
  CHECK(rep.min_c2 >= -1e-10);
  CHECK(rep.min_c1 <= 1e-10);  // constant sigma: the margin binds at zero

  const auto nec = check_necessary(m, synth);
  CHECK(nec.min_c1 >= -1e-10);
  CHECK(nec.min_c2 >= -1e-10);
}

TEST_CASE("adversarial sigma (punishing high reports with more exposure) "
          "fails the sufficient condition and the oracle confirms a gain") {
  const auto m = fixtures::canonical();
  SigmaSpec s;
  s.family = SigmaSpec::Family::AffineMeanReport;
  const double span = m.owners[0].grid.hi() - m.owners[0].grid.lo();
  for (int t = 0; t <= m.horizon; ++t) {
    s.slope.push_back(0.4 / span);  // increasing in the report
    s.intercept.push_back(0.1 - 0.4 / span * m.owners[0].grid.lo());
  }
  const auto sigma = decode_sigma(m, s);
  const auto synth = synthesize_mechanism(m, sigma);
  const auto rep = check_sufficient(m, synth);
  CHECK(!rep.pass());
  CHECK(rep.min_c1 < -1e-6);

  const auto dev = max_deviation_gain(m, synth.rules);
  CHECK(dev.max_gain > 1e-6);

  const auto cert = delta_dic_certificate(m, synth);
  CHECK(cert.verdict == "approx-DIC");
  CHECK(cert.max_delta_s > 1e-6);
}

TEST_CASE("sufficient implies necessary across the fixture corpus") {
  for (std::uint64_t seed : {41, 42, 43, 44}) {
    const auto m = fixtures::random_fosd(seed);
    SplitMix64 rng(seed);
    const auto sigma = seed % 2 == 0
                           ? fixtures::random_separable_sigma(m, rng)
                           : fixtures::decreasing_affine_sigma(m, rng);
    const auto synth = synthesize_mechanism(m, sigma);
    const auto suf = check_sufficient(m, synth);
    const auto nec = check_necessary(m, synth);
    if (suf.pass()) {
      CHECK(nec.min_c1 >= -kTieTol);
      CHECK(nec.min_c2 >= -kTieTol);
    }
  }
}

TEST_CASE("certificate soundness: measured branch gains never exceed the "
          "deltas") {
  struct Case {
    MarketInstance m;
    std::vector<std::vector<int>> sigma;
  };
  std::vector<Case> cases;
  {
    auto m = uniform_canonical();
    cases.push_back({m, fixtures::constant_sigma(m, 0.3)});
  }
  {
    auto m = fixtures::canonical();
    cases.push_back({m, fixtures::constant_sigma(m, 0.4)});
  }
  for (std::uint64_t seed : {7, 8}) {
    auto m = fixtures::tiny(seed);
    SplitMix64 rng(seed + 100);
    cases.push_back({m, fixtures::random_separable_sigma(m, rng)});
    SplitMix64 rng2(seed + 200);
    cases.push_back({m, fixtures::decreasing_affine_sigma(m, rng2)});
  }
  {
    auto m = fixtures::two_owner();
    SplitMix64 rng(61);
    cases.push_back({m, fixtures::random_separable_sigma(m, rng)});
    cases.push_back({m, fixtures::constant_sigma(m, 0.3)});
  }
  {
    // adversarial increasing sigma
    auto m = fixtures::tiny(9);
    SigmaSpec s;
    s.family = SigmaSpec::Family::AffineMeanReport;
    const double span = m.owners[0].grid.hi() - m.owners[0].grid.lo();
    for (int t = 0; t <= m.horizon; ++t) {
      s.slope.push_back(0.3 / span);
      s.intercept.push_back(0.2 - 0.3 / span * m.owners[0].grid.lo());
    }
    cases.push_back({m, decode_sigma(m, s)});
  }

  for (const auto& c : cases) {
    const auto synth = synthesize_mechanism(c.m, c.sigma);
    const auto cert = delta_dic_certificate(c.m, synth);
    const auto dev = max_deviation_gain(c.m, synth.rules);
    for (int i = 0; i < c.m.n(); ++i)
      for (int t = 0; t <= c.m.horizon; ++t) {
        CHECK(dev.max_stop_gain[i][t] <= cert.delta_s[i][t] + 1e-8);
        if (t < c.m.horizon)
          CHECK(dev.max_continue_gain[i][t] <= cert.delta_not_s[i][t] + 1e-8);
      }
  }
}

TEST_CASE("single-point grid: the certificate deltas vanish") {
  MarketInstance m;
  m.horizon = 1;
  m.eps_grid.pts = {0.3};
  m.bins = BudgetBins::uniform(0.6, 1);
  m.max_loss_scale = 2.0;
  m.allow_degenerate = true;
  OwnerSpec o;
  o.grid.pts = {1.5};
  o.budget = 0.6;
  o.kernel.f0 = {1.0};
  o.kernel.rows = {{{{1.0}}}};
  m.owners.push_back(o);
  m.validate();
  const auto synth = synthesize_mechanism(m, fixtures::constant_sigma(m, 0.3));
  const auto cert = delta_dic_certificate(m, synth);
  for (int t = 0; t <= 1; ++t) {
    CHECK(std::abs(cert.delta_s[0][t]) <= 1e-12);
    double sup_rho = -kInf;
    for (int tau = t; tau <= 1; ++tau)
      sup_rho = std::max(sup_rho, synth.rules.rho[0][tau]);
    CHECK(std::abs(cert.delta_not_s[0][t] - sup_rho) <= 1e-12);
  }
}

TEST_CASE("certificate flags violated kernel assumptions") {
  auto m = fixtures::canonical();
  // break FOSD
  std::swap(m.owners[0].kernel.rows[0][0][0], m.owners[0].kernel.rows[0][5][0]);
  const auto synth = synthesize_mechanism(m, fixtures::constant_sigma(m, 0.3));
  const auto cert = delta_dic_certificate(m, synth);
  CHECK(cert.verdict == "violated-conditions");
}

TEST_CASE("zero-rho corollary: degenerate root at the bottom under "
          "tau-independent rents; infeasible when the expression stays "
          "positive") {
  const auto m = uniform_canonical();
  const auto res =
      zero_rho_threshold_solve(m, fixtures::constant_sigma(m, 0.3));
  CHECK(res.infeasible_t.empty());
  for (int t = 0; t <= m.horizon; ++t)
    CHECK(res.kappa[0][t] == m.owners[0].grid.lo());
  // self-consistency: the returned thresholds make rho vanish
  const auto beliefs =
      build_beliefs(m, fixtures::constant_sigma(m, 0.3), std::nullopt);
  const RentTable rents(m, fixtures::constant_sigma(m, 0.3), beliefs);
  ThresholdProfile kappa = never_stop_profile(m);
  for (int t = 0; t <= m.horizon; ++t) kappa[0].kl[t] = *res.kappa[0][t];
  const auto rho = synthesize_rho(m, fixtures::constant_sigma(m, 0.3),
                                  beliefs, rents, kappa, nullptr);
  for (double r : rho[0]) CHECK(std::abs(r) <= 1e-8);

  // sticky kernel: the expression is strictly positive at interior points
  // (longer horizons add rent), leaving only the degenerate root at the top
  auto m2 = fixtures::canonical();
  SigmaSpec s;
  s.family = SigmaSpec::Family::Separable;
  s.per_period = {4, 2, 1, 0};
  const auto res2 = zero_rho_threshold_solve(m2, decode_sigma(m2, s));
  CHECK(res2.infeasible_t.empty());
  for (int t = 0; t < m2.horizon; ++t)
    CHECK(res2.kappa[0][t] == m2.owners[0].grid.hi());
}

TEST_CASE("stopping-control feasibility with the trivial constant family") {
  const auto m = uniform_canonical();
  SigmaSpec family;
  family.family = SigmaSpec::Family::Candidates;
  family.candidates = {fixtures::constant_sigma(m, 0.3)};

  ControlTarget retain{ControlTarget::Kind::RetainUntilHorizon, 0};
  const auto r1 = stopping_control_feasibility(m, 0, retain, family);
  CHECK(r1.candidates_checked == 1);
  CHECK(r1.feasible);

  ControlTarget force0{ControlTarget::Kind::ForceStopAt, 0};
  const auto r2 = stopping_control_feasibility(m, 0, force0, family);
  CHECK(r2.feasible);

  SigmaSpec empty_family;
  empty_family.family = SigmaSpec::Family::Candidates;
  const auto r3 = stopping_control_feasibility(m, 0, retain, empty_family);
  CHECK(!r3.feasible);
  CHECK(r3.candidates_checked == 0);
}
