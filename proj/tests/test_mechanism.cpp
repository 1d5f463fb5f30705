// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "fixtures.hpp"

using namespace privm;

TEST_CASE("report cells encode and decode") {
  const auto m = fixtures::two_owner();
  const ReportSpace space(m);
  CHECK(space.cells == 16);  // (3+1)^2
  SplitMix64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<int> syms{static_cast<int>(rng.below(4)),
                          static_cast<int>(rng.below(4))};
    const auto cell = space.encode(syms);
    CHECK(space.symbol_of(cell, 0) == syms[0]);
    CHECK(space.symbol_of(cell, 1) == syms[1]);
    const int replacement = static_cast<int>(rng.below(4));
    const auto cell2 = space.with_symbol(cell, 1, replacement);
    CHECK(space.symbol_of(cell2, 1) == replacement);
    CHECK(space.symbol_of(cell2, 0) == syms[0]);
  }
  CHECK(space.departed_symbol(0) == 3);
}

TEST_CASE("sigma decode: separable, affine, full table") {
  const auto m = fixtures::two_owner();
  const ReportSpace space(m);

  SigmaSpec sep;
  sep.family = SigmaSpec::Family::Separable;
  sep.per_period = {0, 2};
  const auto t1 = decode_sigma(m, sep);
  REQUIRE(t1.size() == 2);
  for (int e : t1[0]) CHECK(e == 0);
  for (int e : t1[1]) CHECK(e == 2);

  SigmaSpec aff;
  aff.family = SigmaSpec::Family::AffineMeanReport;
  aff.slope = {-0.2, -0.2};
  aff.intercept = {0.6, 0.6};
  const auto t2 = decode_sigma(m, aff);
  for (const auto& row : t2)
    for (int e : row) {
      CHECK(e >= 0);
      CHECK(e < m.eps_grid.size());
    }
  // all-departed cell maps to the intercept
  std::vector<int> dep{space.departed_symbol(0), space.departed_symbol(1)};
  CHECK(m.eps_grid[t2[0][space.encode(dep)]] ==
        doctest::Approx(0.4));  // clamp(0.6) -> nearest grid point = cap

  SigmaSpec full;
  full.family = SigmaSpec::Family::FullTable;
  full.table.assign(2, std::vector<int>(space.cells, 1));
  const auto t3 = decode_sigma(m, full);
  CHECK(t3[1][3] == 1);

  SigmaSpec bad = sep;
  bad.per_period = {0};
  CHECK_THROWS_AS(decode_sigma(m, bad), ValidationError);
}

TEST_CASE("rules JSON round trip preserves payments") {
  const auto m = fixtures::two_owner();
  auto rules =
      MechanismRules::zero_payments(m, fixtures::constant_sigma(m, 0.3));
  SplitMix64 rng(3);
  for (auto& per_owner : rules.beta)
    for (auto& per_t : per_owner)
      for (auto& x : per_t) x = rng.uniform();
  rules.rho[1][0] = 0.25;

  const auto j = rules.to_json();
  const auto back = MechanismRules::from_json(m, j);
  CHECK(back.sigma == rules.sigma);
  CHECK(back.beta == rules.beta);
  CHECK(back.theta == rules.theta);
  CHECK(back.rho == rules.rho);
}

TEST_CASE("rules validation rejects incomplete tables") {
  const auto m = fixtures::two_owner();
  auto rules =
      MechanismRules::zero_payments(m, fixtures::constant_sigma(m, 0.3));
  auto j = rules.to_json();
  j["sigma"][0] = std::vector<int>{0};  // wrong cell count
  CHECK_THROWS_AS(MechanismRules::from_json(m, j), ValidationError);
  auto j2 = rules.to_json();
  j2["rho"][0] = std::vector<double>{0.0};  // wrong period count
  CHECK_THROWS_AS(MechanismRules::from_json(m, j2), ValidationError);
  auto j3 = rules.to_json();
  j3["sigma"][0][0] = 99;  // off the epsilon grid
  CHECK_THROWS_AS(MechanismRules::from_json(m, j3), ValidationError);
}

TEST_CASE("beliefs: n=1 empty others, never-stop survival, survival after a "
          "top-point threshold") {
  const auto m1 = fixtures::canonical();
  const auto sigma = fixtures::constant_sigma(m1, 0.3);
  const auto b1 = build_beliefs(m1, sigma, std::nullopt);
  for (int t = 0; t <= m1.horizon; ++t) {
    REQUIRE(b1.others[0][t].size() == 1);
    CHECK(b1.others[0][t][0].second == doctest::Approx(1.0));
    CHECK(b1.survival[0][t] == doctest::Approx(1.0));
  }
  CHECK(b1.expected_eps[0] == doctest::Approx(0.3));
  CHECK(b1.expected_cum[2] == doctest::Approx(0.9).epsilon(1e-12));

  // two owners, uniform kernels, owner 1 stops iff at the top point at t=0:
  // period-1 survival equals 1 - f0(top)
  auto m2 = fixtures::two_owner();
  m2.owners[1].kernel = make_uniform_kernel(m2.owners[1].grid, 1, 4);
  auto th = never_stop_profile(m2);
  th[1].kl[0] = m2.owners[1].grid.hi();
  const auto b2 = build_beliefs(m2, fixtures::constant_sigma(m2, 0.3), th);
  CHECK(b2.survival[1][1] ==
        doctest::Approx(1.0 - m2.owners[1].kernel.f0[2]).epsilon(1e-12));
  CHECK(b2.survival[0][1] == doctest::Approx(1.0));
}
