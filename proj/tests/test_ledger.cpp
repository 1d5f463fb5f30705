// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "ledger.hpp"

#include <cmath>

using namespace privm;

TEST_CASE("composition sums left to right") {
  CHECK(compose_epsilons({0.1, 0.2, 0.3}, 1.0) ==
        doctest::Approx(0.6).epsilon(1e-12));
  CHECK(compose_epsilons({}, 1.0) == 0.0);
  CHECK(compose_epsilons({0.5}, 1.0) == 0.5);
}

TEST_CASE("composition rejects bad entries naming the index") {
  CHECK_THROWS_WITH_AS(compose_epsilons({0.1, -0.2}, 1.0),
                       doctest::Contains("index 1"), ValidationError);
  CHECK_THROWS_WITH_AS(compose_epsilons({0.1, 0.0, 0.2}, 1.0),
                       doctest::Contains("index 1"), ValidationError);
  CHECK_THROWS_WITH_AS(compose_epsilons({0.1, 0.2, 1.5}, 1.0),
                       doctest::Contains("index 2"), ValidationError);
}

TEST_CASE("composition is additive over concatenation, exactly") {
  SplitMix64 rng(42);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a, b;
    const int na = 1 + rng.below(8), nb = 1 + rng.below(8);
    for (int i = 0; i < na; ++i) a.push_back(0.01 + 0.9 * rng.uniform());
    for (int i = 0; i < nb; ++i) b.push_back(0.01 + 0.9 * rng.uniform());
    std::vector<double> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    // left-to-right summation makes this bit-exact, not just approximate
    double partial = compose_epsilons(a, 1.0);
    for (double x : b) partial += x;
    CHECK(compose_epsilons(ab, 1.0) == partial);
  }
}

TEST_CASE("indistinguishability factor") {
  CHECK(indistinguishability_factor(0.2, 3) ==
        doctest::Approx(std::exp(0.6)).epsilon(1e-12));
  CHECK(indistinguishability_factor(0.0, 5) == 1.0);
  CHECK(indistinguishability_factor(0.7, 1) ==
        doctest::Approx(std::exp(0.7)).epsilon(1e-15));
  CHECK_THROWS_AS(indistinguishability_factor(0.2, 0), ValidationError);
  CHECK_THROWS_AS(indistinguishability_factor(-0.1, 1), ValidationError);

  // (eps, m) equals (m*eps, 1) up to ulp-scale error
  SplitMix64 rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const double eps = rng.uniform();
    const long mm = 1 + static_cast<long>(rng.below(9));
    const double a = indistinguishability_factor(eps, mm);
    const double b = indistinguishability_factor(mm * eps, 1);
    CHECK(a == doctest::Approx(b).epsilon(1e-14));
  }
}

TEST_CASE("commitment period") {
  CHECK(commitment_period({0.2, 0.2, 0.2}, 1.0, 0.5) == 2);
  CHECK(!commitment_period({0.1}, 1.0, 1.0).has_value());
  CHECK(commitment_period({0.3, 0.2}, 1.0, 0.0) == 0);
  CHECK_THROWS_AS(commitment_period({0.1}, 1.0, -1.0), ValidationError);
}

TEST_CASE("commitment period matches a brute-force scan and is monotone in "
          "the budget") {
  SplitMix64 rng(2024);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 1 + rng.below(10);
    std::vector<double> h;
    for (int i = 0; i < n; ++i) h.push_back(0.01 + 0.49 * rng.uniform());
    const double b1 = 2.5 * rng.uniform();
    const double b2 = b1 + rng.uniform();

    auto brute = [&](double budget) -> std::optional<int> {
      for (int t = 0; t < n; ++t) {
        double cum = 0.0;
        for (int s = 0; s <= t; ++s) cum += h[s];
        if (cum >= budget) return t;
      }
      return std::nullopt;
    };
    CHECK(commitment_period(h, 0.5, b1) == brute(b1));
    const auto p1 = commitment_period(h, 0.5, b1);
    const auto p2 = commitment_period(h, 0.5, b2);
    if (p2.has_value()) {
      REQUIRE(p1.has_value());
      CHECK(*p1 <= *p2);
    }
  }
}

TEST_CASE("ledger records and accumulates") {
  PrivacyLedger ledger(0.5, 1.0);
  CHECK(!ledger.budget_reached());
  ledger.record(0.2);
  ledger.record(0.2);
  CHECK(!ledger.budget_reached());
  ledger.record(0.2);
  CHECK(ledger.budget_reached());
  CHECK(ledger.cumulative() == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(ledger.commitment() == 2);
  CHECK_THROWS_AS(ledger.record(0.0), ValidationError);
  CHECK_THROWS_AS(ledger.record(1.5), ValidationError);
  CHECK(ledger.history().size() == 3);
}
