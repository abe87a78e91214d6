#include <doctest.h>

#include <cmath>

#include "predgame/errors.hpp"
#include "predgame/mi/digamma.hpp"
#include "predgame/rng.hpp"
#include "predgame/selftest/selftest.hpp"

using namespace predgame;

TEST_CASE("digamma at 1 is minus the Euler-Mascheroni constant") {
  CHECK(mi::digamma(1.0) == doctest::Approx(-0.5772156649015328606).epsilon(1e-12));
}

TEST_CASE("digamma recurrence psi(x+1) = psi(x) + 1/x") {
  Rng rng(6001);
  for (int i = 0; i < 200; ++i) {
    const double x = std::pow(10.0, -3.0 + 9.0 * rng.uniform());
    CHECK(mi::digamma(x + 1.0) - mi::digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-12));
  }
}

TEST_CASE("digamma matches the 200-term series oracle to 1e-10") {
  for (const double x : {1e-3, 0.02, 0.5, 1.0, 2.0, 10.5, 137.0, 9999.5, 1e6}) {
    CHECK(std::fabs(mi::digamma(x) - selftest::digamma_series_oracle(x)) <= 1e-10);
  }
}

TEST_CASE("digamma known half-integer value: psi(0.5) = -gamma - 2 ln 2") {
  const double expected = -0.5772156649015328606 - 2.0 * std::log(2.0);
  CHECK(mi::digamma(0.5) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("digamma domain error") {
  CHECK_THROWS_AS(mi::digamma(0.0), ValidationError);
  CHECK_THROWS_AS(mi::digamma(-2.0), ValidationError);
}

TEST_CASE("fault injection: a corrupted digamma is caught and named") {
  const auto result = selftest::check_digamma([](double x) { return mi::digamma(x) + 1e-8; });
  CHECK_FALSE(result.passed);
  CHECK(result.name == "digamma");
}
