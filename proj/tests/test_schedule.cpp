#include <cmath>
#include <vector>

#include "doctest.h"
#include "graphbsi/error.hpp"
#include "graphbsi/schedule.hpp"

using namespace graphbsi;

TEST_CASE("beta follows the exponential schedule") {
  const auto s = PrecisionSchedule::with_uniform_prior(3.0, 12.0, 1.0, 3);
  CHECK(s.beta(0.0) == 0.0);
  CHECK(s.beta(1.0) == doctest::Approx(9.0).epsilon(1e-14));
  for (double t : {0.1, 0.25, 0.5, 0.9}) {
    // Independent form: beta_start * ((beta_end / beta_start)^t - 1).
    const double expected = 3.0 * (std::pow(4.0, t) - 1.0);
    CHECK(s.beta(t) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("beta_prime matches central differences") {
  const auto s = PrecisionSchedule::with_uniform_prior(0.5, 40.0, 1.0, 2);
  const double h = 1e-5;
  for (double t : {0.05, 0.3, 0.6, 0.95}) {
    const double fd = (s.beta(t + h) - s.beta(t - h)) / (2 * h);
    CHECK(s.beta_prime(t) == doctest::Approx(fd).epsilon(1e-8));
    CHECK(s.beta_prime(t) > 0.0);
  }
  CHECK(s.beta_prime(0.0) == doctest::Approx(0.5 * std::log(80.0)).epsilon(1e-14));
}

TEST_CASE("alpha is the precision increment over an interval") {
  const auto s = PrecisionSchedule::with_uniform_prior(3.0, 12.0, 1.0, 2);
  CHECK(s.alpha(0.2, 0.7) == doctest::Approx(s.beta(0.7) - s.beta(0.2)));
  CHECK(s.alpha(0.0, 1.0) == doctest::Approx(9.0));
  // Increments over a partition add up.
  double sum = 0.0;
  for (int i = 0; i < 10; ++i) sum += s.alpha(i / 10.0, (i + 1) / 10.0);
  CHECK(sum == doctest::Approx(s.beta(1.0)).epsilon(1e-13));
  CHECK_THROWS_AS(s.alpha(0.5, 0.5), DomainError);
  CHECK_THROWS_AS(s.alpha(0.6, 0.5), DomainError);
}

TEST_CASE("times outside [0, 1] are rejected") {
  const auto s = PrecisionSchedule::with_uniform_prior(3.0, 12.0, 1.0, 2);
  CHECK_THROWS_AS(s.beta(-0.01), DomainError);
  CHECK_THROWS_AS(s.beta(1.01), DomainError);
  CHECK_THROWS_AS(s.beta_prime(std::nan("")), DomainError);
  CHECK_THROWS_AS(s.alpha(0.5, 1.5), DomainError);
}

TEST_CASE("invalid schedule parameters are configuration errors") {
  CHECK_THROWS_AS(PrecisionSchedule::with_uniform_prior(0.0, 12.0, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(PrecisionSchedule::with_uniform_prior(12.0, 3.0, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(PrecisionSchedule::with_uniform_prior(3.0, 12.0, -1.0, 2), ConfigError);
  CHECK_THROWS_AS(PrecisionSchedule(3.0, 12.0, 1.0, {}), ConfigError);
  CHECK_THROWS_AS(PrecisionSchedule(3.0, 12.0, 1.0, {0.0, INFINITY}), ConfigError);
  CHECK_NOTHROW(PrecisionSchedule::with_uniform_prior(3.0, 12.0, 0.0, 2));
}

TEST_CASE("beta is monotone increasing") {
  const auto s = PrecisionSchedule::with_uniform_prior(1e-3, 5e3, 1.0, 2);
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double b = s.beta(i / 1000.0);
    CHECK(b > prev);
    prev = b;
  }
}

TEST_CASE("prior mean from marginals takes floored logs") {
  const std::vector<double> p{0.5, 0.25, 0.0};
  const auto mu0 = mu0_from_marginals(p);
  CHECK(mu0[0] == doctest::Approx(std::log(0.5)));
  CHECK(mu0[1] == doctest::Approx(std::log(0.25)));
  CHECK(mu0[2] == doctest::Approx(std::log(1e-6)));
  CHECK(mu0_from_marginals(p, 1e-3)[2] == doctest::Approx(std::log(1e-3)));
}

TEST_CASE("marginal variance is beta0 + beta") {
  const auto s = PrecisionSchedule::with_uniform_prior(3.0, 12.0, 2.5, 2);
  CHECK(s.marginal_variance(0.0) == 2.5);
  CHECK(s.marginal_variance(1.0) == doctest::Approx(11.5));
}
