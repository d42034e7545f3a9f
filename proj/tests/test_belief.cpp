#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "graphbsi/belief.hpp"
#include "graphbsi/error.hpp"
#include "support.hpp"

using namespace graphbsi;
using testing::random_matrix;

namespace {

// Posterior pmf of x given prior pmf softmax(z) and y ~ N(e_x, alpha^-1 I),
// evaluated class by class in the log domain.
std::vector<double> brute_force_posterior(std::span<const double> z, std::span<const double> y,
                                          double alpha) {
  const std::size_t c = z.size();
  double zmax = z[0];
  for (double v : z) zmax = std::max(zmax, v);
  double zsum = 0.0;
  for (double v : z) zsum += std::exp(v - zmax);
  std::vector<double> logp(c);
  for (std::size_t k = 0; k < c; ++k) {
    double dist = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = y[j] - (j == k ? 1.0 : 0.0);
      dist += d * d;
    }
    logp[k] = (z[k] - zmax - std::log(zsum)) - 0.5 * alpha * dist;
  }
  double m = logp[0];
  for (double v : logp) m = std::max(m, v);
  double s = 0.0;
  for (double v : logp) s += std::exp(v - m);
  for (double& v : logp) v = std::exp(v - m) / s;
  return logp;
}

struct Moments {
  std::vector<double> mean, var;
};

Moments column_moments(const Matrix& m) {
  Moments out{std::vector<double>(m.cols(), 0.0), std::vector<double>(m.cols(), 0.0)};
  const auto n = static_cast<double>(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t k = 0; k < m.cols(); ++k) out.mean[k] += m(r, k) / n;
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t k = 0; k < m.cols(); ++k) {
      out.var[k] += (m(r, k) - out.mean[k]) * (m(r, k) - out.mean[k]) / (n - 1);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("bayes update matches the brute-force posterior") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> cats(2, 6);
  std::uniform_real_distribution<double> log_alpha(std::log(1e-2), std::log(50.0));
  for (int trial = 0; trial < 500; ++trial) {
    const auto c = static_cast<std::size_t>(cats(rng));
    const BeliefState z{random_matrix(rng, 1, c, 2.0), 0.3};
    const double alpha = std::exp(log_alpha(rng));
    const Measurement m{random_matrix(rng, 1, c, 1.0), alpha};
    const Matrix post = posterior_pmf(bayes_update(z, m));
    const auto oracle = brute_force_posterior(z.logits.row(0), m.y.row(0), alpha);
    for (std::size_t k = 0; k < c; ++k) {
      CHECK(testing::rel_err(post(0, k), oracle[k]) < 1e-10);
    }
  }
}

TEST_CASE("bayes update adds alpha * y and keeps t") {
  const BeliefState z{Matrix(1, 2, 1.0), 0.4};
  Matrix y(1, 2);
  y(0, 0) = 0.5;
  y(0, 1) = -2.0;
  const BeliefState out = bayes_update(z, Measurement{y, 2.0});
  CHECK(out.logits(0, 0) == 2.0);
  CHECK(out.logits(0, 1) == -3.0);
  CHECK(out.t == 0.4);
  CHECK_THROWS_AS(bayes_update(z, Measurement{Matrix(2, 2), 1.0}), DomainError);
}

TEST_CASE("sequential updates with the true sample reproduce the encoding marginal") {
  const auto s = PrecisionSchedule(3.0, 12.0, 1.0, {0.2, -0.1, 0.0});
  const std::size_t chains = 20000;
  const NoiseSource noise(5);
  Matrix x(chains, 3);
  for (std::size_t r = 0; r < chains; ++r) x(r, r % 3) = 1.0;
  BeliefState z = sample_prior(s, chains, RowStreams{&noise, StreamTag::kPrior, 0, 0, {}});
  const int k = 64;
  for (int i = 0; i < k; ++i) {
    const double alpha = s.alpha(double(i) / k, double(i + 1) / k);
    z = bayes_update(z, sample_measurement(x, alpha, RowStreams{&noise, StreamTag::kStep, std::uint64_t(i), 0, {}}));
  }
  // Rows with the same class share a distribution; check class 0 rows.
  Matrix rows0(chains / 3, 3);
  for (std::size_t r = 0; r < rows0.rows(); ++r) {
    for (std::size_t j = 0; j < 3; ++j) rows0(r, j) = z.logits(3 * r, j);
  }
  const auto mom = column_moments(rows0);
  const double b = s.beta(1.0), var = s.beta0() + b;
  const double se = std::sqrt(var / static_cast<double>(rows0.rows()));
  for (std::size_t j = 0; j < 3; ++j) {
    const double expected = s.mu0()[j] + (j == 0 ? b : 0.0);
    CHECK(std::abs(mom.mean[j] - expected) < 4 * se);
    CHECK(std::abs(mom.var[j] / var - 1.0) < 0.05);
  }
}

TEST_CASE("encode_marginal has mean mu0 + beta x and variance beta0 + beta") {
  const auto s = PrecisionSchedule(1.0, 20.0, 0.5, {0.0, 1.0});
  const std::size_t n = 40000;
  const double t = 0.6;
  Matrix x(n, 2);
  for (std::size_t r = 0; r < n; ++r) x(r, 1) = 1.0;
  const NoiseSource noise(9);
  const BeliefState z = encode_marginal(s, x, t, RowStreams{&noise, StreamTag::kStep, 0, 0, {}});
  CHECK(z.t == t);
  const auto mom = column_moments(z.logits);
  const double b = s.beta(t), var = 0.5 + b;
  const double se = std::sqrt(var / n);
  CHECK(std::abs(mom.mean[0] - 0.0) < 4 * se);
  CHECK(std::abs(mom.mean[1] - (1.0 + b)) < 4 * se);
  CHECK(std::abs(mom.var[0] / var - 1.0) < 0.05);
  CHECK(std::abs(mom.var[1] / var - 1.0) < 0.05);
}

TEST_CASE("inactive rows are left at the prior mean and draw no noise") {
  const auto s = PrecisionSchedule(1.0, 20.0, 0.5, {0.3, -0.3});
  const NoiseSource noise(2);
  Matrix x(3, 2);
  for (std::size_t r = 0; r < 3; ++r) x(r, 0) = 1.0;
  const std::vector<std::uint8_t> active{1, 0, 1};
  const RowStreams streams{&noise, StreamTag::kStep, 0, 0, {}};
  const BeliefState masked = encode_marginal(s, x, 0.5, streams, active);
  const BeliefState full = encode_marginal(s, x, 0.5, streams);
  CHECK(masked.logits(1, 0) == 0.3);
  CHECK(masked.logits(1, 1) == -0.3);
  // Other rows are unaffected by the masking.
  CHECK(masked.logits(0, 0) == full.logits(0, 0));
  CHECK(masked.logits(2, 1) == full.logits(2, 1));
  const Measurement m = sample_measurement(x, 2.0, streams, active);
  CHECK(m.y(1, 0) == 1.0);
  CHECK(m.y(1, 1) == 0.0);
}

TEST_CASE("prior draws have mean mu0 and variance beta0") {
  const auto s = PrecisionSchedule(1.0, 20.0, 2.0, {1.0, -1.0});
  const NoiseSource noise(3);
  const BeliefState z = sample_prior(s, 30000, RowStreams{&noise, StreamTag::kPrior, 0, 0, {}});
  CHECK(z.t == 0.0);
  const auto mom = column_moments(z.logits);
  const double se = std::sqrt(2.0 / 30000);
  CHECK(std::abs(mom.mean[0] - 1.0) < 4 * se);
  CHECK(std::abs(mom.mean[1] + 1.0) < 4 * se);
  CHECK(std::abs(mom.var[0] / 2.0 - 1.0) < 0.05);
}

TEST_CASE("score of the encoding mean vanishes") {
  const auto s = PrecisionSchedule(3.0, 12.0, 1.0, {0.1, 0.2, 0.3});
  Matrix x(1, 3);
  x(0, 2) = 1.0;
  const double t = 0.4, b = s.beta(t);
  BeliefState z{Matrix(1, 3), t};
  for (std::size_t k = 0; k < 3; ++k) z.logits(0, k) = s.mu0()[k] + b * x(0, k);
  const Matrix sc = score(s, z, x);
  for (double v : sc.values()) CHECK(std::abs(v) < 1e-15);
  // Hand value: z = 0, x_hat = e_0.
  const BeliefState z0{Matrix(1, 3), t};
  Matrix e0(1, 3);
  e0(0, 0) = 1.0;
  const Matrix sc0 = score(s, z0, e0);
  CHECK(sc0(0, 0) == doctest::Approx((0.1 + b) / (b + 1.0)));
  CHECK(sc0(0, 1) == doctest::Approx(0.2 / (b + 1.0)));
}

TEST_CASE("score is singular at t = 0 without prior precision") {
  const auto s = PrecisionSchedule::with_uniform_prior(3.0, 12.0, 0.0, 2);
  const BeliefState z{Matrix(1, 2), 0.0};
  CHECK_THROWS_AS(score(s, z, Matrix(1, 2)), DomainError);
  const BeliefState later{Matrix(1, 2), 0.1};
  CHECK_NOTHROW(score(s, later, Matrix(1, 2)));
}

TEST_CASE("softmax is stable for extreme logits and rows sum to one") {
  Matrix z(3, 3);
  z(0, 0) = 1000.0;
  z(0, 1) = 999.0;
  z(1, 0) = -1000.0;
  z(2, 2) = 1e-300;
  const Matrix p = softmax_rows(z);
  for (std::size_t r = 0; r < 3; ++r) {
    double sum = 0.0;
    for (double v : p.row(r)) {
      CHECK(std::isfinite(v));
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(p(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0) + std::exp(-1000.0))));
}

TEST_CASE("entropy lies in [0, log c]") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix p = softmax_rows(random_matrix(rng, 5, 4, 3.0));
    for (double h : row_entropy(p)) {
      CHECK(h >= 0.0);
      CHECK(h <= std::log(4.0) + 1e-12);
    }
  }
  Matrix uniform(1, 4, 0.25);
  CHECK(row_entropy(uniform)[0] == doctest::Approx(std::log(4.0)));
  Matrix hot(1, 4);
  hot(0, 2) = 1.0;
  CHECK(row_entropy(hot)[0] == 0.0);
}

TEST_CASE("quantize takes the argmax with lowest-index ties") {
  Matrix s(3, 3);
  s(0, 1) = 2.0;
  s(1, 0) = 1.0;
  s(1, 2) = 1.0;
  const CategoricalSample q = quantize(s);
  CHECK(q[0] == 1);
  CHECK(q[1] == 0);
  CHECK(q[2] == 0);
  CHECK(q.categories() == 3);
}

TEST_CASE("categorical samples hold exactly one class per row") {
  const CategoricalSample x({0, 2, 1}, 3);
  const Matrix h = x.onehot();
  for (std::size_t r = 0; r < 3; ++r) {
    double sum = 0.0;
    for (double v : h.row(r)) sum += v;
    CHECK(sum == 1.0);
    CHECK(h(r, static_cast<std::size_t>(x[r])) == 1.0);
  }
  CHECK(CategoricalSample::from_onehot(h) == x);
  Matrix bad = h;
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(CategoricalSample::from_onehot(bad), DomainError);
  CHECK_THROWS_AS(CategoricalSample({3}, 3), DomainError);
}

TEST_CASE("sample_categorical draws from softmax(logits)") {
  const std::size_t n = 60000;
  Matrix z(n, 3);
  for (std::size_t r = 0; r < n; ++r) {
    z(r, 0) = std::log(0.2);
    z(r, 1) = std::log(0.5);
    z(r, 2) = std::log(0.3);
  }
  const NoiseSource noise(8);
  const CategoricalSample x = sample_categorical(z, RowStreams{&noise, StreamTag::kFinal, 0, 0, {}});
  std::vector<double> freq(3, 0.0);
  for (int c : x.classes()) freq[static_cast<std::size_t>(c)] += 1.0 / n;
  for (auto [k, p] : {std::pair{0, 0.2}, std::pair{1, 0.5}, std::pair{2, 0.3}}) {
    CHECK(std::abs(freq[static_cast<std::size_t>(k)] - p) < 4 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("row streams follow their keys, not their positions") {
  const auto s = PrecisionSchedule::with_uniform_prior(1.0, 10.0, 1.0, 2);
  const NoiseSource noise(1);
  const std::vector<std::uint64_t> keys{7, 3, 5};
  const std::vector<std::uint64_t> swapped{5, 3, 7};
  const BeliefState a = sample_prior(s, 3, RowStreams{&noise, StreamTag::kPrior, 0, 0, keys});
  const BeliefState b = sample_prior(s, 3, RowStreams{&noise, StreamTag::kPrior, 0, 0, swapped});
  CHECK(a.logits(0, 0) == b.logits(2, 0));
  CHECK(a.logits(2, 1) == b.logits(0, 1));
  CHECK(a.logits(1, 0) == b.logits(1, 0));
}
