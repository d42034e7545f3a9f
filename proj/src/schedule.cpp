#include "graphbsi/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "graphbsi/error.hpp"

namespace graphbsi {
namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("schedule time must lie in [0, 1], got " + std::to_string(t));
  }
}

}  // namespace

PrecisionSchedule::PrecisionSchedule(double beta_start, double beta_end, double beta0,
                                     std::vector<double> mu0)
    : beta_start_(beta_start), beta_end_(beta_end), beta0_(beta0), mu0_(std::move(mu0)) {
  if (!std::isfinite(beta_start) || !std::isfinite(beta_end) || !(beta_start > 0.0) ||
      !(beta_end > beta_start)) {
    throw ConfigError("precision schedule requires beta_end > beta_start > 0");
  }
  if (!std::isfinite(beta0) || beta0 < 0.0) {
    throw ConfigError("prior precision beta0 must be finite and nonnegative");
  }
  if (mu0_.empty()) throw ConfigError("prior mean needs at least one category");
  for (double m : mu0_) {
    if (!std::isfinite(m)) throw ConfigError("prior mean must be finite");
  }
  rate_ = std::log(beta_end_ / beta_start_);
}

PrecisionSchedule PrecisionSchedule::with_uniform_prior(double beta_start, double beta_end,
                                                        double beta0, std::size_t categories) {
  return PrecisionSchedule(beta_start, beta_end, beta0, std::vector<double>(categories, 0.0));
}

double PrecisionSchedule::beta(double t) const {
  check_time(t);
  // expm1 keeps beta(t) accurate near t = 0.
  return beta_start_ * std::expm1(t * rate_);
}

double PrecisionSchedule::beta_prime(double t) const {
  check_time(t);
  return beta_start_ * rate_ * std::exp(t * rate_);
}

double PrecisionSchedule::alpha(double t_lo, double t_hi) const {
  if (!(t_lo < t_hi)) throw DomainError("alpha requires t_lo < t_hi");
  return beta(t_hi) - beta(t_lo);
}

std::vector<double> mu0_from_marginals(std::span<const double> probabilities, double floor) {
  std::vector<double> mu0;
  mu0.reserve(probabilities.size());
  for (double p : probabilities) mu0.push_back(std::log(std::max(p, floor)));
  return mu0;
}

}  // namespace graphbsi
