#pragma once

#include <span>
#include <vector>

namespace graphbsi {

// Exponential precision schedule for one channel:
//   beta(t) = beta_start * (exp(t * log(beta_end / beta_start)) - 1)
// together with the Gaussian prior N(mu0, beta0 I) over initial logits.
class PrecisionSchedule {
 public:
  PrecisionSchedule(double beta_start, double beta_end, double beta0, std::vector<double> mu0);

  // Uniform prior mean (all-zero logits) over `categories` classes.
  static PrecisionSchedule with_uniform_prior(double beta_start, double beta_end, double beta0,
                                              std::size_t categories);

  double beta_start() const noexcept { return beta_start_; }
  double beta_end() const noexcept { return beta_end_; }
  double beta0() const noexcept { return beta0_; }
  const std::vector<double>& mu0() const noexcept { return mu0_; }
  std::size_t categories() const noexcept { return mu0_.size(); }

  // log(beta_end / beta_start), the exponential rate.
  double rate() const noexcept { return rate_; }

  double beta(double t) const;
  double beta_prime(double t) const;
  // Precision added over [t_lo, t_hi]: beta(t_hi) - beta(t_lo).
  double alpha(double t_lo, double t_hi) const;
  // Variance of the encoding marginal at t: beta0 + beta(t).
  double marginal_variance(double t) const { return beta0_ + beta(t); }

 private:
  double beta_start_;
  double beta_end_;
  double beta0_;
  double rate_;
  std::vector<double> mu0_;
};

// Prior mean logits from a class distribution: log(max(p, floor)).
std::vector<double> mu0_from_marginals(std::span<const double> probabilities,
                                       double floor = 1e-6);

}  // namespace graphbsi
