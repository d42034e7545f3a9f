#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "graphbsi/belief.hpp"
#include "graphbsi/matrix.hpp"
#include "graphbsi/rng.hpp"
#include "graphbsi/schedule.hpp"

namespace graphbsi {

enum class Scheme {
  kDiscrete,            // sequential Bayesian updates
  kEulerMaruyama,       // generalized SDE, interval-start evaluation
  kOrnsteinUhlenbeck,   // exact OU transition, midpoint evaluation; gamma > 1
  kInfNoise,            // gamma -> infinity, restart from mu0
  kInfNoiseFixedPrior,  // gamma -> infinity, restart from the retained z0
};

std::string_view scheme_name(Scheme s);
// Accepts discrete | em | ou | inf-noise | inf-noise-fixed-prior.
Scheme parse_scheme(std::string_view name);

struct SamplerConfig {
  Scheme scheme = Scheme::kOrnsteinUhlenbeck;
  int steps = 100;
  double gamma = 5.0;
  double rho = 1.0;

  // Throws ConfigError on steps < 1, rho <= 0, gamma < 0, or OU with gamma <= 1.
  void validate() const;
};

// t_i = (i / k)^rho for i = 0..k.
std::vector<double> time_grid(int k, double rho);

// Schedule quantities frozen for one step.
struct ScheduleSnapshot {
  double beta = 0.0;
  double beta_prime = 0.0;
  double beta0 = 0.0;
  std::span<const double> mu0;
};

ScheduleSnapshot snapshot(const PrecisionSchedule& schedule, double t);

// Gaussian one-step transition: z' ~ N(mean, variance I).
struct Transition {
  Matrix mean;
  double variance = 0.0;
};

// Euler-Maruyama step of dz = b'(x + (g-1)/2 s) dt + sqrt(g b') dW with the
// reconstruction-based score s.
Transition em_transition(const Matrix& z, const Matrix& x_hat, const ScheduleSnapshot& s,
                         double gamma, double dt);
// Exact transition of the OU process obtained by freezing x_hat and the
// schedule values. Requires gamma > 1.
Transition ou_transition(const Matrix& z, const Matrix& x_hat, const ScheduleSnapshot& s,
                         double gamma, double dt);

// One EM step from z.t to z.t + dt, schedule evaluated at z.t.
BeliefState em_step(const BeliefState& z, const Matrix& x_hat, const PrecisionSchedule& schedule,
                    double gamma, double dt, const RowStreams& streams, ActiveMask active = {});
// One OU step from z.t to z.t + dt, schedule evaluated at the interval midpoint.
BeliefState ou_step(const BeliefState& z, const Matrix& x_hat, const PrecisionSchedule& schedule,
                    double gamma, double dt, const RowStreams& streams, ActiveMask active = {});

// One channel of a (possibly multi-channel) belief, e.g. the nodes or the
// edges of a graph. Inactive rows are inert.
struct ChannelBelief {
  BeliefState state;
  std::vector<std::uint8_t> active;  // empty = all active
  std::vector<std::uint64_t> keys;   // empty = row index
};

// Prior-initialized channel with identity keys.
ChannelBelief prior_channel(const PrecisionSchedule& schedule, std::size_t n_components,
                            const NoiseSource& noise, std::uint64_t channel = 0);

// f_theta: maps the current beliefs at time t to one simplex-valued
// prediction per channel (out[i] has the shape of channels[i].state.logits).
class Reconstructor {
 public:
  virtual ~Reconstructor() = default;
  virtual void predict(std::span<const ChannelBelief> channels, double t,
                       std::span<Matrix> out) const = 0;
};

// Predicts the same class for every row of each channel, independent of z.
class FrozenReconstructor final : public Reconstructor {
 public:
  explicit FrozenReconstructor(std::vector<int> class_per_channel)
      : classes_(std::move(class_per_channel)) {}
  void predict(std::span<const ChannelBelief> channels, double t,
               std::span<Matrix> out) const override;

 private:
  std::vector<int> classes_;
};

// Snapshots of a sampling run at the grid times. predictions[i] is the
// reconstruction used on step i; the last entry is the final reconstruction
// (or the posterior pmf for the discrete scheme).
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<std::vector<BeliefState>> states;    // [time][channel]
  std::vector<std::vector<Matrix>> predictions;    // [time][channel]
};

// Runs the configured scheme on prior-initialized channels in place and
// returns one sample per channel.
std::vector<CategoricalSample> run_sampler(const Reconstructor& f,
                                           std::span<const PrecisionSchedule> schedules,
                                           std::span<ChannelBelief> channels,
                                           const SamplerConfig& config, const NoiseSource& noise,
                                           TrajectoryRecord* record = nullptr);

// Single-channel conveniences; each draws its own prior.
CategoricalSample sample_discrete(const Reconstructor& f, const PrecisionSchedule& schedule,
                                  const SamplerConfig& config, std::size_t n_components,
                                  const NoiseSource& noise);
CategoricalSample sample_sde(const Reconstructor& f, const PrecisionSchedule& schedule,
                             const SamplerConfig& config, std::size_t n_components,
                             const NoiseSource& noise, TrajectoryRecord* record = nullptr);
CategoricalSample sample_inf_noise(const Reconstructor& f, const PrecisionSchedule& schedule,
                                   const SamplerConfig& config, std::size_t n_components,
                                   const NoiseSource& noise, bool fixed_prior);

enum class StabilityMethod {
  kAnalytic,         // monotone ratio, minimum at an endpoint; grid cross-check
  kDenseGrid,        // 10^4-point grid with the analytic derivative
  kSampledGradient,  // 100-point grid, beta' by finite differences of beta
};

// min over t of 2 (beta(t) + beta0) / beta'(t).
double min_stability_ratio(const PrecisionSchedule& schedule,
                           StabilityMethod method = StabilityMethod::kSampledGradient);

// Largest gamma keeping the EM coefficient on z nonnegative:
//   1 + min_ratio / dt.
double max_stable_gamma(const PrecisionSchedule& schedule, double dt,
                        StabilityMethod method = StabilityMethod::kSampledGradient);

}  // namespace graphbsi
