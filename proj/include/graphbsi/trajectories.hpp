#pragma once

#include <cstdint>
#include <iosfwd>

#include "graphbsi/samplers.hpp"
#include "graphbsi/schedule.hpp"

namespace graphbsi {

// Terminal (t = 1) statistics of frozen-reconstructor trajectories, each
// trajectory being one row of a single channel.
struct TrajectoryStats {
  double gamma = 0.0;
  double target_mean = 0.0;
  double target_mean_se = 0.0;
  double expected_target_mean = 0.0;
  double variance = 0.0;  // mean over coordinates of the per-coordinate variance
  double expected_variance = 0.0;
  double blowup_fraction = 0.0;  // any coordinate beyond 10 analytic sd, or non-finite
};

// `runs` prior rows; with shared_prior every row starts from the prior draw
// of row 0. Row r always uses stream key r, so the first m rows of a larger
// run reproduce a run with m rows exactly.
ChannelBelief trajectory_prior(const PrecisionSchedule& schedule, std::size_t runs,
                               const NoiseSource& noise, bool shared_prior);

TrajectoryStats frozen_trajectory_stats(const PrecisionSchedule& schedule, std::size_t target,
                                        const SamplerConfig& config, std::uint64_t seed,
                                        std::size_t runs, bool shared_prior);

// `# key=value` lines describing the run, then the column line
// `gamma,run,step,t,category,logit`.
void write_trajectory_header(std::ostream& out, const PrecisionSchedule& schedule,
                             std::size_t target, const SamplerConfig& config, std::uint64_t seed,
                             bool shared_prior);
// Appends one `gamma,run,step,t,category,logit` row per grid time and
// category of the first `runs` trajectories.
void write_trajectory_dump(std::ostream& out, const PrecisionSchedule& schedule, std::size_t target,
                           const SamplerConfig& config, std::uint64_t seed, std::size_t runs,
                           bool shared_prior);

// Column line, then `t,beta,mean_0..mean_{c-1},variance` of q(z | e_target, t)
// at each grid time.
void write_marginal_sidecar(std::ostream& out, const PrecisionSchedule& schedule,
                            std::size_t target, int steps, double rho);

}  // namespace graphbsi
