#include "graphbsi/trajectories.hpp"

#include <cmath>
#include <ostream>

#include "graphbsi/error.hpp"

namespace graphbsi {

ChannelBelief trajectory_prior(const PrecisionSchedule& schedule, std::size_t runs,
                               const NoiseSource& noise, bool shared_prior) {
  ChannelBelief ch = prior_channel(schedule, runs, noise);
  if (shared_prior) {
    for (std::size_t r = 1; r < runs; ++r) {
      std::copy(ch.state.logits.row(0).begin(), ch.state.logits.row(0).end(),
                ch.state.logits.row(r).begin());
    }
  }
  return ch;
}

namespace {

ChannelBelief run_frozen(const PrecisionSchedule& schedule, std::size_t target,
                         const SamplerConfig& config, std::uint64_t seed, std::size_t runs,
                         bool shared_prior, TrajectoryRecord* record) {
  if (target >= schedule.categories()) throw DomainError("trajectories: target class out of range");
  if (runs < 1) throw DomainError("trajectories: need at least one run");
  const NoiseSource noise(seed);
  ChannelBelief ch = trajectory_prior(schedule, runs, noise, shared_prior);
  const FrozenReconstructor f({static_cast<int>(target)});
  run_sampler(f, std::span<const PrecisionSchedule>(&schedule, 1), std::span<ChannelBelief>(&ch, 1),
              config, noise, record);
  return ch;
}

}  // namespace

TrajectoryStats frozen_trajectory_stats(const PrecisionSchedule& schedule, std::size_t target,
                                        const SamplerConfig& config, std::uint64_t seed,
                                        std::size_t runs, bool shared_prior) {
  const ChannelBelief ch = run_frozen(schedule, target, config, seed, runs, shared_prior, nullptr);
  const Matrix& z = ch.state.logits;
  const std::size_t c = z.cols();
  const double b1 = schedule.beta(1.0);
  const double var_expected = schedule.beta0() + b1;
  const double sd = std::sqrt(var_expected);

  TrajectoryStats s;
  s.gamma = config.gamma;
  s.expected_variance = var_expected;
  s.expected_target_mean = schedule.mu0()[target] + b1;
  std::vector<double> mean(c, 0.0), m2(c, 0.0);
  std::size_t blown = 0;
  const auto n = static_cast<double>(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    bool bad = false;
    for (std::size_t k = 0; k < c; ++k) {
      const double v = z(r, k);
      mean[k] += v;
      const double expected = schedule.mu0()[k] + (k == target ? b1 : 0.0);
      bad = bad || !std::isfinite(v) || std::abs(v - expected) > 10.0 * sd;
    }
    blown += bad ? 1 : 0;
  }
  for (double& m : mean) m /= n;
  for (std::size_t r = 0; r < runs; ++r) {
    for (std::size_t k = 0; k < c; ++k) m2[k] += (z(r, k) - mean[k]) * (z(r, k) - mean[k]);
  }
  double var_sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) var_sum += runs > 1 ? m2[k] / (n - 1.0) : 0.0;
  s.variance = var_sum / static_cast<double>(c);
  s.target_mean = mean[target];
  s.target_mean_se = runs > 1 ? std::sqrt(m2[target] / (n - 1.0) / n) : 0.0;
  s.blowup_fraction = static_cast<double>(blown) / n;
  return s;
}

void write_trajectory_header(std::ostream& out, const PrecisionSchedule& schedule,
                             std::size_t target, const SamplerConfig& config, std::uint64_t seed,
                             bool shared_prior) {
  out.precision(17);
  out << "# scheme=" << scheme_name(config.scheme) << '\n'
      << "# steps=" << config.steps << '\n'
      << "# rho=" << config.rho << '\n'
      << "# beta_start=" << schedule.beta_start() << '\n'
      << "# beta_end=" << schedule.beta_end() << '\n'
      << "# beta0=" << schedule.beta0() << '\n'
      << "# mu0=";
  for (std::size_t k = 0; k < schedule.categories(); ++k) out << (k ? "," : "") << schedule.mu0()[k];
  out << '\n'
      << "# categories=" << schedule.categories() << '\n'
      << "# target=" << target << '\n'
      << "# seed=" << seed << '\n'
      << "# shared_prior=" << (shared_prior ? 1 : 0) << '\n'
      << "gamma,run,step,t,category,logit\n";
}

void write_trajectory_dump(std::ostream& out, const PrecisionSchedule& schedule, std::size_t target,
                           const SamplerConfig& config, std::uint64_t seed, std::size_t runs,
                           bool shared_prior) {
  TrajectoryRecord record;
  run_frozen(schedule, target, config, seed, runs, shared_prior, &record);
  out.precision(17);
  for (std::size_t r = 0; r < runs; ++r) {
    for (std::size_t i = 0; i < record.times.size(); ++i) {
      const auto row = record.states[i][0].logits.row(r);
      for (std::size_t k = 0; k < row.size(); ++k) {
        out << config.gamma << ',' << r << ',' << i << ',' << record.times[i] << ',' << k << ','
            << row[k] << '\n';
      }
    }
  }
}

void write_marginal_sidecar(std::ostream& out, const PrecisionSchedule& schedule,
                            std::size_t target, int steps, double rho) {
  if (target >= schedule.categories()) throw DomainError("trajectories: target class out of range");
  out.precision(17);
  out << "t,beta";
  for (std::size_t k = 0; k < schedule.categories(); ++k) out << ",mean_" << k;
  out << ",variance\n";
  for (double t : time_grid(steps, rho)) {
    const double b = schedule.beta(t);
    out << t << ',' << b;
    for (std::size_t k = 0; k < schedule.categories(); ++k) {
      out << ',' << schedule.mu0()[k] + (k == target ? b : 0.0);
    }
    out << ',' << schedule.marginal_variance(t) << '\n';
  }
}

}  // namespace graphbsi
