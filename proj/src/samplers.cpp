#include "graphbsi/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "graphbsi/error.hpp"

namespace graphbsi {

std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kDiscrete: return "discrete";
    case Scheme::kEulerMaruyama: return "em";
    case Scheme::kOrnsteinUhlenbeck: return "ou";
    case Scheme::kInfNoise: return "inf-noise";
    case Scheme::kInfNoiseFixedPrior: return "inf-noise-fixed-prior";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::kDiscrete, Scheme::kEulerMaruyama, Scheme::kOrnsteinUhlenbeck,
                   Scheme::kInfNoise, Scheme::kInfNoiseFixedPrior}) {
    if (scheme_name(s) == name) return s;
  }
  throw ConfigError("unknown sampler scheme '" + std::string(name) + "'");
}

void SamplerConfig::validate() const {
  if (steps < 1) throw ConfigError("sampler needs at least one step");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be positive");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be nonnegative");
  if (scheme == Scheme::kOrnsteinUhlenbeck && !(gamma > 1.0)) {
    throw ConfigError("the OU scheme requires gamma > 1 (kappa > 0)");
  }
}

std::vector<double> time_grid(int k, double rho) {
  if (k < 1) throw ConfigError("time grid needs k >= 1");
  if (!(rho > 0.0)) throw ConfigError("time grid needs rho > 0");
  std::vector<double> grid(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i) {
    grid[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i) / k, rho);
  }
  grid.front() = 0.0;
  grid.back() = 1.0;
  return grid;
}

ScheduleSnapshot snapshot(const PrecisionSchedule& schedule, double t) {
  return {schedule.beta(t), schedule.beta_prime(t), schedule.beta0(), schedule.mu0()};
}

Transition em_transition(const Matrix& z, const Matrix& x_hat, const ScheduleSnapshot& s,
                         double gamma, double dt) {
  if (!z.same_shape(x_hat)) throw DomainError("em step: shape mismatch");
  if (!(dt > 0.0)) throw DomainError("em step: dt must be positive");
  const double score_weight = 0.5 * (gamma - 1.0);
  const double denom = s.beta + s.beta0;
  if (score_weight != 0.0 && !(denom > 0.0)) {
    throw DomainError("em step: score is singular (beta + beta0 = 0)");
  }
  Transition tr{Matrix(z.rows(), z.cols()), gamma * s.beta_prime * dt};
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (std::size_t k = 0; k < z.cols(); ++k) {
      const double x = x_hat(r, k);
      double drift = x;
      if (score_weight != 0.0) drift += score_weight * (s.mu0[k] + s.beta * x - z(r, k)) / denom;
      tr.mean(r, k) = z(r, k) + s.beta_prime * drift * dt;
    }
  }
  return tr;
}

Transition ou_transition(const Matrix& z, const Matrix& x_hat, const ScheduleSnapshot& s,
                         double gamma, double dt) {
  if (!z.same_shape(x_hat)) throw DomainError("ou step: shape mismatch");
  if (!(dt > 0.0)) throw DomainError("ou step: dt must be positive");
  if (!(gamma > 1.0)) throw ConfigError("ou step requires gamma > 1");
  const double denom = s.beta + s.beta0;
  if (!(denom > 0.0)) throw DomainError("ou step: beta + beta0 must be positive");
  const double kappa = (gamma - 1.0) * s.beta_prime / (2.0 * denom);
  // 1 - exp(-kappa dt) and 1 - exp(-2 kappa dt) via expm1 for small kappa dt.
  const double decay = -std::expm1(-kappa * dt);
  const double decay2 = -std::expm1(-2.0 * kappa * dt);
  // m + (z - m) e^{-kappa dt} rewritten as z + (mu0 + beta x - z) decay
  // + beta' x decay / kappa, which stays finite as kappa -> 0.
  const double drive = s.beta_prime * decay / kappa;
  Transition tr{Matrix(z.rows(), z.cols()), gamma * s.beta_prime / (2.0 * kappa) * decay2};
  for (std::size_t r = 0; r < z.rows(); ++r) {
    for (std::size_t k = 0; k < z.cols(); ++k) {
      const double x = x_hat(r, k);
      tr.mean(r, k) = z(r, k) + (s.mu0[k] + s.beta * x - z(r, k)) * decay + drive * x;
    }
  }
  return tr;
}

namespace {

BeliefState draw_transition(const BeliefState& z, const Transition& tr, double t_next,
                            const RowStreams& streams, ActiveMask active) {
  BeliefState out{z.logits, t_next};
  const double sd = std::sqrt(tr.variance);
  for (std::size_t r = 0; r < z.logits.rows(); ++r) {
    if (!is_active(active, r)) continue;
    auto row = out.logits.row(r);
    auto mean = tr.mean.row(r);
    if (sd == 0.0) {
      std::copy(mean.begin(), mean.end(), row.begin());
      continue;
    }
    auto rng = streams.at(r);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] = mean[k] + sd * rng.normal();
  }
  return out;
}

// Copies the active rows of `updated` into `dst`.
void commit(BeliefState& dst, const BeliefState& updated, ActiveMask active) {
  for (std::size_t r = 0; r < dst.logits.rows(); ++r) {
    if (!is_active(active, r)) continue;
    auto src = updated.logits.row(r);
    std::copy(src.begin(), src.end(), dst.logits.row(r).begin());
  }
}

}  // namespace

BeliefState em_step(const BeliefState& z, const Matrix& x_hat, const PrecisionSchedule& schedule,
                    double gamma, double dt, const RowStreams& streams, ActiveMask active) {
  const Transition tr = em_transition(z.logits, x_hat, snapshot(schedule, z.t), gamma, dt);
  return draw_transition(z, tr, std::min(1.0, z.t + dt), streams, active);
}

BeliefState ou_step(const BeliefState& z, const Matrix& x_hat, const PrecisionSchedule& schedule,
                    double gamma, double dt, const RowStreams& streams, ActiveMask active) {
  const double mid = std::min(1.0, z.t + 0.5 * dt);
  const Transition tr = ou_transition(z.logits, x_hat, snapshot(schedule, mid), gamma, dt);
  return draw_transition(z, tr, std::min(1.0, z.t + dt), streams, active);
}

ChannelBelief prior_channel(const PrecisionSchedule& schedule, std::size_t n_components,
                            const NoiseSource& noise, std::uint64_t channel) {
  RowStreams streams{&noise, StreamTag::kPrior, 0, channel, {}};
  return ChannelBelief{sample_prior(schedule, n_components, streams), {}, {}};
}

void FrozenReconstructor::predict(std::span<const ChannelBelief> channels, double /*t*/,
                                  std::span<Matrix> out) const {
  for (std::size_t ch = 0; ch < channels.size(); ++ch) {
    const auto& logits = channels[ch].state.logits;
    out[ch] = Matrix(logits.rows(), logits.cols());
    const auto cls = static_cast<std::size_t>(classes_.at(ch));
    for (std::size_t r = 0; r < logits.rows(); ++r) out[ch](r, cls) = 1.0;
  }
}

std::vector<CategoricalSample> run_sampler(const Reconstructor& f,
                                           std::span<const PrecisionSchedule> schedules,
                                           std::span<ChannelBelief> channels,
                                           const SamplerConfig& config, const NoiseSource& noise,
                                           TrajectoryRecord* record) {
  config.validate();
  if (schedules.size() != channels.size()) {
    throw DomainError("run_sampler: one schedule per channel required");
  }
  const std::size_t n_ch = channels.size();
  const std::vector<double> grid = time_grid(config.steps, config.rho);

  std::vector<Matrix> z0;
  if (config.scheme == Scheme::kInfNoiseFixedPrior) {
    for (const auto& ch : channels) z0.push_back(ch.state.logits);
  }
  for (auto& ch : channels) ch.state.t = 0.0;

  auto snapshot_states = [&] {
    std::vector<BeliefState> s;
    s.reserve(n_ch);
    for (const auto& ch : channels) s.push_back(ch.state);
    return s;
  };
  if (record) {
    *record = TrajectoryRecord{};
    record->times.push_back(grid.front());
    record->states.push_back(snapshot_states());
  }

  std::vector<Matrix> preds(n_ch);
  for (int i = 0; i < config.steps; ++i) {
    const double t = grid[static_cast<std::size_t>(i)];
    const double t_next = grid[static_cast<std::size_t>(i) + 1];
    const double dt = t_next - t;
    const double mid = 0.5 * (t + t_next);
    const bool midpoint_eval = config.scheme == Scheme::kOrnsteinUhlenbeck;
    f.predict(channels, midpoint_eval ? mid : t, preds);

    for (std::size_t c = 0; c < n_ch; ++c) {
      auto& ch = channels[c];
      const auto& sched = schedules[c];
      RowStreams streams{&noise, StreamTag::kStep, static_cast<std::uint64_t>(i), c, ch.keys};
      const ActiveMask active = ch.active;
      BeliefState next;
      switch (config.scheme) {
        case Scheme::kDiscrete: {
          const double alpha = sched.alpha(t, t_next);
          next = bayes_update(ch.state, sample_measurement(preds[c], alpha, streams, active));
          break;
        }
        case Scheme::kEulerMaruyama:
          next = em_step(ch.state, preds[c], sched, config.gamma, dt, streams, active);
          break;
        case Scheme::kOrnsteinUhlenbeck:
          next = ou_step(ch.state, preds[c], sched, config.gamma, dt, streams, active);
          break;
        case Scheme::kInfNoise:
        case Scheme::kInfNoiseFixedPrior: {
          const bool fixed = config.scheme == Scheme::kInfNoiseFixedPrior;
          const double alpha = fixed ? sched.beta(mid) : sched.beta0() + sched.beta(mid);
          const Measurement m = sample_measurement(preds[c], alpha, streams, active);
          next = BeliefState{Matrix(m.y.rows(), m.y.cols()), t_next};
          for (std::size_t r = 0; r < m.y.rows(); ++r) {
            for (std::size_t k = 0; k < m.y.cols(); ++k) {
              const double base = fixed ? z0[c](r, k) : sched.mu0()[k];
              next.logits(r, k) = base + alpha * m.y(r, k);
            }
          }
          break;
        }
      }
      commit(ch.state, next, active);
      ch.state.t = t_next;
    }
    if (record) {
      record->times.push_back(t_next);
      record->states.push_back(snapshot_states());
      record->predictions.push_back(preds);
    }
  }

  std::vector<CategoricalSample> samples;
  samples.reserve(n_ch);
  if (config.scheme == Scheme::kDiscrete) {
    std::vector<Matrix> pmfs;
    for (std::size_t c = 0; c < n_ch; ++c) {
      RowStreams streams{&noise, StreamTag::kFinal, 0, c, channels[c].keys};
      samples.push_back(sample_categorical(channels[c].state.logits, streams, channels[c].active));
      if (record) pmfs.push_back(posterior_pmf(channels[c].state));
    }
    if (record) record->predictions.push_back(std::move(pmfs));
  } else {
    f.predict(channels, 1.0, preds);
    for (std::size_t c = 0; c < n_ch; ++c) {
      std::vector<int> classes = quantize(preds[c]).classes();
      for (std::size_t r = 0; r < classes.size(); ++r) {
        if (!is_active(channels[c].active, r)) classes[r] = 0;
      }
      samples.emplace_back(std::move(classes), preds[c].cols());
    }
    if (record) record->predictions.push_back(preds);
  }
  return samples;
}

namespace {

CategoricalSample run_single(const Reconstructor& f, const PrecisionSchedule& schedule,
                             const SamplerConfig& config, std::size_t n_components,
                             const NoiseSource& noise, TrajectoryRecord* record) {
  ChannelBelief ch = prior_channel(schedule, n_components, noise);
  auto out = run_sampler(f, std::span<const PrecisionSchedule>(&schedule, 1),
                         std::span<ChannelBelief>(&ch, 1), config, noise, record);
  return std::move(out.front());
}

}  // namespace

CategoricalSample sample_discrete(const Reconstructor& f, const PrecisionSchedule& schedule,
                                  const SamplerConfig& config, std::size_t n_components,
                                  const NoiseSource& noise) {
  if (config.scheme != Scheme::kDiscrete) throw ConfigError("sample_discrete needs scheme=discrete");
  return run_single(f, schedule, config, n_components, noise, nullptr);
}

CategoricalSample sample_sde(const Reconstructor& f, const PrecisionSchedule& schedule,
                             const SamplerConfig& config, std::size_t n_components,
                             const NoiseSource& noise, TrajectoryRecord* record) {
  if (config.scheme != Scheme::kEulerMaruyama && config.scheme != Scheme::kOrnsteinUhlenbeck) {
    throw ConfigError("sample_sde needs scheme=em or scheme=ou");
  }
  return run_single(f, schedule, config, n_components, noise, record);
}

CategoricalSample sample_inf_noise(const Reconstructor& f, const PrecisionSchedule& schedule,
                                   const SamplerConfig& config, std::size_t n_components,
                                   const NoiseSource& noise, bool fixed_prior) {
  SamplerConfig cfg = config;
  cfg.scheme = fixed_prior ? Scheme::kInfNoiseFixedPrior : Scheme::kInfNoise;
  return run_single(f, schedule, cfg, n_components, noise, nullptr);
}

namespace {

double stability_ratio(const PrecisionSchedule& s, double t) {
  return 2.0 * (s.beta(t) + s.beta0()) / s.beta_prime(t);
}

double dense_grid_ratio(const PrecisionSchedule& s) {
  constexpr int kPoints = 10000;
  double best = stability_ratio(s, 0.0);
  for (int i = 1; i <= kPoints; ++i) best = std::min(best, stability_ratio(s, double(i) / kPoints));
  return best;
}

// Minimum over 100 uniform points, with beta' from second-order central
// differences in the interior and one-sided differences at the ends.
double sampled_gradient_ratio(const PrecisionSchedule& s) {
  constexpr std::size_t kPoints = 100;
  std::vector<double> t(kPoints), b(kPoints);
  for (std::size_t i = 0; i < kPoints; ++i) {
    t[i] = static_cast<double>(i) / static_cast<double>(kPoints - 1);
    b[i] = s.beta(t[i]);
  }
  double best = 0.0;
  for (std::size_t i = 0; i < kPoints; ++i) {
    double d;
    if (i == 0) {
      d = (b[1] - b[0]) / (t[1] - t[0]);
    } else if (i + 1 == kPoints) {
      d = (b[i] - b[i - 1]) / (t[i] - t[i - 1]);
    } else {
      d = (b[i + 1] - b[i - 1]) / (t[i + 1] - t[i - 1]);
    }
    const double r = 2.0 * (b[i] + s.beta0()) / d;
    best = i == 0 ? r : std::min(best, r);
  }
  return best;
}

}  // namespace

double min_stability_ratio(const PrecisionSchedule& schedule, StabilityMethod method) {
  switch (method) {
    case StabilityMethod::kDenseGrid:
      return dense_grid_ratio(schedule);
    case StabilityMethod::kSampledGradient:
      return sampled_gradient_ratio(schedule);
    case StabilityMethod::kAnalytic: {
      // 2 (beta + beta0) / beta' = (2 / rate) (1 + (beta0 - beta_start) e^{-rate t} / beta_start)
      // is monotone in t, so the minimum sits at an endpoint.
      const double analytic = std::min(stability_ratio(schedule, 0.0), stability_ratio(schedule, 1.0));
      const double grid = dense_grid_ratio(schedule);
      return std::abs(grid - analytic) > 1e-9 ? grid : analytic;
    }
  }
  return dense_grid_ratio(schedule);
}

double max_stable_gamma(const PrecisionSchedule& schedule, double dt, StabilityMethod method) {
  if (!(dt > 0.0)) throw DomainError("max_stable_gamma: dt must be positive");
  return 1.0 + min_stability_ratio(schedule, method) / dt;
}

}  // namespace graphbsi
