#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "graphbsi/graph.hpp"
#include "graphbsi/model.hpp"
#include "graphbsi/rng.hpp"
#include "graphbsi/schedule.hpp"

namespace graphbsi {

struct TrainConfig {
  double lr = 0.01;
  std::size_t steps = 1000;
  std::size_t batch = 8;
  std::uint64_t seed = 0;
  double clip = 1.0;      // global gradient norm; 0 disables clipping
  double momentum = 0.9;  // 0 gives plain SGD
  double node_weight = 1.0;
  double edge_weight = 1.0;

  void validate() const;
};

struct LossResult {
  double value = 0.0;
  std::vector<Matrix> grads;
};

// beta'(t)/2 * ||f(z, t) - x||^2 summed over the active node and edge
// components, z drawn from the encoding marginal of each channel. `draw`
// selects the noise streams; `node_ids` relabels the stream keys (see
// node_stream_keys).
LossResult loss(const ReconNet& net, const PrecisionSchedule& node_schedule,
                const PrecisionSchedule& edge_schedule, const GraphSample& x, double t,
                const NoiseSource& noise, std::uint64_t draw, double node_weight = 1.0,
                double edge_weight = 1.0, std::span<const std::uint64_t> node_ids = {});

// The same quantity for an arbitrary reconstructor, without gradients. Uses
// the same noise streams as loss(), so both agree for a GraphReconstructor.
double loss_value(const Reconstructor& f, const PrecisionSchedule& node_schedule,
                  const PrecisionSchedule& edge_schedule, const GraphSample& x, double t,
                  const NoiseSource& noise, std::uint64_t draw, double node_weight = 1.0,
                  double edge_weight = 1.0, std::span<const std::uint64_t> node_ids = {});

// Monte-Carlo estimate of the k-step bound
//   E[log p(x | z_k)] - 1/2 sum_i alpha_i E||f(z_i, t_i) - x||^2
// on the uniform grid t_i = i / k. kl is the (nonnegative) second term.
struct ElboEstimate {
  double reconstruction = 0.0;
  double kl = 0.0;
  double bound = 0.0;
};

ElboEstimate elbo_discrete(const Reconstructor& f, const PrecisionSchedule& node_schedule,
                           const PrecisionSchedule& edge_schedule, const GraphSample& x, int k,
                           int n_mc, const NoiseSource& noise);

struct TrainResult {
  std::vector<double> losses;  // mean batch loss per step
};

// Called after every optimizer step with (step, mean batch loss).
using TrainObserver = std::function<void(std::size_t, double)>;

// Minimizes the loss with SGD (+momentum) and global-norm clipping. One
// graph and one t ~ U(0, 1) per batch slot. Throws NumericalError when the
// loss or a gradient becomes non-finite.
TrainResult train(ReconNet& net, std::span<const GraphSample> dataset,
                  const PrecisionSchedule& node_schedule, const PrecisionSchedule& edge_schedule,
                  const TrainConfig& config, const TrainObserver& observer = {});

}  // namespace graphbsi
