#include "graphbsi/generate.hpp"

namespace graphbsi {

GraphSample sample_graph(const Reconstructor& f, const PrecisionSchedule& node_schedule,
                         const PrecisionSchedule& edge_schedule, std::size_t n, std::size_t n_max,
                         const SamplerConfig& config, const NoiseSource& noise) {
  GraphBelief belief = make_masked_belief(node_schedule, edge_schedule, n, n_max, noise);
  const std::array<PrecisionSchedule, 2> schedules{node_schedule, edge_schedule};
  const auto out = run_sampler(f, schedules, belief.channels, config, noise);
  return graph_from_samples(out[0], out[1], belief.mask);
}

std::vector<GraphSample> sample_graphs(const Reconstructor& f,
                                       const PrecisionSchedule& node_schedule,
                                       const PrecisionSchedule& edge_schedule,
                                       const NodeCountDistribution& node_counts,
                                       const SamplerConfig& config, std::uint64_t seed,
                                       std::size_t count) {
  config.validate();
  const NoiseSource root(seed);
  std::vector<GraphSample> graphs;
  graphs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = root.stream(StreamTag::kNodeCount, i);
    const std::size_t n = node_counts.sample(rng);
    const NoiseSource noise(mix64(seed ^ mix64(0x5851f42d4c957f2dULL + i)));
    graphs.push_back(
        sample_graph(f, node_schedule, edge_schedule, n, node_counts.n_max(), config, noise));
  }
  return graphs;
}

}  // namespace graphbsi
