#pragma once

#include <cstdint>
#include <vector>

#include "graphbsi/graph.hpp"
#include "graphbsi/samplers.hpp"
#include "graphbsi/schedule.hpp"

namespace graphbsi {

// One graph with n active nodes out of n_max, generated by the configured
// scheme from a fresh masked prior.
GraphSample sample_graph(const Reconstructor& f, const PrecisionSchedule& node_schedule,
                         const PrecisionSchedule& edge_schedule, std::size_t n, std::size_t n_max,
                         const SamplerConfig& config, const NoiseSource& noise);

// `count` graphs; graph i draws its node count and all sampler noise from
// streams derived from (seed, i) only.
std::vector<GraphSample> sample_graphs(const Reconstructor& f,
                                       const PrecisionSchedule& node_schedule,
                                       const PrecisionSchedule& edge_schedule,
                                       const NodeCountDistribution& node_counts,
                                       const SamplerConfig& config, std::uint64_t seed,
                                       std::size_t count);

}  // namespace graphbsi
