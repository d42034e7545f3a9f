#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "graphbsi/graph.hpp"

namespace graphbsi {

// Largest active node count accepted by the exact isomorphism test.
inline constexpr std::size_t kMaxIsomorphismNodes = 12;

// Exact isomorphism of the active subgraphs, respecting node and edge
// categories. Backtracking with degree/category pruning.
bool isomorphic(const GraphSample& a, const GraphSample& b);

// Pooled degree histogram over active nodes; entry d is the fraction of
// nodes with degree d.
std::vector<double> degree_histogram(std::span<const GraphSample> graphs);

// Half the L1 distance; the shorter histogram is zero-padded.
double total_variation(std::span<const double> p, std::span<const double> q);

struct Metrics {
  double validity = 0.0;
  double uniqueness = 0.0;
  double novelty = 0.0;
  double degree_hist_tv = 0.0;
};

Metrics evaluate(std::span<const GraphSample> samples, std::span<const GraphSample> train,
                 const std::function<bool(const GraphSample&)>& valid);

}  // namespace graphbsi
