#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "graphbsi/graph.hpp"
#include "graphbsi/rng.hpp"

namespace graphbsi {

enum class Family {
  kAllTreesN,      // every labeled tree on n nodes
  kCyclesVsPaths,  // cycles and paths on n_min..n_max nodes
  kTwoClassSBM,    // two-block stochastic block model, node class = block
};

std::string_view family_name(Family f);
// Accepts all-trees | cycles-vs-paths | two-class-sbm.
Family parse_family(std::string_view name);

struct DatasetParams {
  Family family = Family::kAllTreesN;
  std::size_t n = 4;       // AllTreesN
  std::size_t n_min = 4;   // CyclesVsPaths, TwoClassSBM
  std::size_t n_max = 8;
  std::size_t count = 64;  // CyclesVsPaths, TwoClassSBM
  double p_in = 0.7;
  double p_out = 0.05;

  // Throws ConfigError when the family's limits are violated.
  void validate() const;
};

struct Dataset {
  Family family = Family::kAllTreesN;
  std::vector<GraphSample> graphs;
  NodeCountDistribution node_counts;
  std::size_t n_max = 0;
  std::size_t node_categories = 0;
  std::size_t edge_categories = 0;
};

Dataset generate_dataset(const DatasetParams& params, const NoiseSource& noise);

// All labeled trees on n nodes, decoded from every Pruefer sequence.
std::vector<GraphSample> all_labeled_trees(std::size_t n);

// Class frequencies over active nodes and over edge components between
// active nodes.
std::vector<double> node_class_marginals(std::span<const GraphSample> graphs, std::size_t categories);
std::vector<double> edge_class_marginals(std::span<const GraphSample> graphs, std::size_t categories);

// Family validity oracle: tree, cycle-or-path, or connected.
bool is_valid(Family family, const GraphSample& g);

}  // namespace graphbsi
