#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "graphbsi/belief.hpp"
#include "graphbsi/matrix.hpp"
#include "graphbsi/rng.hpp"
#include "graphbsi/samplers.hpp"
#include "graphbsi/schedule.hpp"

namespace graphbsi {

// Number of unordered node pairs, i.e. edge components, of an n-node graph.
constexpr std::size_t pair_count(std::size_t n) noexcept { return n * (n - (n > 0 ? 1 : 0)) / 2; }

// Row of pair (i, j), i < j, in the lexicographic upper-triangular layout.
constexpr std::size_t edge_index(std::size_t i, std::size_t j, std::size_t n) noexcept {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

// Inverse of edge_index.
std::pair<std::size_t, std::size_t> edge_endpoints(std::size_t index, std::size_t n);

// Fixed-size graph with one-hot node and edge categories and a node mask.
// Edge category 0 is "no edge"; the diagonal is pinned to it. Inactive nodes
// hold the padding class (== node_categories()) and have no edges.
class GraphSample {
 public:
  GraphSample() = default;
  // First `n_active` nodes active with class 0, no edges.
  GraphSample(std::size_t n_active, std::size_t n_max, std::size_t node_categories,
              std::size_t edge_categories);

  std::size_t n_max() const noexcept { return mask_.size(); }
  std::size_t node_categories() const noexcept { return node_categories_; }
  std::size_t edge_categories() const noexcept { return edge_categories_; }
  int padding_class() const noexcept { return static_cast<int>(node_categories_); }

  bool active(std::size_t i) const { return mask_.at(i) != 0; }
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
  std::size_t active_count() const noexcept;
  void set_active(std::size_t i, bool on);

  int node_class(std::size_t i) const { return nodes_.at(i); }
  void set_node_class(std::size_t i, int cls);

  int edge(std::size_t i, std::size_t j) const;
  // Symmetric write; i != j, both endpoints active.
  void set_edge(std::size_t i, std::size_t j, int cls);

  std::size_t degree(std::size_t i) const;
  std::size_t edge_count() const;

  // [n_max, node_categories + 1]; the last column is the padding class.
  Matrix node_onehot() const;
  // [n_max * n_max, edge_categories], row i * n_max + j.
  Matrix edge_onehot() const;

  // Node rows restricted to real categories ([n_max, c_X]); inactive rows zero.
  Matrix node_targets() const;
  // Upper-triangular edge one-hots ([pair_count(n_max), c_A]).
  Matrix edge_targets() const;

  bool operator==(const GraphSample&) const = default;

 private:
  std::size_t node_categories_ = 0;
  std::size_t edge_categories_ = 0;
  std::vector<std::uint8_t> mask_;
  std::vector<int> nodes_;
  std::vector<int> edges_;  // upper triangle, edge_index layout
};

// Belief over a graph: a node channel (n_max rows) and an edge channel
// (pair_count(n_max) rows, upper triangle only).
struct GraphBelief {
  std::size_t n_max = 0;
  std::vector<std::uint8_t> mask;
  std::array<ChannelBelief, 2> channels;

  ChannelBelief& nodes() { return channels[0]; }
  const ChannelBelief& nodes() const { return channels[0]; }
  ChannelBelief& edges() { return channels[1]; }
  const ChannelBelief& edges() const { return channels[1]; }
  double t() const { return channels[0].state.t; }
};

// Expands upper-triangular edge rows to a symmetric [n * n, c] matrix. The
// diagonal rows are zero.
Matrix materialize_edges(const Matrix& upper, std::size_t n);

// Stream keys for a node ordering: nodes use their id, edges the unordered
// pair of ids. `node_ids` empty means identity.
std::vector<std::uint64_t> node_stream_keys(std::size_t n_max, std::span<const std::uint64_t> node_ids);
std::vector<std::uint64_t> edge_stream_keys(std::size_t n_max, std::span<const std::uint64_t> node_ids);

// Activity flags of the edge channel implied by a node mask.
std::vector<std::uint8_t> edge_mask(std::span<const std::uint8_t> node_mask);

// Prior belief with the first n nodes active. Inactive rows hold 0 logits and
// are never touched by samplers.
GraphBelief make_masked_belief(const PrecisionSchedule& node_schedule,
                               const PrecisionSchedule& edge_schedule, std::size_t n,
                               std::size_t n_max, const NoiseSource& noise,
                               std::span<const std::uint64_t> node_ids = {});

// Converts per-channel samples on a masked belief to a graph.
GraphSample graph_from_samples(const CategoricalSample& nodes, const CategoricalSample& edges,
                               std::span<const std::uint8_t> mask);

class NodeCountDistribution {
 public:
  NodeCountDistribution() = default;
  // probabilities[k] is P(N = k + 1).
  explicit NodeCountDistribution(std::vector<double> probabilities);
  static NodeCountDistribution from_counts(std::span<const std::size_t> node_counts,
                                           std::size_t n_max);

  std::size_t n_max() const noexcept { return probs_.size(); }
  const std::vector<double>& probabilities() const noexcept { return probs_; }

  std::size_t sample(CounterRng& rng) const;

 private:
  std::vector<double> probs_;
};

// Undirected checks on the active, edge-present subgraph.
bool is_connected(const GraphSample& g);
bool is_tree(const GraphSample& g);
bool is_path(const GraphSample& g);
bool is_cycle(const GraphSample& g);

// One graph per line: `n;node_cats;edges` with node_cats comma-separated and
// edges as i-j-cat (i < j, lexicographic, category != 0) comma-separated.
void write_graphs(std::ostream& out, std::span<const GraphSample> graphs);
// Categories default to one more than the largest value seen in the stream
// (edges at least 2). Throws ParseError with the offending line.
std::vector<GraphSample> read_graphs(std::istream& in, std::size_t node_categories = 0,
                                     std::size_t edge_categories = 0);

}  // namespace graphbsi
