#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "graphbsi/autodiff.hpp"
#include "graphbsi/belief.hpp"
#include "graphbsi/graph.hpp"
#include "graphbsi/matrix.hpp"
#include "graphbsi/rng.hpp"
#include "graphbsi/samplers.hpp"

namespace graphbsi {

struct NetConfig {
  std::size_t node_categories = 1;
  std::size_t edge_categories = 2;
  std::size_t hidden = 32;
  std::size_t layers = 2;
  std::size_t freqs = 8;

  void validate() const;
};

// sin at n_freqs frequencies geometrically spaced in [1, 1000], then cos at
// the same frequencies.
std::vector<double> time_embedding(double t, std::size_t n_freqs);

// Per-row inputs of the network: centered logits, probabilities, entropy and
// the time embedding, for the listed rows only.
Matrix feature_pack(const Matrix& logits, std::span<const std::size_t> rows,
                    std::span<const double> time_features);

// Node predictions [n_max, c_X] and upper-triangular edge predictions
// [pair_count(n_max), c_A]. Inactive rows hold softmax(z) and carry no
// meaning.
struct Predictions {
  Matrix nodes;
  Matrix edges;
};

// Forward computation recorded for one backward sweep.
struct ForwardPass {
  ad::Tape tape;
  ad::Var node_out{0};
  ad::Var edge_out{0};
  std::vector<std::size_t> node_rows;  // active node ids
  std::vector<std::size_t> edge_rows;  // active edge rows
  Predictions predictions;
};

// Message-passing reconstruction network over the active subgraph:
//   h  <- h + relu([h, mean_j e_ij] W + b)
//   e  <- e + relu([e, h_i + h_j, h_i * h_j, mean_k e_ik * e_kj] W + b)
// followed by linear heads whose output is added to the input logits before
// a softmax.
class ReconNet {
 public:
  ReconNet() = default;
  // Hidden weights ~ N(0, 1/fan_in) from `noise`, biases and heads zero.
  ReconNet(const NetConfig& config, const NoiseSource& noise);
  // Takes parameter blocks as stored in a checkpoint; shapes are checked.
  ReconNet(const NetConfig& config, std::vector<Matrix> parameters);

  const NetConfig& config() const noexcept { return config_; }
  std::vector<Matrix>& parameters() noexcept { return params_; }
  const std::vector<Matrix>& parameters() const noexcept { return params_; }
  std::size_t scalar_count() const noexcept;
  // Shapes of every parameter block for `config`, in storage order.
  static std::vector<std::pair<std::size_t, std::size_t>> parameter_shapes(const NetConfig& config);

  Predictions forward(const Matrix& node_logits, const Matrix& edge_logits,
                      std::span<const std::uint8_t> mask, double t) const;
  Predictions forward(const GraphBelief& belief) const;

  ForwardPass record(const Matrix& node_logits, const Matrix& edge_logits,
                     std::span<const std::uint8_t> mask, double t) const;
  // Parameter gradients for upstream gradients shaped like the predictions;
  // inactive rows of the upstream are ignored. Consumes the pass.
  std::vector<Matrix> backward(ForwardPass& pass, const Matrix& node_upstream,
                               const Matrix& edge_upstream) const;

 private:
  NetConfig config_;
  std::vector<Matrix> params_;
};

// Adapter for the samplers: channel 0 holds nodes (its activity flags are
// the node mask), channel 1 the upper-triangular edges.
class GraphReconstructor final : public Reconstructor {
 public:
  explicit GraphReconstructor(const ReconNet& net) : net_(net) {}
  void predict(std::span<const ChannelBelief> channels, double t,
               std::span<Matrix> out) const override;

 private:
  const ReconNet& net_;
};

}  // namespace graphbsi
