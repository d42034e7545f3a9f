#include "graphbsi/model.hpp"

#include <cmath>
#include <string>

#include "graphbsi/error.hpp"

namespace graphbsi {

void NetConfig::validate() const {
  if (node_categories < 1) throw ConfigError("model: need at least one node category");
  if (edge_categories < 2) throw ConfigError("model: need at least two edge categories");
  if (hidden < 1) throw ConfigError("model.hidden must be >= 1");
  if (freqs < 1) throw ConfigError("model.freqs must be >= 1");
}

std::vector<double> time_embedding(double t, std::size_t n_freqs) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("time_embedding: t outside [0, 1]");
  std::vector<double> emb(2 * n_freqs);
  for (std::size_t k = 0; k < n_freqs; ++k) {
    const double frac = n_freqs > 1 ? static_cast<double>(k) / static_cast<double>(n_freqs - 1) : 0.0;
    const double w = std::pow(1000.0, frac);
    emb[k] = std::sin(w * t);
    emb[n_freqs + k] = std::cos(w * t);
  }
  return emb;
}

Matrix feature_pack(const Matrix& logits, std::span<const std::size_t> rows,
                    std::span<const double> time_features) {
  const std::size_t c = logits.cols();
  Matrix out(rows.size(), 2 * c + 1 + time_features.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto z = logits.row(rows[r]);
    auto o = out.row(r);
    double mean = 0.0, mx = z[0];
    for (double v : z) {
      if (!std::isfinite(v)) throw NumericalError("network input contains non-finite logits");
      mean += v;
      mx = std::max(mx, v);
    }
    mean /= static_cast<double>(c);
    double sum = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      o[k] = z[k] - mean;
      sum += (o[c + k] = std::exp(z[k] - mx));
    }
    double entropy = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double p = (o[c + k] /= sum);
      if (p > 0.0) entropy -= p * std::log(p);
    }
    o[2 * c] = entropy;
    std::copy(time_features.begin(), time_features.end(), o.begin() + static_cast<long>(2 * c + 1));
  }
  return out;
}

namespace {

enum : std::size_t {
  kNodeInW, kNodeInB, kEdgeInW, kEdgeInB, kLayerBase,
};
constexpr std::size_t kPerLayer = 4;  // node W, node b, edge W, edge b

std::size_t head_base(const NetConfig& c) { return kLayerBase + kPerLayer * c.layers; }

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> ReconNet::parameter_shapes(const NetConfig& c) {
  const std::size_t d = c.hidden;
  const std::size_t nf = 2 * c.node_categories + 1 + 2 * c.freqs;
  const std::size_t ef = 2 * c.edge_categories + 1 + 2 * c.freqs;
  std::vector<std::pair<std::size_t, std::size_t>> s = {{nf, d}, {1, d}, {ef, d}, {1, d}};
  for (std::size_t l = 0; l < c.layers; ++l) {
    s.insert(s.end(), {{2 * d, d}, {1, d}, {4 * d, d}, {1, d}});
  }
  s.insert(s.end(), {{d, c.node_categories}, {1, c.node_categories},
                     {d, c.edge_categories}, {1, c.edge_categories}});
  return s;
}

ReconNet::ReconNet(const NetConfig& config, const NoiseSource& noise) : config_(config) {
  config.validate();
  const auto shapes = parameter_shapes(config);
  const std::size_t heads = head_base(config);
  for (std::size_t p = 0; p < shapes.size(); ++p) {
    Matrix m(shapes[p].first, shapes[p].second);
    const bool weight = shapes[p].first > 1 || p == kNodeInW || p == kEdgeInW;
    if (weight && p < heads) {
      auto rng = noise.stream(StreamTag::kInit, p);
      const double sd = 1.0 / std::sqrt(static_cast<double>(m.rows()));
      for (double& v : m.values()) v = sd * rng.normal();
    }
    params_.push_back(std::move(m));
  }
}

ReconNet::ReconNet(const NetConfig& config, std::vector<Matrix> parameters)
    : config_(config), params_(std::move(parameters)) {
  config.validate();
  const auto shapes = parameter_shapes(config);
  if (shapes.size() != params_.size()) throw DomainError("network: wrong number of parameter blocks");
  for (std::size_t p = 0; p < shapes.size(); ++p) {
    if (params_[p].rows() != shapes[p].first || params_[p].cols() != shapes[p].second) {
      throw DomainError("network: parameter block " + std::to_string(p) + " has the wrong shape");
    }
  }
}

std::size_t ReconNet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

ForwardPass ReconNet::record(const Matrix& node_logits, const Matrix& edge_logits,
                             std::span<const std::uint8_t> mask, double t) const {
  const std::size_t n_max = mask.size();
  if (node_logits.rows() != n_max || node_logits.cols() != config_.node_categories) {
    throw DomainError("network: node logits shape mismatch");
  }
  if (edge_logits.rows() != pair_count(n_max) || edge_logits.cols() != config_.edge_categories) {
    throw DomainError("network: edge logits shape mismatch");
  }
  ForwardPass pass;
  auto& tape = pass.tape;
  for (std::size_t i = 0; i < n_max; ++i) {
    if (mask[i]) pass.node_rows.push_back(i);
  }
  const std::size_t m = pass.node_rows.size();
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      pass.edge_rows.push_back(edge_index(pass.node_rows[a], pass.node_rows[b], n_max));
    }
  }
  // Local pair index among active nodes; equals the position in edge_rows.
  auto pair = [m](std::size_t a, std::size_t b) {
    return a < b ? edge_index(a, b, m) : edge_index(b, a, m);
  };

  std::vector<std::size_t> incident, incident_offsets{0};
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (b != a) incident.push_back(pair(a, b));
    }
    incident_offsets.push_back(incident.size());
  }
  std::vector<std::size_t> end_a, end_b, hop_first, hop_second, hop_offsets{0};
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      end_a.push_back(a);
      end_b.push_back(b);
      for (std::size_t k = 0; k < m; ++k) {
        if (k == a || k == b) continue;
        hop_first.push_back(pair(a, k));
        hop_second.push_back(pair(k, b));
      }
      hop_offsets.push_back(hop_first.size());
    }
  }

  const auto temb = time_embedding(t, config_.freqs);
  std::vector<ad::Var> P;
  P.reserve(params_.size());
  for (std::size_t p = 0; p < params_.size(); ++p) P.push_back(tape.parameter(params_[p], p));

  auto linear = [&](ad::Var x, std::size_t w) { return tape.add_row(tape.matmul(x, P[w]), P[w + 1]); };

  ad::Var xn = tape.constant(feature_pack(node_logits, pass.node_rows, temb));
  ad::Var xe = tape.constant(feature_pack(edge_logits, pass.edge_rows, temb));
  ad::Var h = tape.relu(linear(xn, kNodeInW));
  ad::Var e = tape.relu(linear(xe, kEdgeInW));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::size_t base = kLayerBase + kPerLayer * l;
    ad::Var agg = tape.segment_mean(tape.gather_rows(e, incident), incident_offsets);
    ad::Var h_next = tape.add(h, tape.relu(linear(tape.concat_cols({h, agg}), base)));
    ad::Var hi = tape.gather_rows(h, end_a);
    ad::Var hj = tape.gather_rows(h, end_b);
    ad::Var hop = tape.segment_mean(
        tape.mul(tape.gather_rows(e, hop_first), tape.gather_rows(e, hop_second)), hop_offsets);
    ad::Var mixed = tape.concat_cols({e, tape.add(hi, hj), tape.mul(hi, hj), hop});
    e = tape.add(e, tape.relu(linear(mixed, base + 2)));
    h = h_next;
  }

  auto gather_logits = [](const Matrix& z, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), z.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy(z.row(rows[r]).begin(), z.row(rows[r]).end(), out.row(r).begin());
    }
    return out;
  };
  const std::size_t heads = head_base(config_);
  pass.node_out = tape.softmax_rows(
      tape.add(tape.constant(gather_logits(node_logits, pass.node_rows)), linear(h, heads)));
  pass.edge_out = tape.softmax_rows(
      tape.add(tape.constant(gather_logits(edge_logits, pass.edge_rows)), linear(e, heads + 2)));

  auto scatter = [](const Matrix& z, const Matrix& active, const std::vector<std::size_t>& rows) {
    Matrix out = softmax_rows(z);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy(active.row(r).begin(), active.row(r).end(), out.row(rows[r]).begin());
    }
    return out;
  };
  Matrix masked_nodes = node_logits;
  Matrix masked_edges = edge_logits;
  // Inactive rows may hold anything; report softmax of zero logits there.
  std::vector<std::uint8_t> live_edges(edge_logits.rows(), 0);
  for (std::size_t r : pass.edge_rows) live_edges[r] = 1;
  for (std::size_t i = 0; i < n_max; ++i) {
    if (!mask[i]) std::fill(masked_nodes.row(i).begin(), masked_nodes.row(i).end(), 0.0);
  }
  for (std::size_t r = 0; r < live_edges.size(); ++r) {
    if (!live_edges[r]) std::fill(masked_edges.row(r).begin(), masked_edges.row(r).end(), 0.0);
  }
  pass.predictions.nodes = scatter(masked_nodes, tape.value(pass.node_out), pass.node_rows);
  pass.predictions.edges = scatter(masked_edges, tape.value(pass.edge_out), pass.edge_rows);
  return pass;
}

Predictions ReconNet::forward(const Matrix& node_logits, const Matrix& edge_logits,
                              std::span<const std::uint8_t> mask, double t) const {
  return std::move(record(node_logits, edge_logits, mask, t).predictions);
}

Predictions ReconNet::forward(const GraphBelief& belief) const {
  return forward(belief.nodes().state.logits, belief.edges().state.logits, belief.mask, belief.t());
}

std::vector<Matrix> ReconNet::backward(ForwardPass& pass, const Matrix& node_upstream,
                                       const Matrix& edge_upstream) const {
  if (!node_upstream.same_shape(pass.predictions.nodes) ||
      !edge_upstream.same_shape(pass.predictions.edges)) {
    throw DomainError("network: upstream gradient shape mismatch");
  }
  auto restrict = [](const Matrix& up, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), up.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy(up.row(rows[r]).begin(), up.row(rows[r]).end(), out.row(r).begin());
    }
    return out;
  };
  pass.tape.seed(pass.node_out, restrict(node_upstream, pass.node_rows));
  pass.tape.seed(pass.edge_out, restrict(edge_upstream, pass.edge_rows));
  pass.tape.backward();
  std::vector<Matrix> grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) grads.emplace_back(p.rows(), p.cols());
  for (const auto& [index, g] : pass.tape.parameter_grads()) grads[index] = *g;
  return grads;
}

void GraphReconstructor::predict(std::span<const ChannelBelief> channels, double t,
                                 std::span<Matrix> out) const {
  if (channels.size() != 2 || out.size() != 2) {
    throw DomainError("graph reconstructor: expected a node and an edge channel");
  }
  const auto& nodes = channels[0];
  std::vector<std::uint8_t> mask = nodes.active;
  if (mask.empty()) mask.assign(nodes.state.logits.rows(), 1);
  Predictions p = net_.forward(nodes.state.logits, channels[1].state.logits, mask, t);
  out[0] = std::move(p.nodes);
  out[1] = std::move(p.edges);
}

}  // namespace graphbsi
