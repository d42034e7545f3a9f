#include "graphbsi/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "graphbsi/error.hpp"

namespace graphbsi {

std::pair<std::size_t, std::size_t> edge_endpoints(std::size_t index, std::size_t n) {
  std::size_t i = 0;
  while (index >= n - i - 1) {
    index -= n - i - 1;
    ++i;
  }
  return {i, i + 1 + index};
}

GraphSample::GraphSample(std::size_t n_active, std::size_t n_max, std::size_t node_categories,
                         std::size_t edge_categories)
    : node_categories_(node_categories),
      edge_categories_(edge_categories),
      mask_(n_max, 0),
      nodes_(n_max, static_cast<int>(node_categories)),
      edges_(pair_count(n_max), 0) {
  if (n_active > n_max) throw DomainError("graph: more active nodes than n_max");
  if (node_categories < 1) throw DomainError("graph: need at least one node category");
  if (edge_categories < 2) throw DomainError("graph: need at least two edge categories");
  for (std::size_t i = 0; i < n_active; ++i) {
    mask_[i] = 1;
    nodes_[i] = 0;
  }
}

std::size_t GraphSample::active_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

void GraphSample::set_active(std::size_t i, bool on) {
  if (i >= n_max()) throw DomainError("graph: node index out of range");
  if (on == active(i)) return;
  mask_[i] = on ? 1 : 0;
  nodes_[i] = on ? 0 : padding_class();
  if (!on) {
    for (std::size_t j = 0; j < n_max(); ++j) {
      if (j != i) edges_[i < j ? edge_index(i, j, n_max()) : edge_index(j, i, n_max())] = 0;
    }
  }
}

void GraphSample::set_node_class(std::size_t i, int cls) {
  if (!active(i)) throw DomainError("graph: cannot label an inactive node");
  if (cls < 0 || static_cast<std::size_t>(cls) >= node_categories_) {
    throw DomainError("graph: node class out of range");
  }
  nodes_[i] = cls;
}

int GraphSample::edge(std::size_t i, std::size_t j) const {
  if (i >= n_max() || j >= n_max()) throw DomainError("graph: node index out of range");
  if (i == j) return 0;
  return i < j ? edges_[edge_index(i, j, n_max())] : edges_[edge_index(j, i, n_max())];
}

void GraphSample::set_edge(std::size_t i, std::size_t j, int cls) {
  if (i == j) throw DomainError("graph: self-loops are not allowed");
  if (!active(i) || !active(j)) throw DomainError("graph: edge endpoint is inactive");
  if (cls < 0 || static_cast<std::size_t>(cls) >= edge_categories_) {
    throw DomainError("graph: edge class out of range");
  }
  edges_[i < j ? edge_index(i, j, n_max()) : edge_index(j, i, n_max())] = cls;
}

std::size_t GraphSample::degree(std::size_t i) const {
  std::size_t d = 0;
  for (std::size_t j = 0; j < n_max(); ++j) d += (j != i && edge(i, j) != 0) ? 1 : 0;
  return d;
}

std::size_t GraphSample::edge_count() const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [](int c) { return c != 0; }));
}

Matrix GraphSample::node_onehot() const {
  Matrix m(n_max(), node_categories_ + 1);
  for (std::size_t i = 0; i < n_max(); ++i) m(i, static_cast<std::size_t>(nodes_[i])) = 1.0;
  return m;
}

Matrix GraphSample::edge_onehot() const {
  const std::size_t n = n_max();
  Matrix m(n * n, edge_categories_);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i * n + j, static_cast<std::size_t>(edge(i, j))) = 1.0;
  }
  return m;
}

Matrix GraphSample::node_targets() const {
  Matrix m(n_max(), node_categories_);
  for (std::size_t i = 0; i < n_max(); ++i) {
    if (active(i)) m(i, static_cast<std::size_t>(nodes_[i])) = 1.0;
  }
  return m;
}

Matrix GraphSample::edge_targets() const {
  Matrix m(edges_.size(), edge_categories_);
  for (std::size_t e = 0; e < edges_.size(); ++e) m(e, static_cast<std::size_t>(edges_[e])) = 1.0;
  return m;
}

Matrix materialize_edges(const Matrix& upper, std::size_t n) {
  if (upper.rows() != pair_count(n)) throw DomainError("materialize_edges: row count mismatch");
  Matrix full(n * n, upper.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto src = upper.row(edge_index(i, j, n));
      std::copy(src.begin(), src.end(), full.row(i * n + j).begin());
      std::copy(src.begin(), src.end(), full.row(j * n + i).begin());
    }
  }
  return full;
}

std::vector<std::uint64_t> node_stream_keys(std::size_t n_max,
                                            std::span<const std::uint64_t> node_ids) {
  std::vector<std::uint64_t> keys(n_max);
  for (std::size_t i = 0; i < n_max; ++i) keys[i] = node_ids.empty() ? i : node_ids[i];
  return keys;
}

std::vector<std::uint64_t> edge_stream_keys(std::size_t n_max,
                                            std::span<const std::uint64_t> node_ids) {
  const auto ids = node_stream_keys(n_max, node_ids);
  std::vector<std::uint64_t> keys(pair_count(n_max));
  for (std::size_t i = 0; i < n_max; ++i) {
    for (std::size_t j = i + 1; j < n_max; ++j) {
      const std::uint64_t a = std::min(ids[i], ids[j]), b = std::max(ids[i], ids[j]);
      keys[edge_index(i, j, n_max)] = (a << 32) ^ b;
    }
  }
  return keys;
}

std::vector<std::uint8_t> edge_mask(std::span<const std::uint8_t> node_mask) {
  const std::size_t n = node_mask.size();
  std::vector<std::uint8_t> m(pair_count(n), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      m[edge_index(i, j, n)] = (node_mask[i] && node_mask[j]) ? 1 : 0;
    }
  }
  return m;
}

GraphBelief make_masked_belief(const PrecisionSchedule& node_schedule,
                               const PrecisionSchedule& edge_schedule, std::size_t n,
                               std::size_t n_max, const NoiseSource& noise,
                               std::span<const std::uint64_t> node_ids) {
  if (n < 1 || n > n_max) throw DomainError("make_masked_belief: need 1 <= n <= n_max");
  if (!node_ids.empty() && node_ids.size() != n_max) {
    throw DomainError("make_masked_belief: one node id per slot required");
  }
  GraphBelief g;
  g.n_max = n_max;
  g.mask.assign(n_max, 0);
  std::fill(g.mask.begin(), g.mask.begin() + static_cast<long>(n), std::uint8_t{1});

  auto init = [&](ChannelBelief& ch, const PrecisionSchedule& sched, std::size_t rows,
                  std::uint64_t channel, std::vector<std::uint8_t> active,
                  std::vector<std::uint64_t> keys) {
    ch.active = std::move(active);
    ch.keys = std::move(keys);
    ch.state = BeliefState{Matrix(rows, sched.categories()), 0.0};
    const RowStreams streams{&noise, StreamTag::kPrior, 0, channel, ch.keys};
    const double sd = std::sqrt(sched.beta0());
    for (std::size_t r = 0; r < rows; ++r) {
      if (!ch.active[r]) continue;
      auto rng = streams.at(r);
      auto row = ch.state.logits.row(r);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = sched.mu0()[k] + sd * rng.normal();
    }
  };
  init(g.nodes(), node_schedule, n_max, 0, g.mask, node_stream_keys(n_max, node_ids));
  init(g.edges(), edge_schedule, pair_count(n_max), 1, edge_mask(g.mask),
       edge_stream_keys(n_max, node_ids));
  return g;
}

GraphSample graph_from_samples(const CategoricalSample& nodes, const CategoricalSample& edges,
                               std::span<const std::uint8_t> mask) {
  const std::size_t n = mask.size();
  if (nodes.components() != n || edges.components() != pair_count(n)) {
    throw DomainError("graph_from_samples: shape mismatch");
  }
  GraphSample g(0, n, nodes.categories(), edges.categories());
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    g.set_active(i, true);
    g.set_node_class(i, nodes[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (mask[i] && mask[j]) g.set_edge(i, j, edges[edge_index(i, j, n)]);
    }
  }
  return g;
}

NodeCountDistribution::NodeCountDistribution(std::vector<double> probabilities)
    : probs_(std::move(probabilities)) {
  if (probs_.empty()) throw DomainError("node count distribution is empty");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("node count probabilities must be >= 0");
    total += p;
  }
  if (!(total > 0.0)) throw DomainError("node count distribution is empty");
  for (double& p : probs_) p /= total;
}

NodeCountDistribution NodeCountDistribution::from_counts(std::span<const std::size_t> node_counts,
                                                         std::size_t n_max) {
  std::vector<double> hist(n_max, 0.0);
  for (std::size_t n : node_counts) {
    if (n < 1 || n > n_max) throw DomainError("node count outside [1, n_max]");
    hist[n - 1] += 1.0;
  }
  return NodeCountDistribution(std::move(hist));
}

std::size_t NodeCountDistribution::sample(CounterRng& rng) const {
  if (probs_.empty()) throw DomainError("node count distribution is empty");
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < probs_.size(); ++k) {
    if (probs_[k] <= 0.0) continue;
    last = k;
    acc += probs_[k];
    if (u < acc) return k + 1;
  }
  return last + 1;
}

namespace {

std::vector<std::size_t> active_nodes(const GraphSample& g) {
  std::vector<std::size_t> v;
  for (std::size_t i = 0; i < g.n_max(); ++i) {
    if (g.active(i)) v.push_back(i);
  }
  return v;
}

std::size_t reachable_count(const GraphSample& g, const std::vector<std::size_t>& nodes) {
  if (nodes.empty()) return 0;
  std::vector<std::uint8_t> seen(g.n_max(), 0);
  std::vector<std::size_t> stack{nodes.front()};
  seen[nodes.front()] = 1;
  std::size_t count = 0;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    ++count;
    for (std::size_t v : nodes) {
      if (!seen[v] && g.edge(u, v) != 0) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  return count;
}

}  // namespace

bool is_connected(const GraphSample& g) {
  const auto nodes = active_nodes(g);
  return !nodes.empty() && reachable_count(g, nodes) == nodes.size();
}

bool is_tree(const GraphSample& g) {
  const auto nodes = active_nodes(g);
  return !nodes.empty() && g.edge_count() + 1 == nodes.size() && is_connected(g);
}

bool is_path(const GraphSample& g) {
  if (!is_tree(g)) return false;
  for (std::size_t i : active_nodes(g)) {
    if (g.degree(i) > 2) return false;
  }
  return true;
}

bool is_cycle(const GraphSample& g) {
  const auto nodes = active_nodes(g);
  if (nodes.size() < 3 || !is_connected(g)) return false;
  for (std::size_t i : nodes) {
    if (g.degree(i) != 2) return false;
  }
  return true;
}

void write_graphs(std::ostream& out, std::span<const GraphSample> graphs) {
  for (const GraphSample& g : graphs) {
    const auto nodes = active_nodes(g);
    out << nodes.size() << ';';
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (k) out << ',';
      out << g.node_class(nodes[k]);
    }
    out << ';';
    bool first = true;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        const int c = g.edge(nodes[a], nodes[b]);
        if (c == 0) continue;
        if (!first) out << ',';
        first = false;
        out << a << '-' << b << '-' << c;
      }
    }
    out << '\n';
  }
}

namespace {

struct ParsedGraph {
  std::size_t line = 0;
  std::vector<int> nodes;
  std::vector<std::array<long, 3>> edges;
};

long parse_int(std::string_view s, std::size_t line, const char* what) {
  long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::vector<GraphSample> read_graphs(std::istream& in, std::size_t node_categories,
                                     std::size_t edge_categories) {
  std::vector<ParsedGraph> parsed;
  std::string text;
  std::size_t line_no = 0;
  long max_node = 0, max_edge = 1;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    const auto fields = split(text, ';');
    if (fields.size() != 3) throw ParseError(line_no, "expected 3 ';'-separated fields");
    ParsedGraph g;
    g.line = line_no;
    const long n = parse_int(fields[0], line_no, "node count");
    if (n < 1) throw ParseError(line_no, "node count must be positive");
    if (!fields[1].empty()) {
      for (auto tok : split(fields[1], ',')) {
        const long c = parse_int(tok, line_no, "node category");
        if (c < 0) throw ParseError(line_no, "negative node category");
        max_node = std::max(max_node, c);
        g.nodes.push_back(static_cast<int>(c));
      }
    }
    if (g.nodes.size() != static_cast<std::size_t>(n)) {
      throw ParseError(line_no, "node category count does not match n");
    }
    if (!fields[2].empty()) {
      for (auto tok : split(fields[2], ',')) {
        const auto parts = split(tok, '-');
        if (parts.size() != 3) throw ParseError(line_no, "edge must be i-j-cat");
        const long i = parse_int(parts[0], line_no, "edge endpoint");
        const long j = parse_int(parts[1], line_no, "edge endpoint");
        const long c = parse_int(parts[2], line_no, "edge category");
        if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
          throw ParseError(line_no, "edge endpoint out of range");
        }
        if (c < 1) throw ParseError(line_no, "listed edges must have category >= 1");
        max_edge = std::max(max_edge, c);
        g.edges.push_back({i, j, c});
      }
    }
    parsed.push_back(std::move(g));
  }
  const std::size_t cx = node_categories ? node_categories : static_cast<std::size_t>(max_node) + 1;
  const std::size_t ca = edge_categories ? edge_categories : static_cast<std::size_t>(max_edge) + 1;
  std::vector<GraphSample> graphs;
  graphs.reserve(parsed.size());
  for (const ParsedGraph& p : parsed) {
    const std::size_t n = p.nodes.size();
    GraphSample g(n, n, cx, ca);
    try {
      for (std::size_t i = 0; i < n; ++i) g.set_node_class(i, p.nodes[i]);
      for (const auto& e : p.edges) {
        g.set_edge(static_cast<std::size_t>(e[0]), static_cast<std::size_t>(e[1]),
                   static_cast<int>(e[2]));
      }
    } catch (const DomainError& err) {
      throw ParseError(p.line, err.what());
    }
    graphs.push_back(std::move(g));
  }
  return graphs;
}

}  // namespace graphbsi
