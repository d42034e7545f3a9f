#include "graphbsi/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "graphbsi/error.hpp"

namespace graphbsi {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kAllTreesN: return "all-trees";
    case Family::kCyclesVsPaths: return "cycles-vs-paths";
    case Family::kTwoClassSBM: return "two-class-sbm";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "all-trees") return Family::kAllTreesN;
  if (name == "cycles-vs-paths") return Family::kCyclesVsPaths;
  if (name == "two-class-sbm") return Family::kTwoClassSBM;
  throw ConfigError("unknown dataset family '" + std::string(name) + "'");
}

void DatasetParams::validate() const {
  switch (family) {
    case Family::kAllTreesN:
      if (n < 1 || n > 6) throw ConfigError("all-trees: n must be in [1, 6]");
      return;
    case Family::kCyclesVsPaths:
      if (n_min < 4 || n_max > 8 || n_min > n_max) {
        throw ConfigError("cycles-vs-paths: need 4 <= n_min <= n_max <= 8");
      }
      break;
    case Family::kTwoClassSBM:
      if (n_min < 2 || n_max > 12 || n_min > n_max) {
        throw ConfigError("two-class-sbm: need 2 <= n_min <= n_max <= 12");
      }
      if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
        throw ConfigError("two-class-sbm: edge probabilities must be in [0, 1]");
      }
      break;
  }
  if (count < 1) throw ConfigError("dataset count must be >= 1");
}

std::vector<GraphSample> all_labeled_trees(std::size_t n) {
  if (n < 1) throw DomainError("all_labeled_trees: n must be >= 1");
  if (n <= 2) {
    GraphSample g(n, n, 1, 2);
    if (n == 2) g.set_edge(0, 1, 1);
    return {g};
  }
  const std::size_t len = n - 2;
  std::vector<std::size_t> code(len, 0);
  std::vector<GraphSample> trees;
  while (true) {
    GraphSample g(n, n, 1, 2);
    std::vector<std::size_t> degree(n, 1);
    for (std::size_t v : code) ++degree[v];
    for (std::size_t v : code) {
      std::size_t leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      g.set_edge(leaf, v, 1);
      --degree[leaf];
      --degree[v];
    }
    std::size_t u = n, w = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (degree[i] == 1) (u == n ? u : w) = i;
    }
    g.set_edge(u, w, 1);
    trees.push_back(std::move(g));

    std::size_t pos = 0;
    while (pos < len && ++code[pos] == n) code[pos++] = 0;
    if (pos == len) break;
  }
  return trees;
}

namespace {

std::vector<std::size_t> random_permutation(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  return perm;
}

std::size_t uniform_size(std::size_t lo, std::size_t hi, CounterRng& rng) {
  const auto span = static_cast<double>(hi - lo + 1);
  return lo + std::min(static_cast<std::size_t>(rng.uniform() * span), hi - lo);
}

}  // namespace

Dataset generate_dataset(const DatasetParams& params, const NoiseSource& noise) {
  params.validate();
  Dataset d;
  d.family = params.family;
  d.edge_categories = 2;
  switch (params.family) {
    case Family::kAllTreesN:
      d.n_max = params.n;
      d.node_categories = 1;
      d.graphs = all_labeled_trees(params.n);
      break;
    case Family::kCyclesVsPaths:
      d.n_max = params.n_max;
      d.node_categories = 1;
      for (std::size_t k = 0; k < params.count; ++k) {
        auto rng = noise.stream(StreamTag::kDataset, k);
        const std::size_t n = uniform_size(params.n_min, params.n_max, rng);
        const bool cycle = rng.uniform() < 0.5;
        const auto perm = random_permutation(n, rng);
        GraphSample g(n, d.n_max, 1, 2);
        for (std::size_t i = 0; i + 1 < n; ++i) g.set_edge(perm[i], perm[i + 1], 1);
        if (cycle) g.set_edge(perm[n - 1], perm[0], 1);
        d.graphs.push_back(std::move(g));
      }
      break;
    case Family::kTwoClassSBM:
      d.n_max = params.n_max;
      d.node_categories = 2;
      for (std::size_t k = 0; k < params.count; ++k) {
        auto rng = noise.stream(StreamTag::kDataset, k);
        const std::size_t n = uniform_size(params.n_min, params.n_max, rng);
        GraphSample g(n, d.n_max, 2, 2);
        for (std::size_t i = 0; i < n; ++i) g.set_node_class(i, rng.uniform() < 0.5 ? 0 : 1);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = i + 1; j < n; ++j) {
            const double p = g.node_class(i) == g.node_class(j) ? params.p_in : params.p_out;
            if (rng.uniform() < p) g.set_edge(i, j, 1);
          }
        }
        d.graphs.push_back(std::move(g));
      }
      break;
  }
  std::vector<std::size_t> counts;
  counts.reserve(d.graphs.size());
  for (const auto& g : d.graphs) counts.push_back(g.active_count());
  d.node_counts = NodeCountDistribution::from_counts(counts, d.n_max);
  return d;
}

std::vector<double> node_class_marginals(std::span<const GraphSample> graphs, std::size_t categories) {
  std::vector<double> freq(categories, 0.0);
  double total = 0.0;
  for (const auto& g : graphs) {
    for (std::size_t i = 0; i < g.n_max(); ++i) {
      if (!g.active(i)) continue;
      freq.at(static_cast<std::size_t>(g.node_class(i))) += 1.0;
      total += 1.0;
    }
  }
  if (total > 0.0) {
    for (double& f : freq) f /= total;
  }
  return freq;
}

std::vector<double> edge_class_marginals(std::span<const GraphSample> graphs, std::size_t categories) {
  std::vector<double> freq(categories, 0.0);
  double total = 0.0;
  for (const auto& g : graphs) {
    for (std::size_t i = 0; i < g.n_max(); ++i) {
      for (std::size_t j = i + 1; j < g.n_max(); ++j) {
        if (!g.active(i) || !g.active(j)) continue;
        freq.at(static_cast<std::size_t>(g.edge(i, j))) += 1.0;
        total += 1.0;
      }
    }
  }
  if (total > 0.0) {
    for (double& f : freq) f /= total;
  }
  return freq;
}

bool is_valid(Family family, const GraphSample& g) {
  switch (family) {
    case Family::kAllTreesN: return is_tree(g);
    case Family::kCyclesVsPaths: return is_cycle(g) || is_path(g);
    case Family::kTwoClassSBM: return is_connected(g);
  }
  return false;
}

}  // namespace graphbsi
