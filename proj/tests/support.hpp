#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "graphbsi/graph.hpp"
#include "graphbsi/matrix.hpp"

namespace testing {

using graphbsi::GraphSample;
using graphbsi::Matrix;

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = n(rng);
  return m;
}

inline std::vector<std::size_t> random_permutation(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Random graph on n active nodes out of n_max (the first n slots).
inline GraphSample random_graph(std::mt19937_64& rng, std::size_t n, std::size_t n_max,
                                std::size_t cx, std::size_t ca, double density = 0.4) {
  GraphSample g(n, n_max, cx, ca);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> node_cls(0, static_cast<int>(cx) - 1);
  std::uniform_int_distribution<int> edge_cls(1, static_cast<int>(ca) - 1);
  for (std::size_t i = 0; i < n; ++i) g.set_node_class(i, node_cls(rng));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (u(rng) < density) g.set_edge(i, j, edge_cls(rng));
    }
  }
  return g;
}

// Node i of g becomes node perm[i] of the result.
inline GraphSample permute_graph(const GraphSample& g, const std::vector<std::size_t>& perm) {
  GraphSample out(0, g.n_max(), g.node_categories(), g.edge_categories());
  for (std::size_t i = 0; i < g.n_max(); ++i) {
    if (!g.active(i)) continue;
    out.set_active(perm[i], true);
    out.set_node_class(perm[i], g.node_class(i));
  }
  for (std::size_t i = 0; i < g.n_max(); ++i) {
    for (std::size_t j = i + 1; j < g.n_max(); ++j) {
      if (g.active(i) && g.active(j)) out.set_edge(perm[i], perm[j], g.edge(i, j));
    }
  }
  return out;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace testing
