#include "graphbsi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graphbsi/error.hpp"

namespace graphbsi {

namespace {

// Active subgraph relabeled to 0..n-1.
struct Compact {
  std::size_t n = 0;
  std::vector<int> cls;
  std::vector<int> adj;  // n * n edge categories
  std::vector<std::size_t> deg;

  int at(std::size_t i, std::size_t j) const { return adj[i * n + j]; }
};

Compact compact(const GraphSample& g) {
  Compact c;
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < g.n_max(); ++i) {
    if (g.active(i)) ids.push_back(i);
  }
  c.n = ids.size();
  if (c.n > kMaxIsomorphismNodes) throw DomainError("isomorphism: graph exceeds the node limit");
  c.adj.assign(c.n * c.n, 0);
  c.deg.assign(c.n, 0);
  for (std::size_t a = 0; a < c.n; ++a) {
    c.cls.push_back(g.node_class(ids[a]));
    for (std::size_t b = 0; b < c.n; ++b) {
      if (a == b) continue;
      c.adj[a * c.n + b] = g.edge(ids[a], ids[b]);
      if (c.adj[a * c.n + b] != 0) ++c.deg[a];
    }
  }
  return c;
}

// Per-node key that any isomorphism must preserve: class, degree, and the
// sorted multiset of incident edge categories.
std::vector<std::vector<int>> node_keys(const Compact& c) {
  std::vector<std::vector<int>> keys(c.n);
  for (std::size_t i = 0; i < c.n; ++i) {
    keys[i] = {c.cls[i], static_cast<int>(c.deg[i])};
    std::vector<int> inc;
    for (std::size_t j = 0; j < c.n; ++j) {
      if (c.at(i, j) != 0) inc.push_back(c.at(i, j));
    }
    std::sort(inc.begin(), inc.end());
    keys[i].insert(keys[i].end(), inc.begin(), inc.end());
  }
  return keys;
}

class Matcher {
 public:
  Matcher(const Compact& a, const Compact& b) : a_(a), b_(b), ka_(node_keys(a)), kb_(node_keys(b)) {
    order_.resize(a.n);
    std::iota(order_.begin(), order_.end(), 0);
    // Place high-degree nodes first, then prefer nodes adjacent to earlier ones.
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t x, std::size_t y) { return a.deg[x] > a.deg[y]; });
    for (std::size_t k = 1; k < order_.size(); ++k) {
      auto best = order_.begin() + static_cast<long>(k);
      for (auto it = best; it != order_.end(); ++it) {
        if (linked(*it, k) > linked(*best, k)) best = it;
      }
      std::iter_swap(order_.begin() + static_cast<long>(k), best);
    }
    map_.assign(a.n, a.n);
    used_.assign(b.n, 0);
  }

  bool run() {
    auto sa = ka_, sb = kb_;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return sa == sb && extend(0);
  }

 private:
  std::size_t linked(std::size_t v, std::size_t placed) const {
    std::size_t count = 0;
    for (std::size_t k = 0; k < placed; ++k) count += a_.at(v, order_[k]) != 0 ? 1 : 0;
    return count;
  }

  bool extend(std::size_t depth) {
    if (depth == a_.n) return true;
    const std::size_t u = order_[depth];
    for (std::size_t v = 0; v < b_.n; ++v) {
      if (used_[v] || ka_[u] != kb_[v]) continue;
      bool ok = true;
      for (std::size_t k = 0; k < depth && ok; ++k) {
        const std::size_t w = order_[k];
        ok = a_.at(u, w) == b_.at(v, map_[w]);
      }
      if (!ok) continue;
      map_[u] = v;
      used_[v] = 1;
      if (extend(depth + 1)) return true;
      used_[v] = 0;
    }
    map_[u] = a_.n;
    return false;
  }

  const Compact& a_;
  const Compact& b_;
  std::vector<std::vector<int>> ka_, kb_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> map_;
  std::vector<std::uint8_t> used_;
};

}  // namespace

bool isomorphic(const GraphSample& a, const GraphSample& b) {
  const Compact ca = compact(a), cb = compact(b);
  if (ca.n != cb.n) return false;
  return Matcher(ca, cb).run();
}

std::vector<double> degree_histogram(std::span<const GraphSample> graphs) {
  std::vector<double> hist;
  double total = 0.0;
  for (const GraphSample& g : graphs) {
    for (std::size_t i = 0; i < g.n_max(); ++i) {
      if (!g.active(i)) continue;
      const std::size_t d = g.degree(i);
      if (hist.size() <= d) hist.resize(d + 1, 0.0);
      hist[d] += 1.0;
      total += 1.0;
    }
  }
  if (total > 0.0) {
    for (double& h : hist) h /= total;
  }
  return hist;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  const std::size_t n = std::max(p.size(), q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    sum += std::abs(a - b);
  }
  return 0.5 * sum;
}

Metrics evaluate(std::span<const GraphSample> samples, std::span<const GraphSample> train,
                 const std::function<bool(const GraphSample&)>& valid) {
  if (samples.empty()) throw DomainError("evaluate: no samples");
  Metrics m;
  std::size_t n_valid = 0, n_novel = 0;
  std::vector<const GraphSample*> classes;
  for (const GraphSample& s : samples) {
    if (valid(s)) ++n_valid;
    if (std::none_of(classes.begin(), classes.end(),
                     [&](const GraphSample* c) { return isomorphic(s, *c); })) {
      classes.push_back(&s);
    }
    if (std::none_of(train.begin(), train.end(),
                     [&](const GraphSample& t) { return isomorphic(s, t); })) {
      ++n_novel;
    }
  }
  const auto count = static_cast<double>(samples.size());
  m.validity = static_cast<double>(n_valid) / count;
  m.uniqueness = static_cast<double>(classes.size()) / count;
  m.novelty = static_cast<double>(n_novel) / count;
  m.degree_hist_tv = total_variation(degree_histogram(samples), degree_histogram(train));
  return m;
}

}  // namespace graphbsi
