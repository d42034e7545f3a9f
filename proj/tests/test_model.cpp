#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "graphbsi/autodiff.hpp"
#include "graphbsi/error.hpp"
#include "graphbsi/model.hpp"
#include "support.hpp"

using namespace graphbsi;
using testing::random_matrix;

namespace {

// Central-difference check of d(sum(out * weights))/d(input) for a tape
// expression built by `build` from a single parameter matrix.
template <class Build>
void check_op_gradient(const Matrix& input, Build build, double tol = 1e-7) {
  std::mt19937_64 rng(99);
  ad::Tape tape;
  ad::Var x = tape.parameter(input, 0);
  ad::Var y = build(tape, x);
  const Matrix weights = random_matrix(rng, tape.value(y).rows(), tape.value(y).cols());
  tape.seed(y, weights);
  tape.backward();
  const auto grads = tape.parameter_grads();
  REQUIRE(grads.size() == 1);
  const Matrix analytic = *grads[0].second;

  auto objective = [&](const Matrix& m) {
    ad::Tape t;
    ad::Var v = build(t, t.constant(m));
    double s = 0.0;
    const Matrix& out = t.value(v);
    for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * weights.data()[i];
    return s;
  };
  const double h = 1e-6;
  for (std::size_t i = 0; i < input.size(); ++i) {
    Matrix plus = input, minus = input;
    plus.data()[i] += h;
    minus.data()[i] -= h;
    const double fd = (objective(plus) - objective(minus)) / (2 * h);
    CHECK(std::abs(fd - analytic.data()[i]) < tol * (1.0 + std::abs(fd)));
  }
}

struct NetInputs {
  Matrix nodes, edges;
  std::vector<std::uint8_t> mask;
};

NetInputs random_inputs(std::mt19937_64& rng, const NetConfig& c, std::size_t n_max, std::size_t n_active) {
  NetInputs in{random_matrix(rng, n_max, c.node_categories, 2.0),
               random_matrix(rng, pair_count(n_max), c.edge_categories, 2.0),
               std::vector<std::uint8_t>(n_max, 0)};
  for (std::size_t i = 0; i < n_active; ++i) in.mask[i] = 1;
  return in;
}

void randomize(ReconNet& net, std::mt19937_64& rng, double sd = 0.5) {
  std::normal_distribution<double> n(0.0, sd);
  for (auto& p : net.parameters()) {
    for (double& v : p.values()) v = n(rng);
  }
}

NetConfig small_config() {
  NetConfig c;
  c.node_categories = 3;
  c.edge_categories = 2;
  c.hidden = 6;
  c.layers = 2;
  c.freqs = 3;
  return c;
}

}  // namespace

TEST_CASE("tape operations have correct gradients") {
  std::mt19937_64 rng(1);
  const Matrix a = random_matrix(rng, 4, 3);
  const Matrix w = random_matrix(rng, 3, 2);
  const Matrix b = random_matrix(rng, 1, 3);
  check_op_gradient(a, [&](ad::Tape& t, ad::Var x) { return t.matmul(x, t.constant(w)); });
  check_op_gradient(w, [&](ad::Tape& t, ad::Var x) { return t.matmul(t.constant(a), x); });
  check_op_gradient(b, [&](ad::Tape& t, ad::Var x) { return t.add_row(t.constant(a), x); });
  check_op_gradient(a, [&](ad::Tape& t, ad::Var x) { return t.mul(x, t.add(x, t.constant(a))); });
  check_op_gradient(a, [&](ad::Tape& t, ad::Var x) { return t.relu(t.add_row(x, t.constant(b))); });
  check_op_gradient(a, [&](ad::Tape& t, ad::Var x) { return t.concat_cols({x, t.relu(x), x}); });
  check_op_gradient(a, [&](ad::Tape& t, ad::Var x) { return t.gather_rows(x, {3, 0, 0, 2}); });
  check_op_gradient(a, [&](ad::Tape& t, ad::Var x) { return t.segment_mean(x, {0, 1, 1, 4}); });
  check_op_gradient(a, [&](ad::Tape& t, ad::Var x) { return t.softmax_rows(t.mul(x, x)); });
}

TEST_CASE("tape rejects shape mismatches") {
  ad::Tape t;
  ad::Var a = t.constant(Matrix(2, 3));
  ad::Var b = t.constant(Matrix(2, 2));
  CHECK_THROWS_AS(t.matmul(a, b), DomainError);
  CHECK_THROWS_AS(t.add(a, b), DomainError);
  CHECK_THROWS_AS(t.add_row(a, b), DomainError);
  CHECK_THROWS_AS(t.gather_rows(a, {2}), DomainError);
  CHECK_THROWS_AS(t.segment_mean(a, {0, 1}), DomainError);
  CHECK(t.value(t.segment_mean(a, {0, 0, 2})).row(0)[0] == 0.0);
}

TEST_CASE("time embedding") {
  const auto e0 = time_embedding(0.0, 8);
  REQUIRE(e0.size() == 16);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(e0[k] == 0.0);
    CHECK(e0[8 + k] == 1.0);
  }
  CHECK(time_embedding(0.37, 8) == time_embedding(0.37, 8));
  // Distinct grid times map to distinct embeddings.
  std::vector<std::vector<double>> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(time_embedding(i / 100.0, 8));
  double closest = INFINITY;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < 16; ++k) d += (grid[i][k] - grid[j][k]) * (grid[i][k] - grid[j][k]);
      closest = std::min(closest, std::sqrt(d));
    }
  }
  CHECK(closest > 1e-3);
  CHECK_THROWS_AS(time_embedding(1.5, 8), DomainError);
}

TEST_CASE("feature pack layout") {
  Matrix z(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = 3.0;
  const std::vector<std::size_t> rows{1};
  const std::vector<double> temb{0.5, -0.5};
  const Matrix f = feature_pack(z, rows, temb);
  REQUIRE(f.cols() == 7);
  CHECK(f(0, 0) == -1.5);
  CHECK(f(0, 1) == 1.5);
  const double p1 = 1.0 / (1.0 + std::exp(-3.0));
  CHECK(f(0, 3) == doctest::Approx(p1));
  CHECK(f(0, 4) == doctest::Approx(-(p1 * std::log(p1) + (1 - p1) * std::log(1 - p1))));
  CHECK(f(0, 5) == 0.5);
}

TEST_CASE("zero-initialized heads predict softmax(z)") {
  std::mt19937_64 rng(2);
  const NetConfig c = small_config();
  const ReconNet net(c, NoiseSource(3));
  const auto in = random_inputs(rng, c, 5, 5);
  const Predictions p = net.forward(in.nodes, in.edges, in.mask, 0.4);
  CHECK(p.nodes == softmax_rows(in.nodes));
  CHECK(p.edges == softmax_rows(in.edges));
}

TEST_CASE("outputs lie on the simplex") {
  std::mt19937_64 rng(3);
  const NetConfig c = small_config();
  ReconNet net(c, NoiseSource(3));
  randomize(net, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = random_inputs(rng, c, 6, 1 + trial % 6);
    const Predictions p = net.forward(in.nodes, in.edges, in.mask, (trial % 11) / 10.0);
    for (const Matrix* m : {&p.nodes, &p.edges}) {
      for (std::size_t r = 0; r < m->rows(); ++r) {
        double s = 0.0;
        for (double v : m->row(r)) {
          CHECK(v >= 0.0);
          s += v;
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("permuting nodes permutes predictions") {
  std::mt19937_64 rng(4);
  const NetConfig c = small_config();
  ReconNet net(c, NoiseSource(5));
  randomize(net, rng);
  const std::size_t n = 6;
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_inputs(rng, c, n, n);
    const auto perm = testing::random_permutation(rng, n);
    NetInputs moved{Matrix(n, c.node_categories), Matrix(pair_count(n), c.edge_categories), in.mask};
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(in.nodes.row(i).begin(), in.nodes.row(i).end(), moved.nodes.row(perm[i]).begin());
      for (std::size_t j = i + 1; j < n; ++j) {
        const std::size_t a = std::min(perm[i], perm[j]), b = std::max(perm[i], perm[j]);
        auto src = in.edges.row(edge_index(i, j, n));
        std::copy(src.begin(), src.end(), moved.edges.row(edge_index(a, b, n)).begin());
      }
    }
    const double t = 0.5;
    const Predictions p = net.forward(in.nodes, in.edges, in.mask, t);
    const Predictions q = net.forward(moved.nodes, moved.edges, moved.mask, t);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < c.node_categories; ++k) {
        CHECK(std::abs(p.nodes(i, k) - q.nodes(perm[i], k)) < 1e-12);
      }
      for (std::size_t j = i + 1; j < n; ++j) {
        const std::size_t a = std::min(perm[i], perm[j]), b = std::max(perm[i], perm[j]);
        for (std::size_t k = 0; k < c.edge_categories; ++k) {
          CHECK(std::abs(p.edges(edge_index(i, j, n), k) - q.edges(edge_index(a, b, n), k)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("masked entries neither influence outputs nor receive gradient") {
  std::mt19937_64 rng(6);
  const NetConfig c = small_config();
  ReconNet net(c, NoiseSource(5));
  randomize(net, rng);
  const std::size_t n_max = 6, n = 4;
  auto in = random_inputs(rng, c, n_max, n);
  const Predictions before = net.forward(in.nodes, in.edges, in.mask, 0.3);
  // Scramble every masked node row and every edge row touching a masked node.
  for (std::size_t i = n; i < n_max; ++i) {
    for (double& v : in.nodes.row(i)) v = 1e3 * std::sin(double(i) + v);
    for (std::size_t j = 0; j < n_max; ++j) {
      if (j == i) continue;
      for (double& v : in.edges.row(edge_index(std::min(i, j), std::max(i, j), n_max))) v = -55.0;
    }
  }
  const Predictions after = net.forward(in.nodes, in.edges, in.mask, 0.3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < c.node_categories; ++k) CHECK(after.nodes(i, k) == before.nodes(i, k));
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t e = edge_index(i, j, n_max);
      for (std::size_t k = 0; k < c.edge_categories; ++k) CHECK(after.edges(e, k) == before.edges(e, k));
    }
  }
  // Upstream gradient placed only on masked rows yields zero parameter gradients.
  ForwardPass pass = net.record(in.nodes, in.edges, in.mask, 0.3);
  Matrix gn(n_max, c.node_categories), ge(pair_count(n_max), c.edge_categories);
  for (std::size_t i = n; i < n_max; ++i) gn(i, 0) = 1.0;
  ge(edge_index(0, n_max - 1, n_max), 1) = 1.0;
  for (const Matrix& g : net.backward(pass, gn, ge)) {
    for (double v : g.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("backward is linear in the upstream gradient") {
  std::mt19937_64 rng(7);
  const NetConfig c = small_config();
  ReconNet net(c, NoiseSource(5));
  randomize(net, rng);
  const auto in = random_inputs(rng, c, 5, 5);
  auto grads = [&](const Matrix& gn, const Matrix& ge) {
    ForwardPass pass = net.record(in.nodes, in.edges, in.mask, 0.6);
    return net.backward(pass, gn, ge);
  };
  const Matrix gn1 = random_matrix(rng, 5, 3), ge1 = random_matrix(rng, 10, 2);
  const Matrix gn2 = random_matrix(rng, 5, 3), ge2 = random_matrix(rng, 10, 2);
  Matrix gns = gn1, ges = ge1;
  for (std::size_t i = 0; i < gns.size(); ++i) gns.data()[i] += gn2.data()[i];
  for (std::size_t i = 0; i < ges.size(); ++i) ges.data()[i] += ge2.data()[i];
  const auto a = grads(gn1, ge1), b = grads(gn2, ge2), s = grads(gns, ges);
  for (std::size_t p = 0; p < a.size(); ++p) {
    for (std::size_t i = 0; i < a[p].size(); ++i) {
      CHECK(std::abs(a[p].data()[i] + b[p].data()[i] - s[p].data()[i]) < 1e-12 * (1 + std::abs(s[p].data()[i])));
    }
  }
  for (const Matrix& g : grads(Matrix(5, 3), Matrix(10, 2))) {
    for (double v : g.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("network gradient matches finite differences") {
  std::mt19937_64 rng(8);
  const NetConfig c = small_config();
  ReconNet net(c, NoiseSource(5));
  randomize(net, rng);
  const auto in = random_inputs(rng, c, 4, 4);
  const Matrix wn = random_matrix(rng, 4, 3), we = random_matrix(rng, 6, 2);
  auto objective = [&](const ReconNet& m) {
    const Predictions p = m.forward(in.nodes, in.edges, in.mask, 0.45);
    double s = 0.0;
    for (std::size_t i = 0; i < wn.size(); ++i) s += wn.data()[i] * p.nodes.data()[i];
    for (std::size_t i = 0; i < we.size(); ++i) s += we.data()[i] * p.edges.data()[i];
    return s;
  };
  ForwardPass pass = net.record(in.nodes, in.edges, in.mask, 0.45);
  const auto grads = net.backward(pass, wn, we);
  const double h = 1e-5;
  for (std::size_t p = 0; p < grads.size(); ++p) {
    for (std::size_t i = 0; i < grads[p].size(); i += 3) {
      ReconNet plus = net, minus = net;
      plus.parameters()[p].data()[i] += h;
      minus.parameters()[p].data()[i] -= h;
      const double fd = (objective(plus) - objective(minus)) / (2 * h);
      CHECK(std::abs(fd - grads[p].data()[i]) < 1e-6 * (1 + std::abs(fd)));
    }
  }
}

TEST_CASE("non-finite logits are rejected") {
  const NetConfig c = small_config();
  const ReconNet net(c, NoiseSource(5));
  Matrix nodes(3, 3), edges(3, 2);
  const std::vector<std::uint8_t> mask{1, 1, 1};
  nodes(1, 2) = std::nan("");
  CHECK_THROWS_AS(net.forward(nodes, edges, mask, 0.5), NumericalError);
  nodes(1, 2) = 0.0;
  edges(2, 0) = INFINITY;
  CHECK_THROWS_AS(net.forward(nodes, edges, mask, 0.5), NumericalError);
  CHECK_THROWS_AS(net.forward(Matrix(3, 2), Matrix(3, 2), mask, 0.5), DomainError);
}

TEST_CASE("single-node and empty-edge graphs run") {
  std::mt19937_64 rng(9);
  const NetConfig c = small_config();
  ReconNet net(c, NoiseSource(5));
  randomize(net, rng);
  const auto in = random_inputs(rng, c, 3, 1);
  const Predictions p = net.forward(in.nodes, in.edges, in.mask, 0.2);
  double s = 0.0;
  for (double v : p.nodes.row(0)) s += v;
  CHECK(s == doctest::Approx(1.0));
  const auto one = random_inputs(rng, c, 1, 1);
  CHECK_NOTHROW(net.forward(one.nodes, one.edges, one.mask, 0.2));
}

TEST_CASE("parameter shapes are validated") {
  const NetConfig c = small_config();
  const ReconNet net(c, NoiseSource(1));
  CHECK(net.scalar_count() > 0);
  auto params = net.parameters();
  CHECK_NOTHROW(ReconNet(c, params));
  params.back() = Matrix(2, 2);
  CHECK_THROWS_AS(ReconNet(c, params), DomainError);
  params.pop_back();
  CHECK_THROWS_AS(ReconNet(c, params), DomainError);
  NetConfig bad = c;
  bad.edge_categories = 1;
  CHECK_THROWS_AS(ReconNet(bad, NoiseSource(1)), ConfigError);
}
