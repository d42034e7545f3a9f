#pragma once

// Minimal reverse-mode differentiation over dense matrices. A Tape records
// operations in creation order, which is already a topological order, so the
// backward sweep is a single reverse pass.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <vector>

#include "graphbsi/matrix.hpp"

namespace graphbsi::ad {

struct Var {
  std::size_t id;
};

class Tape {
 public:
  // Leaf that never receives a gradient.
  Var constant(Matrix value);
  // Leaf whose gradient is reported under `param_index` by parameter_grads().
  Var parameter(const Matrix& value, std::size_t param_index);

  Var matmul(Var a, Var w);     // [n x k] . [k x m]
  Var add_row(Var a, Var bias);  // a + broadcast of a [1 x m] row
  Var add(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var relu(Var a);
  Var concat_cols(std::initializer_list<Var> parts);
  // out.row(i) = a.row(index[i]); gradients scatter-add back.
  Var gather_rows(Var a, std::vector<std::size_t> index);
  // out.row(s) = mean of a.rows [offsets[s], offsets[s+1]); empty segments give 0.
  Var segment_mean(Var a, std::vector<std::size_t> offsets);
  Var softmax_rows(Var a);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }

  // Adds `upstream` to the gradient of `v`. Call before backward().
  void seed(Var v, const Matrix& upstream);
  void backward();

  // (param_index, gradient) for every parameter leaf reached by backward().
  std::vector<std::pair<std::size_t, const Matrix*>> parameter_grads() const;

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // allocated lazily
    bool needs_grad = false;
    std::optional<std::size_t> param_index;
    std::function<void(Tape&, const Node&)> back;
  };

  Var push(Matrix value, bool needs_grad, std::function<void(Tape&, const Node&)> back);
  Matrix& grad_of(std::size_t id);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }

  std::vector<Node> nodes_;
};

}  // namespace graphbsi::ad
