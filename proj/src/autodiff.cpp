#include "graphbsi/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "graphbsi/error.hpp"

namespace graphbsi::ad {

Var Tape::push(Matrix value, bool needs_grad, std::function<void(Tape&, const Node&)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Matrix& Tape::grad_of(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(const Matrix& value, std::size_t param_index) {
  Var v = push(value, true, nullptr);
  nodes_[v.id].param_index = param_index;
  return v;
}

Var Tape::matmul(Var a, Var w) {
  const Matrix& A = value(a);
  const Matrix& W = value(w);
  if (A.cols() != W.rows()) throw DomainError("matmul: inner dimensions differ");
  const std::size_t n = A.rows(), k = A.cols(), m = W.cols();
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double a_ip = A(i, p);
      if (a_ip == 0.0) continue;
      const double* wr = W.row(p).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += a_ip * wr[j];
    }
  }
  return push(std::move(out), needs(a) || needs(w), [a, w, n, k, m](Tape& tape, const Node& self) {
    const Matrix& G = self.grad;
    if (tape.needs(a)) {
      const Matrix& W = tape.value(w);
      Matrix& ga = tape.grad_of(a.id);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += G(i, j) * W(p, j);
          ga(i, p) += acc;
        }
      }
    }
    if (tape.needs(w)) {
      const Matrix& A = tape.value(a);
      Matrix& gw = tape.grad_of(w.id);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double a_ip = A(i, p);
          if (a_ip == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) gw(p, j) += a_ip * G(i, j);
        }
      }
    }
  });
}

Var Tape::add_row(Var a, Var bias) {
  const Matrix& A = value(a);
  const Matrix& B = value(bias);
  if (B.rows() != 1 || B.cols() != A.cols()) throw DomainError("add_row: bias shape mismatch");
  Matrix out = A;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += B(0, j);
  }
  return push(std::move(out), needs(a) || needs(bias), [a, bias](Tape& tape, const Node& self) {
    const Matrix& G = self.grad;
    if (tape.needs(a)) {
      Matrix& ga = tape.grad_of(a.id);
      for (std::size_t i = 0; i < G.size(); ++i) ga.data()[i] += G.data()[i];
    }
    if (tape.needs(bias)) {
      Matrix& gb = tape.grad_of(bias.id);
      for (std::size_t i = 0; i < G.rows(); ++i) {
        for (std::size_t j = 0; j < G.cols(); ++j) gb(0, j) += G(i, j);
      }
    }
  });
}

Var Tape::add(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (!A.same_shape(B)) throw DomainError("add: shape mismatch");
  Matrix out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += B.data()[i];
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& tape, const Node& self) {
    for (Var v : {a, b}) {
      if (!tape.needs(v)) continue;
      Matrix& g = tape.grad_of(v.id);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += self.grad.data()[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (!A.same_shape(B)) throw DomainError("mul: shape mismatch");
  Matrix out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= B.data()[i];
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& tape, const Node& self) {
    if (tape.needs(a)) {
      Matrix& g = tape.grad_of(a.id);
      const Matrix& B = tape.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += self.grad.data()[i] * B.data()[i];
    }
    if (tape.needs(b)) {
      Matrix& g = tape.grad_of(b.id);
      const Matrix& A = tape.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += self.grad.data()[i] * A.data()[i];
    }
  });
}

Var Tape::relu(Var a) {
  Matrix out = value(a);
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), needs(a), [a](Tape& tape, const Node& self) {
    Matrix& g = tape.grad_of(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (self.value.data()[i] > 0.0) g.data()[i] += self.grad.data()[i];
    }
  });
}

Var Tape::concat_cols(std::initializer_list<Var> parts) {
  std::vector<Var> vars(parts);
  if (vars.empty()) throw DomainError("concat_cols: nothing to concatenate");
  const std::size_t rows = value(vars.front()).rows();
  std::size_t cols = 0;
  bool any_grad = false;
  for (Var v : vars) {
    if (value(v).rows() != rows) throw DomainError("concat_cols: row count mismatch");
    cols += value(v).cols();
    any_grad = any_grad || needs(v);
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (Var v : vars) {
    const Matrix& p = value(v);
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy(p.row(i).begin(), p.row(i).end(), out.row(i).begin() + static_cast<long>(offset));
    }
    offset += p.cols();
  }
  return push(std::move(out), any_grad, [vars](Tape& tape, const Node& self) {
    std::size_t off = 0;
    for (Var v : vars) {
      const std::size_t c = tape.value(v).cols();
      if (tape.needs(v)) {
        Matrix& g = tape.grad_of(v.id);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < c; ++j) g(i, j) += self.grad(i, off + j);
        }
      }
      off += c;
    }
  });
}

Var Tape::gather_rows(Var a, std::vector<std::size_t> index) {
  const Matrix& A = value(a);
  Matrix out(index.size(), A.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= A.rows()) throw DomainError("gather_rows: index out of range");
    std::copy(A.row(index[i]).begin(), A.row(index[i]).end(), out.row(i).begin());
  }
  return push(std::move(out), needs(a), [a, index = std::move(index)](Tape& tape, const Node& self) {
    Matrix& g = tape.grad_of(a.id);
    for (std::size_t i = 0; i < index.size(); ++i) {
      auto dst = g.row(index[i]);
      auto src = self.grad.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

Var Tape::segment_mean(Var a, std::vector<std::size_t> offsets) {
  const Matrix& A = value(a);
  if (offsets.empty() || offsets.back() != A.rows()) {
    throw DomainError("segment_mean: offsets must end at the row count");
  }
  const std::size_t segments = offsets.size() - 1;
  Matrix out(segments, A.cols());
  for (std::size_t s = 0; s < segments; ++s) {
    const std::size_t lo = offsets[s], hi = offsets[s + 1];
    if (hi == lo) continue;
    auto o = out.row(s);
    for (std::size_t r = lo; r < hi; ++r) {
      auto in = A.row(r);
      for (std::size_t j = 0; j < o.size(); ++j) o[j] += in[j];
    }
    const double inv = 1.0 / static_cast<double>(hi - lo);
    for (double& v : o) v *= inv;
  }
  return push(std::move(out), needs(a), [a, offsets = std::move(offsets)](Tape& tape, const Node& self) {
    Matrix& g = tape.grad_of(a.id);
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      const std::size_t lo = offsets[s], hi = offsets[s + 1];
      if (hi == lo) continue;
      const double inv = 1.0 / static_cast<double>(hi - lo);
      auto src = self.grad.row(s);
      for (std::size_t r = lo; r < hi; ++r) {
        auto dst = g.row(r);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += inv * src[j];
      }
    }
  });
}

Var Tape::softmax_rows(Var a) {
  const Matrix& A = value(a);
  Matrix out(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    auto in = A.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) sum += (o[j] = std::exp(in[j] - mx));
    for (double& v : o) v /= sum;
  }
  return push(std::move(out), needs(a), [a](Tape& tape, const Node& self) {
    Matrix& g = tape.grad_of(a.id);
    for (std::size_t i = 0; i < self.value.rows(); ++i) {
      auto p = self.value.row(i);
      auto up = self.grad.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * up[j];
      auto dst = g.row(i);
      for (std::size_t j = 0; j < p.size(); ++j) dst[j] += p[j] * (up[j] - dot);
    }
  });
}

void Tape::seed(Var v, const Matrix& upstream) {
  if (!value(v).same_shape(upstream)) throw DomainError("seed: gradient shape mismatch");
  Matrix& g = grad_of(v.id);
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += upstream.data()[i];
}

void Tape::backward() {
  for (std::size_t id = nodes_.size(); id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || !n.back || n.grad.empty()) continue;
    n.back(*this, n);
  }
}

std::vector<std::pair<std::size_t, const Matrix*>> Tape::parameter_grads() const {
  std::vector<std::pair<std::size_t, const Matrix*>> out;
  for (const Node& n : nodes_) {
    if (n.param_index && !n.grad.empty()) out.emplace_back(*n.param_index, &n.grad);
  }
  return out;
}

}  // namespace graphbsi::ad
