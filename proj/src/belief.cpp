#include "graphbsi/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "graphbsi/error.hpp"

namespace graphbsi {

CategoricalSample::CategoricalSample(std::vector<int> classes, std::size_t categories)
    : classes_(std::move(classes)), categories_(categories) {
  for (int c : classes_) {
    if (c < 0 || static_cast<std::size_t>(c) >= categories_) {
      throw DomainError("class index " + std::to_string(c) + " outside [0, " +
                        std::to_string(categories_) + ")");
    }
  }
}

CategoricalSample CategoricalSample::from_onehot(const Matrix& onehot) {
  std::vector<int> classes(onehot.rows(), -1);
  for (std::size_t r = 0; r < onehot.rows(); ++r) {
    int hot = -1;
    for (std::size_t c = 0; c < onehot.cols(); ++c) {
      const double v = onehot(r, c);
      if (v == 1.0 && hot < 0) {
        hot = static_cast<int>(c);
      } else if (v != 0.0) {
        throw DomainError("row " + std::to_string(r) + " is not one-hot");
      }
    }
    if (hot < 0) throw DomainError("row " + std::to_string(r) + " is not one-hot");
    classes[r] = hot;
  }
  return CategoricalSample(std::move(classes), onehot.cols());
}

Matrix CategoricalSample::onehot() const {
  Matrix m(classes_.size(), categories_);
  for (std::size_t r = 0; r < classes_.size(); ++r) m(r, static_cast<std::size_t>(classes_[r])) = 1.0;
  return m;
}

BeliefState sample_prior(const PrecisionSchedule& schedule, std::size_t n_components,
                         const RowStreams& streams) {
  const std::size_t c = schedule.categories();
  const double sd = std::sqrt(schedule.beta0());
  BeliefState z{Matrix(n_components, c), 0.0};
  for (std::size_t r = 0; r < n_components; ++r) {
    auto rng = streams.at(r);
    auto row = z.logits.row(r);
    for (std::size_t k = 0; k < c; ++k) row[k] = schedule.mu0()[k] + sd * rng.normal();
  }
  return z;
}

BeliefState bayes_update(const BeliefState& z, const Measurement& m) {
  if (!z.logits.same_shape(m.y)) throw DomainError("bayes_update: shape mismatch");
  BeliefState out = z;
  auto dst = out.logits.values();
  auto y = m.y.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += m.precision * y[i];
  return out;
}

Measurement sample_measurement(const Matrix& mean, double alpha, const RowStreams& streams,
                               ActiveMask active) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw DomainError("measurement precision must be positive and finite");
  }
  Measurement m{mean, alpha};
  const double sd = 1.0 / std::sqrt(alpha);
  for (std::size_t r = 0; r < mean.rows(); ++r) {
    if (!is_active(active, r)) continue;
    auto rng = streams.at(r);
    for (double& v : m.y.row(r)) v += sd * rng.normal();
  }
  return m;
}

BeliefState encode_marginal(const PrecisionSchedule& schedule, const Matrix& x, double t,
                            const RowStreams& streams, ActiveMask active) {
  if (x.cols() != schedule.categories()) throw DomainError("encode_marginal: category mismatch");
  const double b = schedule.beta(t);
  const double sd = std::sqrt(schedule.beta0() + b);
  BeliefState z{Matrix(x.rows(), x.cols()), t};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = z.logits.row(r);
    if (!is_active(active, r)) {
      std::copy(schedule.mu0().begin(), schedule.mu0().end(), row.begin());
      continue;
    }
    auto rng = streams.at(r);
    for (std::size_t k = 0; k < x.cols(); ++k) {
      row[k] = schedule.mu0()[k] + b * x(r, k) + sd * rng.normal();
    }
  }
  return z;
}

BeliefState encode_marginal(const PrecisionSchedule& schedule, const CategoricalSample& x, double t,
                            const RowStreams& streams) {
  return encode_marginal(schedule, x.onehot(), t, streams);
}

Matrix score(const PrecisionSchedule& schedule, const BeliefState& z, const Matrix& x_hat) {
  if (!z.logits.same_shape(x_hat)) throw DomainError("score: shape mismatch");
  const double b = schedule.beta(z.t);
  const double denom = b + schedule.beta0();
  if (!(denom > 0.0)) {
    throw DomainError("score is singular: beta(t) + beta0 = 0 (beta0 = 0 at t = 0)");
  }
  Matrix s(x_hat.rows(), x_hat.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    for (std::size_t k = 0; k < s.cols(); ++k) {
      s(r, k) = (schedule.mu0()[k] + b * x_hat(r, k) - z.logits(r, k)) / denom;
    }
  }
  return s;
}

double score_matching_weight(const PrecisionSchedule& schedule, double t) {
  const double b = schedule.beta(t);
  if (!(b > 0.0)) throw DomainError("score matching weight is singular at beta(t) = 0");
  const double v = b + schedule.beta0();
  return schedule.beta_prime(t) * v * v / (b * b);
}

double score_matching_term(const PrecisionSchedule& schedule, const BeliefState& z,
                           const Matrix& x_hat, const Matrix& x) {
  const Matrix model = score(schedule, z, x_hat);
  const Matrix target = score(schedule, z, x);
  double sq = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const double d = model.data()[i] - target.data()[i];
    sq += d * d;
  }
  return 0.5 * score_matching_weight(schedule, z.t) * sq;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto out = p.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      out[k] = std::exp(in[k] - mx);
      sum += out[k];
    }
    for (double& v : out) v /= sum;
  }
  return p;
}

Matrix posterior_pmf(const BeliefState& z) { return softmax_rows(z.logits); }

std::vector<double> row_entropy(const Matrix& probabilities) {
  std::vector<double> h(probabilities.rows(), 0.0);
  for (std::size_t r = 0; r < probabilities.rows(); ++r) {
    for (double p : probabilities.row(r)) {
      if (p > 0.0) h[r] -= p * std::log(p);
    }
  }
  return h;
}

CategoricalSample quantize(const Matrix& scores) {
  std::vector<int> classes(scores.rows(), 0);
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto row = scores.row(r);
    classes[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return CategoricalSample(std::move(classes), scores.cols());
}

CategoricalSample sample_categorical(const Matrix& logits, const RowStreams& streams,
                                     ActiveMask active) {
  const Matrix p = softmax_rows(logits);
  std::vector<int> classes(p.rows(), 0);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    if (!is_active(active, r)) continue;
    auto rng = streams.at(r);
    const double u = rng.uniform();
    double acc = 0.0;
    int chosen = static_cast<int>(p.cols()) - 1;
    for (std::size_t k = 0; k < p.cols(); ++k) {
      acc += p(r, k);
      if (u < acc) {
        chosen = static_cast<int>(k);
        break;
      }
    }
    classes[r] = chosen;
  }
  return CategoricalSample(std::move(classes), p.cols());
}

}  // namespace graphbsi
