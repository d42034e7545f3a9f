#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphbsi/matrix.hpp"
#include "graphbsi/rng.hpp"
#include "graphbsi/schedule.hpp"

namespace graphbsi {

// Logits z over c categories for n independent components, at time t.
struct BeliefState {
  Matrix logits;
  double t = 0.0;

  std::size_t components() const noexcept { return logits.rows(); }
  std::size_t categories() const noexcept { return logits.cols(); }
};

// One class per component. The one-hot tensor is materialized on demand, so
// the "exactly one 1 per row" invariant holds by construction.
class CategoricalSample {
 public:
  CategoricalSample() = default;
  CategoricalSample(std::vector<int> classes, std::size_t categories);

  // Throws DomainError unless every row is a one-hot vector.
  static CategoricalSample from_onehot(const Matrix& onehot);

  const std::vector<int>& classes() const noexcept { return classes_; }
  std::size_t components() const noexcept { return classes_.size(); }
  std::size_t categories() const noexcept { return categories_; }
  int operator[](std::size_t i) const { return classes_[i]; }

  Matrix onehot() const;

  bool operator==(const CategoricalSample&) const = default;

 private:
  std::vector<int> classes_;
  std::size_t categories_ = 0;
};

// Noisy observation y ~ N(x, precision^-1 I).
struct Measurement {
  Matrix y;
  double precision = 0.0;
};

// Addresses one counter-based stream per row: (tag, step, channel, key(row)).
// Keys default to the row index; explicit keys let callers permute components
// together with their randomness.
struct RowStreams {
  const NoiseSource* source = nullptr;
  StreamTag tag = StreamTag::kStep;
  std::uint64_t step = 0;
  std::uint64_t channel = 0;
  std::span<const std::uint64_t> keys = {};

  std::uint64_t key(std::size_t row) const { return keys.empty() ? row : keys[row]; }
  CounterRng at(std::size_t row) const { return source->stream(tag, step, channel, key(row)); }
};

// Rows flagged 0 in an activity mask are never read for randomness or written.
using ActiveMask = std::span<const std::uint8_t>;
inline bool is_active(ActiveMask mask, std::size_t row) { return mask.empty() || mask[row] != 0; }

// z0 ~ N(mu0, beta0 I) per row; t = 0.
BeliefState sample_prior(const PrecisionSchedule& schedule, std::size_t n_components,
                         const RowStreams& streams);

// z_post = z + alpha * y.
BeliefState bayes_update(const BeliefState& z, const Measurement& m);

// y ~ N(mean, alpha^-1 I), row-wise streams. Inactive rows get y = mean.
Measurement sample_measurement(const Matrix& mean, double alpha, const RowStreams& streams,
                               ActiveMask active = {});

// Closed-form q(z | x, t) = N(mu0 + beta(t) x, (beta0 + beta(t)) I).
BeliefState encode_marginal(const PrecisionSchedule& schedule, const Matrix& x, double t,
                            const RowStreams& streams, ActiveMask active = {});
BeliefState encode_marginal(const PrecisionSchedule& schedule, const CategoricalSample& x, double t,
                            const RowStreams& streams);

// Approximate score (mu0 + beta(t) x_hat - z) / (beta(t) + beta0), at t = z.t.
Matrix score(const PrecisionSchedule& schedule, const BeliefState& z, const Matrix& x_hat);

// Weight lambda(t) = beta'(t) (beta(t) + beta0)^2 / beta(t)^2 under which
// score matching reproduces the reconstruction loss; t must be in (0, 1].
double score_matching_weight(const PrecisionSchedule& schedule, double t);
// lambda(t) / 2 * ||score(z, x_hat) - grad log q(z | x, t)||^2, both scores
// taken at z.t.
double score_matching_term(const PrecisionSchedule& schedule, const BeliefState& z,
                           const Matrix& x_hat, const Matrix& x);
// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);
Matrix posterior_pmf(const BeliefState& z);

// Row-wise Shannon entropy (nats) of a probability matrix.
std::vector<double> row_entropy(const Matrix& probabilities);

// Row-wise argmax; ties resolve to the lowest index.
CategoricalSample quantize(const Matrix& scores);

// One draw from Cat(softmax(logits)) per row.
CategoricalSample sample_categorical(const Matrix& logits, const RowStreams& streams,
                                     ActiveMask active = {});

}  // namespace graphbsi
