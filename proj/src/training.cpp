#include "graphbsi/training.hpp"

#include <cmath>
#include <string>

#include "graphbsi/error.hpp"

namespace graphbsi {

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be >= 0");
  if (steps < 1) throw ConfigError("train.steps must be >= 1");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (!(clip >= 0.0)) throw ConfigError("train.clip must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must be in [0, 1)");
  if (!(node_weight >= 0.0) || !(edge_weight >= 0.0)) {
    throw ConfigError("train channel weights must be >= 0");
  }
}

namespace {

double masked_sq_error(const Matrix& pred, const Matrix& x, ActiveMask active) {
  double sum = 0.0;
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    if (!is_active(active, r)) continue;
    for (std::size_t k = 0; k < pred.cols(); ++k) {
      const double d = pred(r, k) - x(r, k);
      sum += d * d;
    }
  }
  return sum;
}

}  // namespace

namespace {

// z ~ q(z | x, t) for both channels, keyed like the training loss.
struct EncodedGraph {
  Matrix xn, xe;
  std::vector<std::uint8_t> emask;
  std::array<ChannelBelief, 2> channels;
};

EncodedGraph encode_graph(const PrecisionSchedule& node_schedule,
                          const PrecisionSchedule& edge_schedule, const GraphSample& x, double t,
                          const NoiseSource& noise, std::uint64_t draw,
                          std::span<const std::uint64_t> node_ids) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("loss: t outside [0, 1]");
  const std::size_t n_max = x.n_max();
  EncodedGraph g;
  g.xn = x.node_targets();
  g.xe = x.edge_targets();
  g.emask = edge_mask(x.mask());
  auto& [nodes, edges] = g.channels;
  nodes.active = x.mask();
  edges.active = g.emask;
  nodes.keys = node_stream_keys(n_max, node_ids);
  edges.keys = edge_stream_keys(n_max, node_ids);
  nodes.state = encode_marginal(node_schedule, g.xn, t,
                                RowStreams{&noise, StreamTag::kTrainNoise, draw, 0, nodes.keys}, nodes.active);
  edges.state = encode_marginal(edge_schedule, g.xe, t,
                                RowStreams{&noise, StreamTag::kTrainNoise, draw, 1, edges.keys}, edges.active);
  return g;
}

}  // namespace

LossResult loss(const ReconNet& net, const PrecisionSchedule& node_schedule,
                const PrecisionSchedule& edge_schedule, const GraphSample& x, double t,
                const NoiseSource& noise, std::uint64_t draw, double node_weight,
                double edge_weight, std::span<const std::uint64_t> node_ids) {
  const EncodedGraph g = encode_graph(node_schedule, edge_schedule, x, t, noise, draw, node_ids);
  ForwardPass pass = net.record(g.channels[0].state.logits, g.channels[1].state.logits, x.mask(), t);
  const Matrix& pn = pass.predictions.nodes;
  const Matrix& pe = pass.predictions.edges;
  const double wn = node_weight * node_schedule.beta_prime(t);
  const double we = edge_weight * edge_schedule.beta_prime(t);

  LossResult out;
  out.value = 0.5 * wn * masked_sq_error(pn, g.xn, x.mask()) + 0.5 * we * masked_sq_error(pe, g.xe, g.emask);

  // d/dp of w/2 ||p - x||^2 is w (p - x); inactive rows are dropped by backward().
  Matrix gn(pn.rows(), pn.cols()), ge(pe.rows(), pe.cols());
  for (std::size_t i = 0; i < gn.size(); ++i) gn.data()[i] = wn * (pn.data()[i] - g.xn.data()[i]);
  for (std::size_t i = 0; i < ge.size(); ++i) ge.data()[i] = we * (pe.data()[i] - g.xe.data()[i]);
  out.grads = net.backward(pass, gn, ge);
  return out;
}

double loss_value(const Reconstructor& f, const PrecisionSchedule& node_schedule,
                  const PrecisionSchedule& edge_schedule, const GraphSample& x, double t,
                  const NoiseSource& noise, std::uint64_t draw, double node_weight,
                  double edge_weight, std::span<const std::uint64_t> node_ids) {
  const EncodedGraph g = encode_graph(node_schedule, edge_schedule, x, t, noise, draw, node_ids);
  std::vector<Matrix> preds(2);
  f.predict(g.channels, t, preds);
  return 0.5 * node_weight * node_schedule.beta_prime(t) * masked_sq_error(preds[0], g.xn, x.mask()) +
         0.5 * edge_weight * edge_schedule.beta_prime(t) * masked_sq_error(preds[1], g.xe, g.emask);
}

ElboEstimate elbo_discrete(const Reconstructor& f, const PrecisionSchedule& node_schedule,
                           const PrecisionSchedule& edge_schedule, const GraphSample& x, int k,
                           int n_mc, const NoiseSource& noise) {
  if (k < 1) throw DomainError("elbo_discrete: k must be >= 1");
  if (n_mc < 1) throw DomainError("elbo_discrete: n_mc must be >= 1");
  const std::size_t n_max = x.n_max();
  const std::array<const PrecisionSchedule*, 2> schedules{&node_schedule, &edge_schedule};
  const std::array<Matrix, 2> targets{x.node_targets(), x.edge_targets()};

  std::array<ChannelBelief, 2> channels;
  channels[0].active = x.mask();
  channels[1].active = edge_mask(x.mask());
  channels[0].keys = node_stream_keys(n_max, {});
  channels[1].keys = edge_stream_keys(n_max, {});

  auto encode = [&](double t, std::uint64_t step) {
    for (std::size_t c = 0; c < 2; ++c) {
      const RowStreams streams{&noise, StreamTag::kElbo, step, c, channels[c].keys};
      channels[c].state = encode_marginal(*schedules[c], targets[c], t, streams, channels[c].active);
    }
  };

  ElboEstimate est;
  std::vector<Matrix> preds(2);
  const auto draws = static_cast<std::uint64_t>(n_mc);
  for (int i = 0; i < k; ++i) {
    const double t = static_cast<double>(i) / k;
    const double t_next = static_cast<double>(i + 1) / k;
    for (std::uint64_t m = 0; m < draws; ++m) {
      encode(t, static_cast<std::uint64_t>(i) * draws + m);
      f.predict(channels, t, preds);
      for (std::size_t c = 0; c < 2; ++c) {
        const double alpha = schedules[c]->alpha(t, t_next);
        est.kl += 0.5 * alpha * masked_sq_error(preds[c], targets[c], channels[c].active) /
                  static_cast<double>(n_mc);
      }
    }
  }
  for (std::uint64_t m = 0; m < draws; ++m) {
    encode(1.0, static_cast<std::uint64_t>(k) * draws + m);
    for (std::size_t c = 0; c < 2; ++c) {
      const Matrix p = softmax_rows(channels[c].state.logits);
      for (std::size_t r = 0; r < p.rows(); ++r) {
        if (!is_active(channels[c].active, r)) continue;
        for (std::size_t j = 0; j < p.cols(); ++j) {
          if (targets[c](r, j) == 1.0) est.reconstruction += std::log(p(r, j)) / static_cast<double>(n_mc);
        }
      }
    }
  }
  est.bound = est.reconstruction - est.kl;
  return est;
}

TrainResult train(ReconNet& net, std::span<const GraphSample> dataset,
                  const PrecisionSchedule& node_schedule, const PrecisionSchedule& edge_schedule,
                  const TrainConfig& config, const TrainObserver& observer) {
  config.validate();
  if (dataset.empty()) throw DomainError("train: dataset is empty");
  const NoiseSource noise(config.seed);
  auto& params = net.parameters();
  std::vector<Matrix> velocity;
  for (const auto& p : params) velocity.emplace_back(p.rows(), p.cols());

  TrainResult result;
  result.losses.reserve(config.steps);
  const auto batch = static_cast<std::uint64_t>(config.batch);
  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<Matrix> grads;
    double batch_loss = 0.0;
    for (std::uint64_t b = 0; b < batch; ++b) {
      auto pick = noise.stream(StreamTag::kTrainPick, step, b);
      const auto idx = std::min(static_cast<std::size_t>(pick.uniform() * static_cast<double>(dataset.size())),
                                dataset.size() - 1);
      const double t = noise.stream(StreamTag::kTrainTime, step, b).uniform();
      LossResult r = loss(net, node_schedule, edge_schedule, dataset[idx], t, noise,
                          static_cast<std::uint64_t>(step) * batch + b, config.node_weight,
                          config.edge_weight);
      batch_loss += r.value;
      if (grads.empty()) {
        grads = std::move(r.grads);
      } else {
        for (std::size_t p = 0; p < grads.size(); ++p) {
          for (std::size_t i = 0; i < grads[p].size(); ++i) grads[p].data()[i] += r.grads[p].data()[i];
        }
      }
    }
    const double inv = 1.0 / static_cast<double>(config.batch);
    batch_loss *= inv;
    double norm_sq = 0.0;
    for (auto& g : grads) {
      for (double& v : g.values()) {
        v *= inv;
        norm_sq += v * v;
      }
    }
    if (!std::isfinite(batch_loss) || !std::isfinite(norm_sq)) {
      throw NumericalError("training diverged at step " + std::to_string(step) +
                           ": non-finite loss or gradient");
    }
    const double norm = std::sqrt(norm_sq);
    const double scale = (config.clip > 0.0 && norm > config.clip) ? config.clip / norm : 1.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& v = velocity[p];
      auto& w = params[p];
      for (std::size_t i = 0; i < w.size(); ++i) {
        v.data()[i] = config.momentum * v.data()[i] + scale * grads[p].data()[i];
        w.data()[i] -= config.lr * v.data()[i];
      }
    }
    result.losses.push_back(batch_loss);
    if (observer) observer(step, batch_loss);
  }
  return result;
}

}  // namespace graphbsi
