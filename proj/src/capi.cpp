#include "graphbsi/graphbsi.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include "graphbsi/checkpoint.hpp"
#include "graphbsi/config.hpp"
#include "graphbsi/dataset.hpp"
#include "graphbsi/error.hpp"
#include "graphbsi/generate.hpp"
#include "graphbsi/metrics.hpp"
#include "graphbsi/trajectories.hpp"

struct gbsi_config {
  graphbsi::RunConfig cfg;
};

struct gbsi_model {
  graphbsi::Checkpoint ckpt;
};

namespace {

using namespace graphbsi;

thread_local std::string g_last_error;

gbsi_status fail(gbsi_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
gbsi_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return GBSI_OK;
  } catch (const ParseError& e) {
    return fail(GBSI_ERR_PARSE, e.what());
  } catch (const ConfigError& e) {
    return fail(GBSI_ERR_CONFIG, e.what());
  } catch (const NumericalError& e) {
    return fail(GBSI_ERR_NUMERIC, e.what());
  } catch (const IoError& e) {
    return fail(GBSI_ERR_IO, e.what());
  } catch (const DomainError& e) {
    return fail(GBSI_ERR_DOMAIN, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GBSI_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GBSI_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GBSI_ERR_INTERNAL, "unknown error");
  }
}

#define GBSI_REQUIRE(ptr)                                                          \
  do {                                                                             \
    if (!(ptr)) return fail(GBSI_ERR_INVALID_ARGUMENT, #ptr " must not be null"); \
  } while (0)

PrecisionSchedule schedule_of(const gbsi_schedule_params& p, std::size_t categories = 1) {
  return PrecisionSchedule::with_uniform_prior(p.beta_start, p.beta_end, p.beta0, categories);
}

StabilityMethod method_of(gbsi_stability_method m) {
  switch (m) {
    case GBSI_STABILITY_SAMPLED_GRADIENT: return StabilityMethod::kSampledGradient;
    case GBSI_STABILITY_ANALYTIC: return StabilityMethod::kAnalytic;
    case GBSI_STABILITY_DENSE_GRID: return StabilityMethod::kDenseGrid;
  }
  throw ConfigError("unknown stability method");
}

SamplerConfig sampler_of(const gbsi_sampler_params& p) {
  if (!p.scheme) throw ConfigError("sampler scheme must be given");
  SamplerConfig c;
  c.scheme = parse_scheme(p.scheme);
  c.steps = p.steps;
  c.gamma = p.gamma;
  c.rho = p.rho;
  c.validate();
  return c;
}

double largest_step(const SamplerConfig& c) {
  const auto grid = time_grid(c.steps, c.rho);
  double dt = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) dt = std::max(dt, grid[i + 1] - grid[i]);
  return dt;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::vector<GraphSample> read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return read_graphs(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.what());
  }
}

}  // namespace

extern "C" {

const char* gbsi_last_error(void) { return g_last_error.c_str(); }

const char* gbsi_version(void) { return "1.0.0"; }

gbsi_status gbsi_schedule_beta(const gbsi_schedule_params* s, double t, double* out) {
  GBSI_REQUIRE(s);
  GBSI_REQUIRE(out);
  return guard([&] { *out = schedule_of(*s).beta(t); });
}

gbsi_status gbsi_schedule_beta_prime(const gbsi_schedule_params* s, double t, double* out) {
  GBSI_REQUIRE(s);
  GBSI_REQUIRE(out);
  return guard([&] { *out = schedule_of(*s).beta_prime(t); });
}

gbsi_status gbsi_min_stability_ratio(const gbsi_schedule_params* s, gbsi_stability_method method,
                                     double* out) {
  GBSI_REQUIRE(s);
  GBSI_REQUIRE(out);
  return guard([&] { *out = min_stability_ratio(schedule_of(*s), method_of(method)); });
}

gbsi_status gbsi_max_stable_gamma(const gbsi_schedule_params* s, double dt,
                                  gbsi_stability_method method, double* out) {
  GBSI_REQUIRE(s);
  GBSI_REQUIRE(out);
  return guard([&] { *out = max_stable_gamma(schedule_of(*s), dt, method_of(method)); });
}

gbsi_status gbsi_config_create(gbsi_config** out) {
  GBSI_REQUIRE(out);
  *out = nullptr;
  return guard([&] { *out = new gbsi_config{}; });
}

gbsi_status gbsi_config_load(const char* path, gbsi_config** out) {
  GBSI_REQUIRE(path);
  GBSI_REQUIRE(out);
  *out = nullptr;
  return guard([&] { *out = new gbsi_config{load_config(path)}; });
}

gbsi_status gbsi_config_set(gbsi_config* cfg, const char* key, const char* value) {
  GBSI_REQUIRE(cfg);
  GBSI_REQUIRE(key);
  GBSI_REQUIRE(value);
  return guard([&] { cfg->cfg.set(key, value); });
}

gbsi_status gbsi_config_get(const gbsi_config* cfg, const char* key, char* buf, size_t buf_len,
                            size_t* needed) {
  GBSI_REQUIRE(cfg);
  GBSI_REQUIRE(key);
  std::string value;
  const gbsi_status st = guard([&] { value = cfg->cfg.get(key); });
  if (st != GBSI_OK) return st;
  if (needed) *needed = value.size() + 1;
  if (!buf || buf_len < value.size() + 1) {
    return fail(GBSI_ERR_INVALID_ARGUMENT, "buffer too small for the value of '" + std::string(key) + "'");
  }
  std::memcpy(buf, value.c_str(), value.size() + 1);
  return GBSI_OK;
}

gbsi_status gbsi_config_validate(const gbsi_config* cfg) {
  GBSI_REQUIRE(cfg);
  return guard([&] { cfg->cfg.validate(); });
}

void gbsi_config_destroy(gbsi_config* cfg) { delete cfg; }

gbsi_status gbsi_train(const gbsi_config* cfg, const char* out_dir, gbsi_progress_fn progress,
                       void* user, double* final_loss) {
  GBSI_REQUIRE(cfg);
  GBSI_REQUIRE(out_dir);
  return guard([&] {
    const RunConfig& rc = cfg->cfg;
    rc.validate();
    const std::filesystem::path dir(out_dir);
    if (!std::filesystem::is_directory(dir)) {
      throw IoError("output directory '" + dir.string() + "' does not exist");
    }
    const Dataset data = generate_dataset(rc.data, NoiseSource(rc.data_seed));
    const PrecisionSchedule node = build_schedule(
        rc.node, node_class_marginals(data.graphs, data.node_categories));
    const PrecisionSchedule edge = build_schedule(
        rc.edge, edge_class_marginals(data.graphs, data.edge_categories));
    NetConfig net_cfg = rc.model;
    net_cfg.node_categories = data.node_categories;
    net_cfg.edge_categories = data.edge_categories;
    ReconNet net(net_cfg, NoiseSource(rc.train.seed));

    auto losses = open_out((dir / "losses.txt").string());
    losses.precision(17);
    const TrainResult result = train(net, data.graphs, node, edge, rc.train, [&](std::size_t step, double l) {
      losses << step + 1 << ',' << l << '\n';
      if (progress) progress(step + 1, l, user);
    });
    losses.close();
    if (!losses) throw IoError("failed writing losses.txt");

    const Checkpoint ckpt{net, node, edge, std::string(family_name(data.family)), data.node_counts};
    save_checkpoint((dir / "model.ckpt").string(), ckpt);
    auto graphs = open_out((dir / "train.graphs").string());
    write_graphs(graphs, data.graphs);
    if (!graphs) throw IoError("failed writing train.graphs");

    if (final_loss) {
      const std::size_t n = std::min<std::size_t>(100, result.losses.size());
      double sum = 0.0;
      for (std::size_t i = result.losses.size() - n; i < result.losses.size(); ++i) sum += result.losses[i];
      *final_loss = sum / static_cast<double>(n);
    }
  });
}

gbsi_status gbsi_model_load(const char* path, gbsi_model** out) {
  GBSI_REQUIRE(path);
  GBSI_REQUIRE(out);
  *out = nullptr;
  return guard([&] { *out = new gbsi_model{load_checkpoint(std::string(path))}; });
}

void gbsi_model_destroy(gbsi_model* model) { delete model; }

const char* gbsi_model_family(const gbsi_model* model) {
  return model ? model->ckpt.family.c_str() : "";
}

gbsi_status gbsi_model_max_stable_gamma(const gbsi_model* model, const gbsi_sampler_params* params,
                                        double* out) {
  GBSI_REQUIRE(model);
  GBSI_REQUIRE(params);
  GBSI_REQUIRE(out);
  return guard([&] {
    SamplerConfig c = sampler_of(*params);
    const double dt = largest_step(c);
    *out = std::min(max_stable_gamma(model->ckpt.node_schedule, dt),
                    max_stable_gamma(model->ckpt.edge_schedule, dt));
  });
}

gbsi_status gbsi_sample_graphs(const gbsi_model* model, const gbsi_sampler_params* params,
                               uint64_t seed, size_t count, const char* out_path) {
  GBSI_REQUIRE(model);
  GBSI_REQUIRE(params);
  GBSI_REQUIRE(out_path);
  return guard([&] {
    const SamplerConfig c = sampler_of(*params);
    const Checkpoint& ck = model->ckpt;
    const GraphReconstructor f(ck.net);
    const auto graphs =
        sample_graphs(f, ck.node_schedule, ck.edge_schedule, ck.node_counts, c, seed, count);
    auto out = open_out(out_path);
    write_graphs(out, graphs);
    out.close();
    if (!out) throw IoError(std::string("failed writing '") + out_path + "'");
  });
}

gbsi_status gbsi_evaluate_files(const char* samples_path, const char* train_path, const char* family,
                                gbsi_metrics* out) {
  GBSI_REQUIRE(samples_path);
  GBSI_REQUIRE(train_path);
  GBSI_REQUIRE(family);
  GBSI_REQUIRE(out);
  return guard([&] {
    const Family fam = parse_family(family);
    const auto samples = read_graph_file(samples_path);
    const auto train_set = read_graph_file(train_path);
    if (samples.empty()) throw ParseError(1, std::string(samples_path) + ": no graphs in file");
    const Metrics m = evaluate(samples, train_set, [fam](const GraphSample& g) { return is_valid(fam, g); });
    *out = gbsi_metrics{m.validity, m.uniqueness, m.novelty, m.degree_hist_tv, samples.size()};
  });
}

gbsi_status gbsi_trajectories(const gbsi_trajectory_params* params, const double* gammas,
                              size_t n_gammas, const char* dump_path, const char* sidecar_path,
                              gbsi_trajectory_stats* stats) {
  GBSI_REQUIRE(params);
  if (n_gammas > 0) {
    GBSI_REQUIRE(gammas);
    GBSI_REQUIRE(stats);
  }
  GBSI_REQUIRE(params->scheme);
  return guard([&] {
    const PrecisionSchedule schedule = schedule_of(params->schedule, params->categories);
    if (params->categories < 2) throw ConfigError("trajectories: need at least two categories");
    SamplerConfig base;
    base.scheme = parse_scheme(params->scheme);
    base.steps = params->steps;
    base.rho = params->rho;
    std::ofstream dump;
    if (dump_path) {
      dump = open_out(dump_path);
      write_trajectory_header(dump, schedule, params->target_class, base, params->seed,
                              params->shared_prior != 0);
    }
    for (std::size_t g = 0; g < n_gammas; ++g) {
      SamplerConfig c = base;
      c.gamma = gammas[g];
      c.validate();
      const TrajectoryStats s = frozen_trajectory_stats(schedule, params->target_class, c, params->seed,
                                                        params->runs, params->shared_prior != 0);
      stats[g] = gbsi_trajectory_stats{s.gamma, s.target_mean, s.target_mean_se, s.expected_target_mean,
                                       s.variance, s.expected_variance, s.blowup_fraction};
      if (dump_path && params->dump_runs > 0) {
        write_trajectory_dump(dump, schedule, params->target_class, c, params->seed,
                              std::min(params->dump_runs, params->runs), params->shared_prior != 0);
      }
    }
    if (dump_path) {
      dump.close();
      if (!dump) throw IoError(std::string("failed writing '") + dump_path + "'");
    }
    if (sidecar_path) {
      auto side = open_out(sidecar_path);
      write_marginal_sidecar(side, schedule, params->target_class, params->steps, params->rho);
      side.close();
      if (!side) throw IoError(std::string("failed writing '") + sidecar_path + "'");
    }
  });
}

}  // extern "C"
