// Command-line front end. Uses only the C interface in graphbsi.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "graphbsi/graphbsi.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int exit_code(gbsi_status st) {
  switch (st) {
    case GBSI_OK: return 0;
    case GBSI_ERR_NUMERIC: return kExitNumeric;
    case GBSI_ERR_INTERNAL: return 1;
    default: return kExitUsage;
  }
}

struct Failure {
  gbsi_status status;
};

void check(gbsi_status st) {
  if (st != GBSI_OK) {
    std::cerr << "error: " << gbsi_last_error() << '\n';
    throw Failure{st};
  }
}

using ConfigPtr = std::unique_ptr<gbsi_config, decltype(&gbsi_config_destroy)>;
using ModelPtr = std::unique_ptr<gbsi_model, decltype(&gbsi_model_destroy)>;

ConfigPtr open_config(const std::string& path) {
  gbsi_config* raw = nullptr;
  check(path.empty() ? gbsi_config_create(&raw) : gbsi_config_load(path.c_str(), &raw));
  return ConfigPtr(raw, gbsi_config_destroy);
}

std::string config_value(const gbsi_config* cfg, const std::string& key) {
  std::size_t needed = 0;
  gbsi_config_get(cfg, key.c_str(), nullptr, 0, &needed);
  std::string buf(needed, '\0');
  check(gbsi_config_get(cfg, key.c_str(), buf.data(), buf.size(), nullptr));
  buf.pop_back();
  return buf;
}

double config_real(const gbsi_config* cfg, const std::string& key) {
  return std::stod(config_value(cfg, key));
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Run configuration file");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out, "Output path");
}

int cmd_train(const Common& c) {
  if (c.config.empty()) {
    std::cerr << "error: train requires --config\n";
    return kExitUsage;
  }
  ConfigPtr cfg = open_config(c.config);
  if (c.seed) check(gbsi_config_set(cfg.get(), "train.seed", std::to_string(*c.seed).c_str()));
  if (!c.out.empty()) check(gbsi_config_set(cfg.get(), "paths.out", c.out.c_str()));
  check(gbsi_config_validate(cfg.get()));
  const std::string dir = config_value(cfg.get(), "paths.out");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory '" << dir << "': " << ec.message() << '\n';
    return kExitUsage;
  }
  double final_loss = 0.0;
  check(gbsi_train(cfg.get(), dir.c_str(), nullptr, nullptr, &final_loss));
  std::printf("final_loss=%.6f\n", final_loss);
  std::printf("checkpoint=%s\n", (std::filesystem::path(dir) / "model.ckpt").string().c_str());
  return 0;
}

struct SampleArgs {
  std::string checkpoint;
  std::optional<std::string> scheme;
  std::optional<int> steps;
  std::optional<double> gamma;
  std::optional<double> rho;
  std::size_t count = 100;
};

int cmd_sample(const Common& c, const SampleArgs& a) {
  ConfigPtr cfg = open_config(c.config);
  std::string ckpt_path = a.checkpoint;
  if (ckpt_path.empty()) {
    if (c.config.empty()) {
      std::cerr << "error: sample requires --checkpoint or --config\n";
      return kExitUsage;
    }
    ckpt_path = (std::filesystem::path(config_value(cfg.get(), "paths.out")) / "model.ckpt").string();
  }
  const std::string scheme = a.scheme.value_or(config_value(cfg.get(), "sampler.scheme"));
  gbsi_sampler_params params{scheme.c_str(),
                             a.steps.value_or(std::stoi(config_value(cfg.get(), "sampler.steps"))),
                             a.gamma.value_or(config_real(cfg.get(), "sampler.gamma")),
                             a.rho.value_or(config_real(cfg.get(), "sampler.rho"))};
  const std::string out = c.out.empty() ? "samples.graphs" : c.out;
  const std::uint64_t seed = c.seed.value_or(0);

  gbsi_model* raw = nullptr;
  check(gbsi_model_load(ckpt_path.c_str(), &raw));
  ModelPtr model(raw, gbsi_model_destroy);
  double limit = 0.0;
  check(gbsi_model_max_stable_gamma(model.get(), &params, &limit));
  if (scheme == "em" && params.gamma > limit) {
    std::cerr << "warning: gamma=" << params.gamma << " exceeds the Euler-Maruyama stability limit "
              << limit << " for " << params.steps
              << " steps; trajectories may diverge (use --scheme ou)\n";
  }
  check(gbsi_sample_graphs(model.get(), &params, seed, a.count, out.c_str()));
  std::printf("wrote %zu graphs to %s\n", a.count, out.c_str());
  return 0;
}

struct EvalArgs {
  std::string samples;
  std::string train;
  std::string family;
};

int cmd_eval(const Common& c, const EvalArgs& a) {
  std::string family = a.family;
  if (family.empty()) {
    family = c.config.empty() ? "all-trees" : config_value(open_config(c.config).get(), "data.family");
  }
  gbsi_metrics m{};
  check(gbsi_evaluate_files(a.samples.c_str(), a.train.c_str(), family.c_str(), &m));
  char text[512];
  std::snprintf(text, sizeof text,
                "samples=%zu\nvalidity=%.6f\nuniqueness=%.6f\nnovelty=%.6f\ndegree_hist_tv=%.6f\n",
                m.samples, m.validity, m.uniqueness, m.novelty, m.degree_hist_tv);
  std::fputs(text, stdout);
  if (!c.out.empty()) {
    std::ofstream f(c.out);
    f << text;
    if (!f) {
      std::cerr << "error: cannot write '" << c.out << "'\n";
      return kExitUsage;
    }
  }
  return 0;
}

struct ScheduleArgs {
  std::optional<double> beta_start;
  std::optional<double> beta_end;
  std::optional<double> beta0;
  std::string channel = "node";
};

void add_schedule(CLI::App* cmd, ScheduleArgs& s) {
  cmd->add_option("--beta-start", s.beta_start, "Schedule beta_start");
  cmd->add_option("--beta-end", s.beta_end, "Schedule beta_end");
  cmd->add_option("--beta0", s.beta0, "Prior precision");
  cmd->add_option("--channel", s.channel, "Config channel supplying defaults")
      ->check(CLI::IsMember({"node", "edge"}));
}

// Flags win over the config file, which wins over built-in defaults.
gbsi_schedule_params resolve_schedule(const Common& c, const ScheduleArgs& s) {
  ConfigPtr cfg = open_config(c.config);
  const std::string p = s.channel + ".";
  return gbsi_schedule_params{s.beta_start.value_or(config_real(cfg.get(), p + "beta_start")),
                              s.beta_end.value_or(config_real(cfg.get(), p + "beta_end")),
                              s.beta0.value_or(config_real(cfg.get(), p + "beta0"))};
}

int cmd_stability(const Common& c, const ScheduleArgs& s, const std::string& method_name) {
  const gbsi_schedule_params sched = resolve_schedule(c, s);
  gbsi_stability_method method = GBSI_STABILITY_SAMPLED_GRADIENT;
  if (method_name == "analytic") method = GBSI_STABILITY_ANALYTIC;
  if (method_name == "dense") method = GBSI_STABILITY_DENSE_GRID;
  std::string text = "steps,dt,max_stable_gamma\n";
  char line[128];
  for (int steps : {25, 50, 100, 200, 500}) {
    const double dt = 1.0 / steps;
    double gamma = 0.0;
    check(gbsi_max_stable_gamma(&sched, dt, method, &gamma));
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f\n", steps, dt, gamma);
    text += line;
  }
  double ratio = 0.0;
  check(gbsi_min_stability_ratio(&sched, method, &ratio));
  std::snprintf(line, sizeof line, "min_ratio=%.6f\n", ratio);
  text += line;
  std::fputs(text.c_str(), stdout);
  if (!c.out.empty()) {
    std::ofstream f(c.out);
    f << text;
    if (!f) {
      std::cerr << "error: cannot write '" << c.out << "'\n";
      return kExitUsage;
    }
  }
  return 0;
}

struct TrajectoryArgs {
  std::string scheme = "ou";
  std::vector<double> gammas{1.5, 5.0, 20.0};
  int steps = 512;
  double rho = 1.0;
  std::size_t categories = 3;
  std::size_t target = 1;
  std::size_t runs = 10000;
  std::size_t dump_runs = 20;
  bool shared_prior = false;
};

int cmd_trajectories(const Common& c, const ScheduleArgs& s, const TrajectoryArgs& a) {
  const gbsi_schedule_params sched = resolve_schedule(c, s);
  const std::string prefix = c.out.empty() ? "trajectories" : c.out;
  const std::string dump = prefix + ".csv";
  const std::string sidecar = prefix + ".marginal.csv";
  gbsi_trajectory_params p{sched,    a.categories, a.target,       a.scheme.c_str(),
                           a.steps,  a.rho,        c.seed.value_or(0), a.runs,
                           a.dump_runs, a.shared_prior ? 1 : 0};
  std::vector<gbsi_trajectory_stats> stats(a.gammas.size());
  check(gbsi_trajectories(&p, a.gammas.data(), a.gammas.size(), dump.c_str(), sidecar.c_str(),
                          stats.data()));
  std::printf("gamma,target_mean,target_mean_se,expected_target_mean,variance,expected_variance,blowup_fraction\n");
  for (const auto& st : stats) {
    std::printf("%g,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", st.gamma, st.target_mean, st.target_mean_se,
                st.expected_target_mean, st.variance, st.expected_variance, st.blowup_fraction);
  }
  std::printf("dump=%s\nmarginal=%s\n", dump.c_str(), sidecar.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian sample inference for categorical graphs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gbsi_version()));

  Common common;
  SampleArgs sample_args;
  EvalArgs eval_args;
  ScheduleArgs schedule_args;
  TrajectoryArgs traj_args;
  std::string stability_method = "sampled";

  auto* train = app.add_subcommand("train", "Train a model on the configured dataset");
  add_common(train, common);

  auto* sample = app.add_subcommand("sample", "Generate graphs from a checkpoint");
  add_common(sample, common);
  sample->add_option("--checkpoint", sample_args.checkpoint, "Checkpoint (default: <paths.out>/model.ckpt)");
  sample->add_option("--scheme", sample_args.scheme, "discrete | em | ou | inf-noise | inf-noise-fixed-prior");
  sample->add_option("--steps", sample_args.steps, "Number of sampling steps k");
  sample->add_option("--gamma", sample_args.gamma, "Noise level of the SDE samplers");
  sample->add_option("--rho", sample_args.rho, "Time-grid exponent");
  sample->add_option("--count", sample_args.count, "Number of graphs");

  auto* eval = app.add_subcommand("eval", "Compare generated graphs against the training set");
  add_common(eval, common);
  eval->add_option("--samples", eval_args.samples, "Generated graph file")->required();
  eval->add_option("--train", eval_args.train, "Training graph file")->required();
  eval->add_option("--family", eval_args.family, "Validity oracle: all-trees | cycles-vs-paths | two-class-sbm");

  auto* traj = app.add_subcommand("trajectories", "Frozen-reconstructor trajectories and analytic marginals");
  add_common(traj, common);
  add_schedule(traj, schedule_args);
  traj->add_option("--scheme", traj_args.scheme, "Sampler scheme");
  traj->add_option("--gamma", traj_args.gammas, "Noise levels (comma separated)")->delimiter(',');
  traj->add_option("--steps", traj_args.steps, "Number of steps k");
  traj->add_option("--rho", traj_args.rho, "Time-grid exponent");
  traj->add_option("--categories", traj_args.categories, "Number of categories");
  traj->add_option("--target", traj_args.target, "Class predicted by the frozen reconstructor");
  traj->add_option("--runs", traj_args.runs, "Trajectories per gamma for the terminal statistics");
  traj->add_option("--dump-runs", traj_args.dump_runs, "Trajectories per gamma written to the dump");
  traj->add_flag("--shared-prior", traj_args.shared_prior, "Start every trajectory from the same z0");

  auto* stability = app.add_subcommand("stability", "Largest stable Euler-Maruyama gamma per step count");
  add_common(stability, common);
  add_schedule(stability, schedule_args);
  stability->add_option("--method", stability_method, "sampled | analytic | dense")
      ->check(CLI::IsMember({"sampled", "analytic", "dense"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(common);
    if (*sample) return cmd_sample(common, sample_args);
    if (*eval) return cmd_eval(common, eval_args);
    if (*traj) return cmd_trajectories(common, schedule_args, traj_args);
    if (*stability) return cmd_stability(common, schedule_args, stability_method);
  } catch (const Failure& f) {
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
