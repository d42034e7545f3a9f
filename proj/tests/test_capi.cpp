// Exercises the shared library through its C header only.
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "graphbsi/graphbsi.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("graphbsi_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

gbsi_config* small_config(std::size_t steps = 60) {
  gbsi_config* cfg = nullptr;
  REQUIRE(gbsi_config_create(&cfg) == GBSI_OK);
  const std::pair<const char*, std::string> kv[] = {
      {"model.hidden", "8"}, {"model.layers", "1"}, {"model.freqs", "2"},
      {"train.steps", std::to_string(steps)}, {"train.batch", "2"}, {"data.n", "4"}};
  for (const auto& [k, v] : kv) REQUIRE(gbsi_config_set(cfg, k, v.c_str()) == GBSI_OK);
  return cfg;
}

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::string(gbsi_version()) == "1.0.0");
  double out = 0.0;
  CHECK(gbsi_schedule_beta(nullptr, 0.5, &out) == GBSI_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(gbsi_last_error()) > 0);
  const gbsi_schedule_params bad{12.0, 3.0, 1.0};
  CHECK(gbsi_schedule_beta(&bad, 0.5, &out) == GBSI_ERR_CONFIG);
  const gbsi_schedule_params ok{3.0, 12.0, 1.0};
  CHECK(gbsi_schedule_beta(&ok, 2.0, &out) == GBSI_ERR_DOMAIN);
  CHECK(gbsi_schedule_beta(&ok, 1.0, &out) == GBSI_OK);
  CHECK(out == doctest::Approx(9.0));
  CHECK(gbsi_schedule_beta_prime(&ok, 0.0, &out) == GBSI_OK);
  CHECK(out == doctest::Approx(3.0 * std::log(4.0)));
}

TEST_CASE("stability limits through the C API") {
  const gbsi_schedule_params s{3.0, 12.0, 1.0};
  double ratio = 0.0, gamma = 0.0;
  CHECK(gbsi_min_stability_ratio(&s, GBSI_STABILITY_ANALYTIC, &ratio) == GBSI_OK);
  CHECK(ratio == doctest::Approx(2.0 / (3.0 * std::log(4.0))).epsilon(1e-12));
  CHECK(gbsi_min_stability_ratio(&s, GBSI_STABILITY_SAMPLED_GRADIENT, &ratio) == GBSI_OK);
  CHECK(ratio == doctest::Approx(0.4775392).epsilon(1e-6));
  CHECK(gbsi_max_stable_gamma(&s, 0.01, GBSI_STABILITY_SAMPLED_GRADIENT, &gamma) == GBSI_OK);
  CHECK(gamma == doctest::Approx(1.0 + ratio / 0.01));
  CHECK(gbsi_max_stable_gamma(&s, 0.0, GBSI_STABILITY_ANALYTIC, &gamma) == GBSI_ERR_DOMAIN);
  CHECK(gbsi_min_stability_ratio(&s, static_cast<gbsi_stability_method>(9), &ratio) != GBSI_OK);
}

TEST_CASE("config handles") {
  gbsi_config* cfg = nullptr;
  REQUIRE(gbsi_config_create(&cfg) == GBSI_OK);
  CHECK(gbsi_config_set(cfg, "train.lr", "0.05") == GBSI_OK);
  CHECK(gbsi_config_set(cfg, "train.nope", "1") == GBSI_ERR_CONFIG);
  CHECK(gbsi_config_set(cfg, "train.lr", "fast") == GBSI_ERR_CONFIG);
  char buf[4];
  std::size_t needed = 0;
  CHECK(gbsi_config_get(cfg, "train.lr", buf, sizeof buf, &needed) == GBSI_ERR_INVALID_ARGUMENT);
  CHECK(needed == 5);
  std::vector<char> big(needed);
  CHECK(gbsi_config_get(cfg, "train.lr", big.data(), big.size(), nullptr) == GBSI_OK);
  CHECK(std::string(big.data()) == "0.05");
  CHECK(gbsi_config_validate(cfg) == GBSI_OK);
  CHECK(gbsi_config_set(cfg, "sampler.gamma", "0.5") == GBSI_OK);
  CHECK(gbsi_config_set(cfg, "sampler.scheme", "ou") == GBSI_OK);
  CHECK(gbsi_config_validate(cfg) == GBSI_ERR_CONFIG);
  gbsi_config_destroy(cfg);
  gbsi_config_destroy(nullptr);

  const fs::path dir = scratch_dir("cfg");
  std::ofstream(dir / "bad.cfg") << "train.lr = 0.1\n\nbogus line\n";
  gbsi_config* loaded = nullptr;
  CHECK(gbsi_config_load((dir / "bad.cfg").c_str(), &loaded) == GBSI_ERR_PARSE);
  CHECK(std::string(gbsi_last_error()).find("line 3") != std::string::npos);
  CHECK(loaded == nullptr);
  CHECK(gbsi_config_load((dir / "missing.cfg").c_str(), &loaded) == GBSI_ERR_IO);
}

TEST_CASE("train, sample and evaluate") {
  const fs::path dir = scratch_dir("pipeline");
  gbsi_config* cfg = small_config();
  std::vector<double> seen;
  auto progress = [](std::size_t, double loss, void* user) { static_cast<std::vector<double>*>(user)->push_back(loss); };
  double final_loss = 0.0;
  REQUIRE(gbsi_train(cfg, dir.c_str(), progress, &seen, &final_loss) == GBSI_OK);
  CHECK(seen.size() == 60);
  double mean = 0.0;
  for (double l : seen) mean += l / 60;
  CHECK(final_loss == doctest::Approx(mean).epsilon(1e-12));
  CHECK(fs::exists(dir / "model.ckpt"));
  CHECK(fs::exists(dir / "train.graphs"));
  std::ifstream losses(dir / "losses.txt");
  std::string first;
  std::getline(losses, first);
  CHECK(first.rfind("1,", 0) == 0);

  // Same config and seed give the same checkpoint bytes.
  const fs::path again = scratch_dir("pipeline_again");
  REQUIRE(gbsi_train(cfg, again.c_str(), nullptr, nullptr, nullptr) == GBSI_OK);
  CHECK(slurp(dir / "model.ckpt") == slurp(again / "model.ckpt"));
  CHECK(gbsi_train(cfg, (dir / "absent").c_str(), nullptr, nullptr, nullptr) == GBSI_ERR_IO);
  gbsi_config_destroy(cfg);

  gbsi_model* model = nullptr;
  REQUIRE(gbsi_model_load((dir / "model.ckpt").c_str(), &model) == GBSI_OK);
  CHECK(std::string(gbsi_model_family(model)) == "all-trees");
  gbsi_sampler_params sp{"ou", 20, 5.0, 1.0};
  REQUIRE(gbsi_sample_graphs(model, &sp, 7, 25, (dir / "a.graphs").c_str()) == GBSI_OK);
  REQUIRE(gbsi_sample_graphs(model, &sp, 7, 25, (dir / "b.graphs").c_str()) == GBSI_OK);
  CHECK(slurp(dir / "a.graphs") == slurp(dir / "b.graphs"));
  REQUIRE(gbsi_sample_graphs(model, &sp, 7, 0, (dir / "empty.graphs").c_str()) == GBSI_OK);
  CHECK(slurp(dir / "empty.graphs").empty());
  sp.gamma = 1.0;
  CHECK(gbsi_sample_graphs(model, &sp, 7, 5, (dir / "c.graphs").c_str()) == GBSI_ERR_CONFIG);
  sp.scheme = "heun";
  CHECK(gbsi_sample_graphs(model, &sp, 7, 5, (dir / "c.graphs").c_str()) == GBSI_ERR_CONFIG);
  gbsi_sampler_params em{"em", 100, 1.0, 1.0};
  double limit = 0.0;
  CHECK(gbsi_model_max_stable_gamma(model, &em, &limit) == GBSI_OK);
  CHECK(limit > 1.0);
  gbsi_model_destroy(model);

  gbsi_metrics m{};
  REQUIRE(gbsi_evaluate_files((dir / "train.graphs").c_str(), (dir / "train.graphs").c_str(), "all-trees", &m) ==
          GBSI_OK);
  CHECK(m.samples == 16);
  CHECK(m.validity == 1.0);
  CHECK(m.uniqueness == doctest::Approx(2.0 / 16));
  CHECK(m.novelty == 0.0);
  CHECK(m.degree_hist_tv == 0.0);
  CHECK(gbsi_evaluate_files((dir / "empty.graphs").c_str(), (dir / "train.graphs").c_str(), "all-trees", &m) ==
        GBSI_ERR_PARSE);
  CHECK(gbsi_evaluate_files((dir / "a.graphs").c_str(), (dir / "train.graphs").c_str(), "grids", &m) ==
        GBSI_ERR_CONFIG);
  CHECK(gbsi_model_load((dir / "losses.txt").c_str(), &model) == GBSI_ERR_IO);
}

TEST_CASE("diverging training reports a numeric error") {
  const fs::path dir = scratch_dir("diverge");
  // beta'(t) overflows to infinity for this schedule.
  gbsi_config* cfg = small_config(20);
  REQUIRE(gbsi_config_set(cfg, "edge.beta_end", "1e308") == GBSI_OK);
  CHECK(gbsi_train(cfg, dir.c_str(), nullptr, nullptr, nullptr) == GBSI_ERR_NUMERIC);
  gbsi_config_destroy(cfg);
}

TEST_CASE("trajectory statistics through the C API") {
  const fs::path dir = scratch_dir("traj");
  gbsi_trajectory_params p{};
  p.schedule = {3.0, 12.0, 1.0};
  p.categories = 3;
  p.target_class = 1;
  p.scheme = "ou";
  p.steps = 64;
  p.rho = 1.0;
  p.seed = 3;
  p.runs = 4000;
  p.dump_runs = 2;
  const double gammas[] = {1.5, 20.0};
  gbsi_trajectory_stats stats[2];
  REQUIRE(gbsi_trajectories(&p, gammas, 2, (dir / "d.csv").c_str(), (dir / "d.marginal.csv").c_str(), stats) ==
          GBSI_OK);
  for (const auto& s : stats) {
    CHECK(s.expected_target_mean == doctest::Approx(9.0));
    CHECK(std::abs(s.target_mean - 9.0) < 4 * s.target_mean_se);
    CHECK(s.blowup_fraction == 0.0);
  }
  CHECK(stats[1].gamma == 20.0);
  std::ifstream dump(dir / "d.csv");
  std::size_t lines = 0;
  std::size_t comments = 0;
  for (std::string l; std::getline(dump, l);) {
    ++lines;
    comments += l[0] == '#';
  }
  CHECK(comments == 11);
  CHECK(lines == 11 + 1 + 2 * 2 * 65 * 3);
  p.categories = 1;
  CHECK(gbsi_trajectories(&p, gammas, 2, nullptr, nullptr, stats) == GBSI_ERR_CONFIG);
  p.categories = 3;
  p.target_class = 3;
  CHECK(gbsi_trajectories(&p, gammas, 2, nullptr, nullptr, stats) == GBSI_ERR_DOMAIN);
}
