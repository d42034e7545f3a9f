#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "graphbsi/dataset.hpp"
#include "graphbsi/model.hpp"
#include "graphbsi/samplers.hpp"
#include "graphbsi/schedule.hpp"
#include "graphbsi/training.hpp"

namespace graphbsi {

enum class PriorMode {
  kUniform,   // mu0 = 0
  kMarginal,  // mu0 = log of the training-set class frequencies
  kExplicit,  // mu0 given in the config
};

struct ChannelScheduleConfig {
  double beta_start = 3.0;
  double beta_end = 12.0;
  double beta0 = 1.0;
  PriorMode prior = PriorMode::kMarginal;
  std::vector<double> mu0;  // kExplicit only
};

// Builds the schedule for a channel with `marginals.size()` categories.
PrecisionSchedule build_schedule(const ChannelScheduleConfig& config,
                                 std::span<const double> marginals);

// Flat `section.key = value` configuration. Every key has a default; see
// docs/formats.md for the full list.
struct RunConfig {
  ChannelScheduleConfig node;
  ChannelScheduleConfig edge;
  NetConfig model;
  SamplerConfig sampler;
  TrainConfig train;
  DatasetParams data;
  std::uint64_t data_seed = 0;
  std::string out = "run";

  // Throws ConfigError for unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  // Cross-checks every section against its module's preconditions.
  void validate() const;
};

// Blank lines and `#` comments are ignored. Throws ParseError (with the line
// number) on syntax errors, unknown keys and bad values.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace graphbsi
