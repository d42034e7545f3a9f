#include "graphbsi/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "graphbsi/error.hpp"

namespace graphbsi {

PrecisionSchedule build_schedule(const ChannelScheduleConfig& config,
                                 std::span<const double> marginals) {
  std::vector<double> mu0;
  switch (config.prior) {
    case PriorMode::kUniform: mu0.assign(marginals.size(), 0.0); break;
    case PriorMode::kMarginal: mu0 = mu0_from_marginals(marginals); break;
    case PriorMode::kExplicit:
      if (config.mu0.size() != marginals.size()) {
        throw ConfigError("explicit mu0 has " + std::to_string(config.mu0.size()) +
                          " entries, expected " + std::to_string(marginals.size()));
      }
      mu0 = config.mu0;
      break;
  }
  return PrecisionSchedule(config.beta_start, config.beta_end, config.beta0, std::move(mu0));
}

namespace {

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a real number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
    out.push_back(to_real(key, a == std::string::npos ? "" : item.substr(a, b - a + 1)));
  }
  return out;
}

const char* prior_name(PriorMode m) {
  switch (m) {
    case PriorMode::kUniform: return "uniform";
    case PriorMode::kMarginal: return "marginal";
    case PriorMode::kExplicit: return "explicit";
  }
  return "uniform";
}

PriorMode to_prior(const std::string& key, const std::string& v) {
  if (v == "uniform") return PriorMode::kUniform;
  if (v == "marginal") return PriorMode::kMarginal;
  if (v == "explicit") return PriorMode::kExplicit;
  throw ConfigError(key + ": expected uniform, marginal or explicit");
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field real_field(T RunConfig::*section, double T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { c.*section.*member = to_real(k, v); },
          [=](const RunConfig& c) { return fmt(c.*section.*member); }};
}

template <class T, class U>
Field uint_field(T RunConfig::*section, U T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) {
            c.*section.*member = static_cast<U>(to_uint(k, v));
          },
          [=](const RunConfig& c) { return std::to_string(c.*section.*member); }};
}

void add_channel(std::map<std::string, Field>& f, const std::string& prefix,
                 ChannelScheduleConfig RunConfig::*ch) {
  f[prefix + ".beta_start"] = real_field(ch, &ChannelScheduleConfig::beta_start);
  f[prefix + ".beta_end"] = real_field(ch, &ChannelScheduleConfig::beta_end);
  f[prefix + ".beta0"] = real_field(ch, &ChannelScheduleConfig::beta0);
  f[prefix + ".mu0_mode"] = {
      [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*ch).prior = to_prior(k, v); },
      [=](const RunConfig& c) { return std::string(prior_name((c.*ch).prior)); }};
  f[prefix + ".mu0"] = {
      [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*ch).mu0 = to_list(k, v); },
      [=](const RunConfig& c) { return fmt_list((c.*ch).mu0); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    add_channel(f, "node", &RunConfig::node);
    add_channel(f, "edge", &RunConfig::edge);
    f["model.hidden"] = uint_field(&RunConfig::model, &NetConfig::hidden);
    f["model.layers"] = uint_field(&RunConfig::model, &NetConfig::layers);
    f["model.freqs"] = uint_field(&RunConfig::model, &NetConfig::freqs);
    f["sampler.scheme"] = {
        [](RunConfig& c, const std::string&, const std::string& v) { c.sampler.scheme = parse_scheme(v); },
        [](const RunConfig& c) { return std::string(scheme_name(c.sampler.scheme)); }};
    f["sampler.steps"] = uint_field(&RunConfig::sampler, &SamplerConfig::steps);
    f["sampler.gamma"] = real_field(&RunConfig::sampler, &SamplerConfig::gamma);
    f["sampler.rho"] = real_field(&RunConfig::sampler, &SamplerConfig::rho);
    f["train.lr"] = real_field(&RunConfig::train, &TrainConfig::lr);
    f["train.steps"] = uint_field(&RunConfig::train, &TrainConfig::steps);
    f["train.batch"] = uint_field(&RunConfig::train, &TrainConfig::batch);
    f["train.seed"] = uint_field(&RunConfig::train, &TrainConfig::seed);
    f["train.clip"] = real_field(&RunConfig::train, &TrainConfig::clip);
    f["train.momentum"] = real_field(&RunConfig::train, &TrainConfig::momentum);
    f["train.node_weight"] = real_field(&RunConfig::train, &TrainConfig::node_weight);
    f["train.edge_weight"] = real_field(&RunConfig::train, &TrainConfig::edge_weight);
    f["data.family"] = {
        [](RunConfig& c, const std::string&, const std::string& v) { c.data.family = parse_family(v); },
        [](const RunConfig& c) { return std::string(family_name(c.data.family)); }};
    f["data.n"] = uint_field(&RunConfig::data, &DatasetParams::n);
    f["data.n_min"] = uint_field(&RunConfig::data, &DatasetParams::n_min);
    f["data.n_max"] = uint_field(&RunConfig::data, &DatasetParams::n_max);
    f["data.count"] = uint_field(&RunConfig::data, &DatasetParams::count);
    f["data.p_in"] = real_field(&RunConfig::data, &DatasetParams::p_in);
    f["data.p_out"] = real_field(&RunConfig::data, &DatasetParams::p_out);
    f["data.seed"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) { c.data_seed = to_uint(k, v); },
        [](const RunConfig& c) { return std::to_string(c.data_seed); }};
    f["paths.out"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.out = v; },
                      [](const RunConfig& c) { return c.out; }};
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  const auto& f = fields();
  auto it = f.find(key);
  if (it == f.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

void check_schedule(const std::string& name, const ChannelScheduleConfig& c) {
  try {
    PrecisionSchedule(c.beta_start, c.beta_end, c.beta0, std::vector<double>{0.0});
  } catch (const ConfigError& e) {
    throw ConfigError(name + " schedule: " + e.what());
  }
  if (c.prior == PriorMode::kExplicit && c.mu0.empty()) {
    throw ConfigError(name + ".mu0 is required when " + name + ".mu0_mode = explicit");
  }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, key, value);
}

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : fields()) out.push_back(name);
    return out;
  }();
  return k;
}

void RunConfig::validate() const {
  check_schedule("node", node);
  check_schedule("edge", edge);
  NetConfig m = model;
  m.node_categories = 1;
  m.edge_categories = 2;
  m.validate();
  sampler.validate();
  train.validate();
  data.validate();
  if (out.empty()) throw ConfigError("paths.out must not be empty");
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'section.key = value'");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return parse_config(in);
}

}  // namespace graphbsi
