#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbmcov/cluster.hpp"
#include "sbmcov/inference.hpp"
#include "sbmcov/model.hpp"

namespace sbmcov::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Family { RankOne, Homogeneous };

/// One Monte-Carlo table row.
struct ExperimentSpec {
  Family family = Family::RankOne;
  double p = 0.3, q = 0.668;   // rank-one
  double a = 0.135, b = 0.1;   // homogeneous
  double beta = 0.49;
  int K = 2;                   // induced blocks (homogeneous)
  int levels = 2;
  int n = 100;
  int trials = 100;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::optional<int> d;        // unset: scree elbow
  std::optional<int> d2;
  int kmin = 1;
  int kmax = 12;
  int elbow = 1;
  BetaMethod method = BetaMethod::WA;
  WaNormalization wa_normalization = WaNormalization::WeightSum;
  bool balanced = true;
  bool shuffle = true;
  std::string covariance = "auto";  // auto = BIC over all structures
  int restarts = 10;
  int screen_iter = 0;
  bool reselect = false;
  bool timing = true;
  std::string output;           // summary CSV
  std::string records;          // per-trial CSV

  [[nodiscard]] CovariateBlockModel model() const {
    return family == Family::RankOne ? rank_one_model(p, q, beta, levels)
                                     : homogeneous_model(a, b, beta, K, levels);
  }

  [[nodiscard]] std::vector<Covariance> structures() const {
    if (covariance == "auto") return all_covariances();
    std::vector<Covariance> out;
    std::stringstream ss(covariance);
    std::string item;
    while (std::getline(ss, item, '+')) out.push_back(covariance_from_string(item));
    return out;
  }

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (kmin < 1 || kmax < kmin) throw ConfigError("invalid K range");
    if (restarts < 1) throw ConfigError("restarts must be >= 1");
    (void)structures();
    (void)model();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty())
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty())
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return x;
}

inline std::optional<int> parse_optional_int(const std::string& key,
                                             const std::string& v) {
  if (v == "auto" || v.empty()) return std::nullopt;
  return static_cast<int>(parse_int(key, v));
}

}  // namespace detail

/// Applies one key = value assignment.
inline void set_key(ExperimentSpec& s, const std::string& key,
                    const std::string& value) {
  using namespace detail;
  const std::string v = trim(value);
  if (key == "family") {
    if (v == "rank_one") s.family = Family::RankOne;
    else if (v == "homogeneous") s.family = Family::Homogeneous;
    else throw ConfigError("family must be rank_one or homogeneous");
  } else if (key == "p") s.p = parse_double(key, v);
  else if (key == "q") s.q = parse_double(key, v);
  else if (key == "a") s.a = parse_double(key, v);
  else if (key == "b") s.b = parse_double(key, v);
  else if (key == "beta") s.beta = parse_double(key, v);
  else if (key == "K") s.K = static_cast<int>(parse_int(key, v));
  else if (key == "levels") s.levels = static_cast<int>(parse_int(key, v));
  else if (key == "n") s.n = static_cast<int>(parse_int(key, v));
  else if (key == "trials") s.trials = static_cast<int>(parse_int(key, v));
  else if (key == "seed") {
    s.seed = static_cast<std::uint64_t>(parse_int(key, v));
    s.seed_set = true;
  } else if (key == "d") s.d = parse_optional_int(key, v);
  else if (key == "d2") s.d2 = parse_optional_int(key, v);
  else if (key == "kmin") s.kmin = static_cast<int>(parse_int(key, v));
  else if (key == "kmax") s.kmax = static_cast<int>(parse_int(key, v));
  else if (key == "elbow") s.elbow = static_cast<int>(parse_int(key, v));
  else if (key == "method") {
    if (v == "SA" || v == "sa") s.method = BetaMethod::SA;
    else if (v == "WA" || v == "wa") s.method = BetaMethod::WA;
    else throw ConfigError("method must be SA or WA");
  } else if (key == "wa_normalization") {
    if (v == "weight_sum") s.wa_normalization = WaNormalization::WeightSum;
    else if (v == "k_times_pairs")
      s.wa_normalization = WaNormalization::KTimesPairs;
    else throw ConfigError("wa_normalization must be weight_sum or k_times_pairs");
  } else if (key == "balanced") s.balanced = parse_bool(key, v);
  else if (key == "shuffle") s.shuffle = parse_bool(key, v);
  else if (key == "covariance") s.covariance = v;
  else if (key == "restarts") s.restarts = static_cast<int>(parse_int(key, v));
  else if (key == "screen_iter")
    s.screen_iter = static_cast<int>(parse_int(key, v));
  else if (key == "reselect") s.reselect = parse_bool(key, v);
  else if (key == "timing") s.timing = parse_bool(key, v);
  else if (key == "output") s.output = v;
  else if (key == "records") s.records = v;
  else throw ConfigError("unknown key '" + key + "'");
}

/// Parses "key=value" (used for command-line overrides).
inline void apply_assignment(ExperimentSpec& s, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw ConfigError("expected key=value, got '" + kv + "'");
  set_key(s, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
}

/// Flat config text: one `key = value` per line, `#` starts a comment.
inline ExperimentSpec parse_config(std::istream& in,
                                   const std::string& origin = "config") {
  ExperimentSpec s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    try {
      apply_assignment(s, line);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
  }
  return s;
}

inline ExperimentSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_config(in, path);
}

}  // namespace sbmcov::harness
