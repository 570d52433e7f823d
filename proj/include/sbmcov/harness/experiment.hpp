#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sbmcov/chernoff.hpp"
#include "sbmcov/cluster.hpp"
#include "sbmcov/harness/config.hpp"
#include "sbmcov/inference.hpp"
#include "sbmcov/model.hpp"
#include "sbmcov/rng.hpp"

namespace sbmcov::harness {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrialRecord {
  int trial = 0;
  double beta_hat = kNaN;
  double beta_sa = kNaN;
  double beta_wa = kNaN;
  double ari_algo1 = kNaN;
  double ari_algo2_known = kNaN;
  double ari_algo2_hat = kNaN;
  int K_hat = 0;
  int d_hat = 0;
  double seconds_algo1 = kNaN;
  double seconds_algo2 = kNaN;
  std::string failure;
};

struct Stat {
  double mean = kNaN;
  double stderr_ = kNaN;
  int count = 0;
};

/// Mean and sample standard deviation / sqrt(count) over finite values.
inline Stat summarize(const std::vector<double>& v) {
  Stat s;
  double sum = 0.0;
  for (double x : v)
    if (std::isfinite(x)) {
      sum += x;
      ++s.count;
    }
  if (s.count == 0) return s;
  s.mean = sum / s.count;
  if (s.count < 2) {
    s.stderr_ = 0.0;
    return s;
  }
  double ss = 0.0;
  for (double x : v)
    if (std::isfinite(x)) ss += (x - s.mean) * (x - s.mean);
  s.stderr_ = std::sqrt(ss / (s.count - 1)) / std::sqrt(double(s.count));
  return s;
}

struct Summary {
  ExperimentSpec spec;
  std::vector<TrialRecord> records;
  Stat beta_hat, ari_algo1, ari_algo2_known, ari_algo2_hat;
  Stat seconds_algo1, seconds_algo2;
  int failures = 0;
};

/// Vertex labels for one trial: balanced block-major counts (or i.i.d.),
/// optionally shuffled.
inline Labels trial_labels(const ExperimentSpec& spec,
                           const CovariateBlockModel& model, Rng& rng) {
  Labels xi;
  if (spec.balanced) {
    xi = balanced_labels(model, spec.n);
  } else {
    std::vector<double> cdf(static_cast<std::size_t>(model.expanded()));
    std::partial_sum(model.piZ.data(), model.piZ.data() + model.piZ.size(),
                     cdf.begin());
    xi.resize(static_cast<std::size_t>(spec.n));
    for (auto& v : xi) {
      const double u = rng.uniform() * cdf.back();
      v = std::min<int>(
          static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) -
                           cdf.begin()),
          model.expanded() - 1);
    }
  }
  if (spec.shuffle) rng.shuffle(std::span<int>(xi));
  return xi;
}

inline Algo1Options algo1_options(const ExperimentSpec& spec,
                                  std::uint64_t seed) {
  Algo1Options o;
  o.d = spec.d;
  o.kmin = spec.kmin;
  o.kmax = spec.kmax;
  o.levels = spec.levels;
  o.elbow = spec.elbow;
  o.seed = seed;
  o.gmm.restarts = spec.restarts;
  o.gmm.screen_iter = spec.screen_iter;
  o.structures = spec.structures();
  return o;
}

inline Algo2Options algo2_options(const ExperimentSpec& spec,
                                  std::uint64_t seed) {
  Algo2Options o;
  o.method = spec.method;
  o.wa_normalization = spec.wa_normalization;
  o.d2 = spec.d2;
  o.reselect = spec.reselect;
  o.elbow = spec.elbow;
  o.seed = seed;
  o.gmm.restarts = spec.restarts;
  o.gmm.screen_iter = spec.screen_iter;
  o.structures = spec.structures();
  return o;
}

/// One full trial. Depends only on (spec, trial index).
inline TrialRecord run_trial(const ExperimentSpec& spec, int trial) {
  using clock = std::chrono::steady_clock;
  TrialRecord rec;
  rec.trial = trial;
  try {
    const CovariateBlockModel model = spec.model();
    Rng rng = Rng::stream(spec.seed, static_cast<std::uint64_t>(trial));
    Labels xi = trial_labels(spec, model, rng);
    const LabeledSample s = sample_with_labels(model, std::move(xi), rng);
    const std::uint64_t fit_seed = rng();

    const auto t0 = clock::now();
    const Algo1Result a1 = algo1(s.graph, algo1_options(spec, fit_seed));
    const auto t1 = clock::now();
    rec.seconds_algo1 = std::chrono::duration<double>(t1 - t0).count();
    rec.K_hat = a1.K_hat;
    rec.d_hat = a1.d_hat;
    rec.ari_algo1 = ari(a1.tau_hat, s.tau);

    try {
      rec.beta_sa = estimate_beta(a1, s.z, spec.levels, BetaMethod::SA);
    } catch (const InferenceError&) {
    }
    try {
      rec.beta_wa = estimate_beta(a1, s.z, spec.levels, BetaMethod::WA,
                                  spec.wa_normalization);
    } catch (const InferenceError&) {
    }

    Algo2Options o2 = algo2_options(spec, fit_seed ^ 0x9e3779b97f4a7c15ULL);
    const auto t2 = clock::now();
    const Algo2Result hat = algo2(s.graph, s.z, a1, spec.levels, o2);
    const auto t3 = clock::now();
    rec.beta_hat = hat.beta_hat;
    rec.ari_algo2_hat = ari(hat.tau_tilde, s.tau);
    rec.seconds_algo2 = rec.seconds_algo1 +
                        std::chrono::duration<double>(t3 - t2).count();

    o2.beta_known = spec.beta;
    const Algo2Result known = algo2(s.graph, s.z, a1, spec.levels, o2);
    rec.ari_algo2_known = ari(known.tau_tilde, s.tau);
  } catch (const std::exception& e) {
    rec.failure = e.what();
  }
  return rec;
}

/// Worker count from SBMCOV_WORKERS, else the hardware concurrency.
inline int default_workers() {
  if (const char* env = std::getenv("SBMCOV_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline Summary run_experiment(const ExperimentSpec& spec, int workers = 0) {
  spec.validate();
  if (workers <= 0) workers = default_workers();
  workers = std::min(workers, spec.trials);
  Summary sum;
  sum.spec = spec;
  sum.records.resize(static_cast<std::size_t>(spec.trials));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int t = next++; t < spec.trials; t = next++)
      sum.records[static_cast<std::size_t>(t)] = run_trial(spec, t);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  std::vector<double> bh, a1, a2k, a2h, s1, s2;
  for (const auto& r : sum.records) {
    if (!r.failure.empty()) {
      ++sum.failures;
      continue;
    }
    bh.push_back(r.beta_hat);
    a1.push_back(r.ari_algo1);
    a2k.push_back(r.ari_algo2_known);
    a2h.push_back(r.ari_algo2_hat);
    s1.push_back(r.seconds_algo1);
    s2.push_back(r.seconds_algo2);
  }
  if (sum.failures == spec.trials)
    throw std::runtime_error("all trials failed; first failure: " +
                             sum.records.front().failure);
  sum.beta_hat = summarize(bh);
  sum.ari_algo1 = summarize(a1);
  sum.ari_algo2_known = summarize(a2k);
  sum.ari_algo2_hat = summarize(a2h);
  sum.seconds_algo1 = summarize(s1);
  sum.seconds_algo2 = summarize(s2);
  return sum;
}

/// %.6g, empty for non-finite values.
inline std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string opt_int(const std::optional<int>& v) {
  return v ? std::to_string(*v) : "auto";
}

inline void write_table(const Summary& s, std::ostream& out) {
  const ExperimentSpec& p = s.spec;
  const bool r1 = p.family == Family::RankOne;
  out << "family,p,q,a,b,beta,K,levels,n,trials,seed,d,d2,method,covariance,"
         "beta_hat_mean,beta_hat_stderr,ari_algo1_mean,ari_algo1_stderr,"
         "ari_algo2_known_mean,ari_algo2_known_stderr,ari_algo2_hat_mean,"
         "ari_algo2_hat_stderr,";
  if (p.timing) out << "seconds_algo1_mean,seconds_algo2_mean,";
  out << "failures\n";
  out << (r1 ? "rank_one" : "homogeneous") << ','
      << (r1 ? fmt(p.p) : "") << ',' << (r1 ? fmt(p.q) : "") << ','
      << (r1 ? "" : fmt(p.a)) << ',' << (r1 ? "" : fmt(p.b)) << ','
      << fmt(p.beta) << ',' << (r1 ? 2 : p.K) << ',' << p.levels << ','
      << p.n << ',' << p.trials << ',' << p.seed << ',' << opt_int(p.d)
      << ',' << opt_int(p.d2) << ',' << to_string(p.method) << ','
      << p.covariance << ',' << fmt(s.beta_hat.mean) << ','
      << fmt(s.beta_hat.stderr_) << ',' << fmt(s.ari_algo1.mean) << ','
      << fmt(s.ari_algo1.stderr_) << ',' << fmt(s.ari_algo2_known.mean) << ','
      << fmt(s.ari_algo2_known.stderr_) << ',' << fmt(s.ari_algo2_hat.mean)
      << ',' << fmt(s.ari_algo2_hat.stderr_) << ',';
  if (p.timing)
    out << fmt(s.seconds_algo1.mean) << ',' << fmt(s.seconds_algo2.mean)
        << ',';
  out << s.failures << '\n';
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline void write_records(const Summary& s, std::ostream& out) {
  const bool timing = s.spec.timing;
  out << "trial,beta_hat,beta_sa,beta_wa,ari_algo1,ari_algo2_known,"
         "ari_algo2_hat,K_hat,d_hat,";
  if (timing) out << "seconds_algo1,seconds_algo2,";
  out << "failure\n";
  for (const auto& r : s.records) {
    out << r.trial << ',' << fmt(r.beta_hat) << ',' << fmt(r.beta_sa) << ','
        << fmt(r.beta_wa) << ',' << fmt(r.ari_algo1) << ','
        << fmt(r.ari_algo2_known) << ',' << fmt(r.ari_algo2_hat) << ','
        << r.K_hat << ',' << r.d_hat << ',';
    if (timing)
      out << fmt(r.seconds_algo1) << ',' << fmt(r.seconds_algo2) << ',';
    out << csv_escape(r.failure) << '\n';
  }
}

inline void write_grid(const std::vector<GridCell>& cells, GridFamily family,
                       std::ostream& out) {
  out << (family == GridFamily::RankOne ? "q" : "a") << ",beta,rho_star\n";
  for (const auto& c : cells)
    out << fmt(c.x) << ',' << fmt(c.beta) << ','
        << (c.rho_star ? fmt(*c.rho_star) : "") << '\n';
}

template <class Writer>
void write_file(const std::string& path, Writer&& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  w(out);
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

}  // namespace sbmcov::harness
