#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbmcov/cluster.hpp"
#include "sbmcov/model.hpp"
#include "sbmcov/spectral.hpp"

namespace sbmcov {

class InferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No (k, l, l') triple satisfies the simple-average pairing condition.
class EmptyPairSetError : public InferenceError {
 public:
  using InferenceError::InferenceError;
};

inline const std::vector<Covariance>& all_covariances() {
  static const std::vector<Covariance> all = {
      Covariance::Full, Covariance::Diagonal, Covariance::Spherical,
      Covariance::Tied};
  return all;
}

struct Algo1Options {
  std::optional<int> d;        // embedding dimension; scree elbow if unset
  std::optional<int> K;        // mixture components; BIC over [kmin, kmax]
  int kmin = 1;
  int kmax = 12;
  int levels = 2;              // c
  int elbow = 1;
  std::uint64_t seed = 0;
  GmmOptions gmm;
  std::vector<Covariance> structures = all_covariances();
  SpectralOptions spectral;
};

struct Algo1Result {
  Labels xi_hat;
  Matrix B_hat_Z;
  Labels phi_hat;
  Labels tau_hat;
  int d_hat = 0;
  int K_hat = 0;
  int induced = 0;           // number of induced blocks, round(K_hat / c)
  bool rounded = false;      // K_hat was not a multiple of c
  Embedding embedding;
  GmmFit fit;
};

/// Clusters the diagonal of B_hat_Z into `groups` with a scalar mixture.
inline Labels cluster_diagonal(const Matrix& B_hat_Z, int groups,
                               std::uint64_t seed,
                               const GmmOptions& opt = {}) {
  const auto K = static_cast<int>(B_hat_Z.rows());
  if (groups < 1 || groups > K)
    throw InferenceError("cannot split " + std::to_string(K) +
                         " diagonal entries into " + std::to_string(groups) +
                         " groups");
  if (groups == 1) return Labels(static_cast<std::size_t>(K), 0);
  Matrix x = B_hat_Z.diagonal();
  return fit_gmm(x, groups, seed, opt, Covariance::Full).labels;
}

/// tau_i = phi[xi_i].
inline Labels induced_labels(const Labels& xi_hat, const Labels& phi_hat) {
  Labels tau(xi_hat.size());
  for (std::size_t i = 0; i < xi_hat.size(); ++i) {
    if (xi_hat[i] < 0 || xi_hat[i] >= static_cast<int>(phi_hat.size()))
      throw InferenceError("expanded label without a diagonal cluster");
    tau[i] = phi_hat[static_cast<std::size_t>(xi_hat[i])];
  }
  return tau;
}

/// mu I mu^T from mixture means and the embedding signature.
inline Matrix estimated_bz(const Matrix& means, const Vector& signature) {
  Matrix B = means * signature.asDiagonal() * means.transpose();
  return 0.5 * (B + B.transpose());
}

/// Induced blocks from the adjacency matrix alone.
inline Algo1Result algo1(const Graph& graph, const Algo1Options& opt) {
  if (opt.levels < 2) throw InferenceError("need at least 2 covariate levels");
  const Spectrum spec(graph.A, opt.spectral);
  Algo1Result r;
  r.d_hat = opt.d ? *opt.d : spec.select(opt.elbow).chosen_d;
  r.embedding = spec.embed(r.d_hat);
  if (opt.K) {
    r.fit = select_k_bic(r.embedding.Y, *opt.K, *opt.K, opt.seed, opt.gmm,
                         opt.structures);
  } else {
    const int kmax = std::min(opt.kmax, graph.n());
    r.fit = select_k_bic(r.embedding.Y, opt.kmin, kmax, opt.seed, opt.gmm,
                         opt.structures);
  }
  r.K_hat = r.fit.K;
  r.xi_hat = r.fit.labels;
  r.B_hat_Z = estimated_bz(r.fit.means, r.embedding.signature());
  if (r.K_hat < opt.levels)
    throw InferenceError("selected " + std::to_string(r.K_hat) +
                         " components, fewer than the " +
                         std::to_string(opt.levels) + " covariate levels");
  r.rounded = r.K_hat % opt.levels != 0;
  r.induced = std::max(
      1, static_cast<int>(std::lround(static_cast<double>(r.K_hat) /
                                      opt.levels)));
  r.phi_hat = cluster_diagonal(r.B_hat_Z, r.induced, opt.seed ^ 0x5bd1e995u,
                               opt.gmm);
  r.tau_hat = induced_labels(r.xi_hat, r.phi_hat);
  return r;
}

namespace detail {

// counts(z, k) = number of vertices in cluster k with covariate level z.
inline Matrix level_counts(const Labels& xi_hat, const Labels& z, int K,
                           int levels) {
  if (xi_hat.size() != z.size())
    throw InferenceError("covariate length does not match labels");
  Matrix counts = Matrix::Zero(levels, K);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] < 0 || z[i] >= levels)
      throw InferenceError("covariate level out of range");
    if (xi_hat[i] < 0 || xi_hat[i] >= K)
      throw InferenceError("cluster label out of range");
    counts(z[i], xi_hat[i]) += 1.0;
  }
  return counts;
}

inline int infer_levels(const Labels& z) {
  int c = 0;
  for (int v : z) c = std::max(c, v + 1);
  return std::max(c, 2);
}

}  // namespace detail

/// Per-cluster modal covariate level; ties go to the lowest level.
inline Labels modal_levels(const Labels& xi_hat, const Labels& z, int K,
                           int levels) {
  const Matrix counts = detail::level_counts(xi_hat, z, K, levels);
  Labels mode(static_cast<std::size_t>(K), 0);
  for (int k = 0; k < K; ++k) {
    int best = 0;
    for (int l = 1; l < levels; ++l)
      if (counts(l, k) > counts(best, k)) best = l;
    mode[static_cast<std::size_t>(k)] = best;
  }
  return mode;
}

/// Simple average over (k, l, l') with phi_l = phi_l', mode_k = mode_l and
/// mode_k != mode_l'.
inline double estimate_beta_sa(const Matrix& B_hat_Z, const Labels& xi_hat,
                               const Labels& phi_hat, const Labels& z,
                               int levels = 0) {
  const auto K = static_cast<int>(B_hat_Z.rows());
  if (static_cast<int>(phi_hat.size()) != K)
    throw InferenceError("phi_hat length does not match B_hat_Z");
  if (levels <= 0) levels = detail::infer_levels(z);
  const Labels mode = modal_levels(xi_hat, z, K, levels);
  double sum = 0.0;
  long count = 0;
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l) {
      if (mode[k] != mode[l]) continue;
      for (int lp = 0; lp < K; ++lp) {
        if (phi_hat[l] != phi_hat[lp] || mode[k] == mode[lp]) continue;
        sum += B_hat_Z(k, l) - B_hat_Z(k, lp);
        ++count;
      }
    }
  if (count == 0)
    throw EmptyPairSetError(
        "no cluster pairs satisfy the modal-level condition; use the "
        "weighted-average estimator");
  return sum / static_cast<double>(count);
}

enum class WaNormalization {
  WeightSum,   // divide by the total pairing weight
  KTimesPairs  // divide by K_hat * |W|, W including l == l'
};

/// Weighted average over all (k, l, l') with phi_l = phi_l', weighted by
/// the probability that a vertex of k shares its level with l but not l'.
inline double estimate_beta_wa(
    const Matrix& B_hat_Z, const Labels& xi_hat, const Labels& phi_hat,
    const Labels& z, int levels = 0,
    WaNormalization norm = WaNormalization::WeightSum) {
  const auto K = static_cast<int>(B_hat_Z.rows());
  if (static_cast<int>(phi_hat.size()) != K)
    throw InferenceError("phi_hat length does not match B_hat_Z");
  if (levels <= 0) levels = detail::infer_levels(z);
  const Matrix counts = detail::level_counts(xi_hat, z, K, levels);
  const Vector nk = counts.colwise().sum().transpose();
  double num = 0.0, weight = 0.0;
  long pairs = 0;
  for (int l = 0; l < K; ++l)
    for (int lp = 0; lp < K; ++lp)
      if (phi_hat[l] == phi_hat[lp]) ++pairs;
  if (pairs == 0) throw InferenceError("empty pair set");
  for (int k = 0; k < K; ++k) {
    if (nk(k) == 0.0) continue;
    for (int l = 0; l < K; ++l) {
      if (nk(l) == 0.0) continue;
      for (int lp = 0; lp < K; ++lp) {
        if (lp == l || phi_hat[l] != phi_hat[lp] || nk(lp) == 0.0) continue;
        double p = 0.0;
        for (int s = 0; s < levels; ++s)
          p += counts(s, k) * counts(s, l) * (nk(lp) - counts(s, lp));
        p /= nk(k) * nk(l) * nk(lp);
        num += p * (B_hat_Z(k, l) - B_hat_Z(k, lp));
        weight += p;
      }
    }
  }
  if (norm == WaNormalization::KTimesPairs)
    return num / (static_cast<double>(K) * static_cast<double>(pairs));
  if (weight == 0.0)
    throw InferenceError("no cluster pair carries covariate contrast");
  return num / weight;
}

enum class BetaMethod { SA, WA };

inline const char* to_string(BetaMethod m) {
  return m == BetaMethod::SA ? "SA" : "WA";
}

struct Algo2Options {
  std::optional<double> beta_known;
  BetaMethod method = BetaMethod::WA;
  WaNormalization wa_normalization = WaNormalization::WeightSum;
  std::optional<int> d2;            // second embedding dimension
  std::optional<int> k_induced;     // defaults to round(K_hat / c)
  bool reselect = false;            // choose the count by BIC instead
  int elbow = 1;
  std::uint64_t seed = 0;
  GmmOptions gmm;
  std::vector<Covariance> structures = all_covariances();
  SpectralOptions spectral;
};

struct Algo2Result {
  double beta_hat = 0.0;
  BetaMethod method = BetaMethod::WA;
  bool beta_was_known = false;
  Matrix A_tilde;
  Labels tau_tilde;
  int d_tilde = 0;
  int k_induced = 0;
  bool single_cluster = false;
  Embedding embedding;
  GmmFit fit;
};

/// A - beta [Z_i == Z_j] off the diagonal; the diagonal is zero.
inline Matrix adjust_for_covariate(const Matrix& A, const Labels& z,
                                   double beta) {
  const auto n = A.rows();
  if (static_cast<Eigen::Index>(z.size()) != n)
    throw InferenceError("covariate length does not match the graph");
  Matrix At = A;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (z[i] == z[j]) At(i, j) -= beta;
    At(j, j) = 0.0;
  }
  return At;
}

/// Beta estimate from stage-one output by the requested method.
inline double estimate_beta(const Algo1Result& s1, const Labels& z,
                            int levels, BetaMethod method,
                            WaNormalization norm = WaNormalization::WeightSum) {
  return method == BetaMethod::SA
             ? estimate_beta_sa(s1.B_hat_Z, s1.xi_hat, s1.phi_hat, z, levels)
             : estimate_beta_wa(s1.B_hat_Z, s1.xi_hat, s1.phi_hat, z, levels,
                                norm);
}

/// Induced blocks after removing the covariate effect. `stage1` is the
/// output of algo1 on the same graph.
inline Algo2Result algo2(const Graph& graph, const Labels& z,
                         const Algo1Result& stage1, int levels,
                         const Algo2Options& opt) {
  if (static_cast<int>(z.size()) != graph.n())
    throw InferenceError("covariate length does not match the graph");
  Algo2Result r;
  r.method = opt.method;
  if (opt.beta_known) {
    r.beta_hat = *opt.beta_known;
    r.beta_was_known = true;
  } else {
    r.beta_hat = estimate_beta(stage1, z, levels, opt.method,
                               opt.wa_normalization);
  }
  r.A_tilde = adjust_for_covariate(graph.A, z, r.beta_hat);
  const Spectrum spec(r.A_tilde, opt.spectral);
  r.d_tilde = opt.d2 ? *opt.d2 : spec.select(opt.elbow).chosen_d;
  r.embedding = spec.embed(r.d_tilde);
  r.k_induced = opt.k_induced ? *opt.k_induced : stage1.induced;
  if (r.k_induced < 1) throw InferenceError("induced block count must be >= 1");
  if (opt.reselect) {
    r.fit = select_k_bic(r.embedding.Y, 1,
                         std::min(graph.n(), std::max(r.k_induced * 2, 2)),
                         opt.seed, opt.gmm, opt.structures);
  } else {
    r.fit = select_k_bic(r.embedding.Y, r.k_induced, r.k_induced, opt.seed,
                         opt.gmm, opt.structures);
  }
  r.k_induced = r.fit.K;
  r.single_cluster = r.k_induced < 2;
  r.tau_tilde = r.fit.labels;
  return r;
}

/// Runs algo1 first, then algo2 on its output.
inline Algo2Result algo2(const Graph& graph, const Labels& z,
                         const Algo1Options& o1, const Algo2Options& o2) {
  return algo2(graph, z, algo1(graph, o1), o1.levels, o2);
}

}  // namespace sbmcov
