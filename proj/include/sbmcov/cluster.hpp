#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbmcov/rng.hpp"

namespace sbmcov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

class ClusterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Covariance { Full, Diagonal, Spherical, Tied };

inline const char* to_string(Covariance c) {
  switch (c) {
    case Covariance::Full: return "full";
    case Covariance::Diagonal: return "diagonal";
    case Covariance::Spherical: return "spherical";
    case Covariance::Tied: return "tied";
  }
  return "?";
}

inline Covariance covariance_from_string(const std::string& s) {
  if (s == "full") return Covariance::Full;
  if (s == "diagonal" || s == "diag") return Covariance::Diagonal;
  if (s == "spherical") return Covariance::Spherical;
  if (s == "tied") return Covariance::Tied;
  throw ClusterError("unknown covariance structure '" + s + "'");
}

/// Free parameters of a K-component mixture in d dimensions.
inline double gmm_parameter_count(int K, int d, Covariance cov) {
  const double base = (K - 1) + static_cast<double>(K) * d;
  const double tri = d * (d + 1) / 2.0;
  switch (cov) {
    case Covariance::Full: return base + K * tri;
    case Covariance::Diagonal: return base + static_cast<double>(K) * d;
    case Covariance::Spherical: return base + K;
    case Covariance::Tied: return base + tri;
  }
  return base;
}

struct GmmOptions {
  int restarts = 10;
  int max_iter = 500;
  double rel_tol = 1e-8;
  int kmeans_iter = 20;
  // When positive, every restart runs this many EM iterations and only the
  // best one is continued to convergence.
  int screen_iter = 0;
  // Seed k-means++ in SVD-whitened coordinates.
  bool whiten_init = true;
};

struct GmmFit {
  int K = 0;
  Matrix means;                      // K x d
  std::vector<Matrix> covariances;   // K of d x d
  Vector weights;
  Labels labels;
  double loglik = -std::numeric_limits<double>::infinity();
  double bic = std::numeric_limits<double>::infinity();
  Covariance covariance = Covariance::Full;
  std::vector<double> loglik_trace;
  int iterations = 0;
  bool converged = false;
  bool floor_engaged = false;
  bool degenerate = false;
};

/// Smallest allowed covariance eigenvalue for data X.
inline double variance_floor(const Matrix& X) {
  const auto n = static_cast<double>(X.rows());
  const auto d = static_cast<double>(X.cols());
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const double tr = (X.rowwise() - mean).squaredNorm() / n;
  const double eps = 1e-6 * tr / d;
  return eps > 0.0 ? eps : 1e-10;
}

namespace detail {

inline double log_sum_exp(const double* v, int k) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

// Clamps eigenvalues of a symmetric matrix at `floor`. Returns whether any
// eigenvalue was raised.
inline bool clamp_spectrum(Matrix& S, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  Vector ev = es.eigenvalues();
  if (ev.minCoeff() >= floor) return false;
  ev = ev.cwiseMax(floor);
  S = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  S = 0.5 * (S + S.transpose());
  return true;
}

inline Matrix whiten(const Matrix& X) {
  const Eigen::RowVectorXd mean = X.colwise().mean();
  Matrix C = X.rowwise() - mean;
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double n = static_cast<double>(X.rows());
  const double tol = s.size() ? s(0) * 1e-12 : 0.0;
  Matrix W = C * svd.matrixV();
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    W.col(j) *= s(j) > tol ? std::sqrt(n) / s(j) : 0.0;
  return W;
}

// k-means++ seeding followed by Lloyd iterations; returns hard labels.
inline Labels kmeans(const Matrix& X, int K, Rng& rng, int iters) {
  const auto n = static_cast<int>(X.rows());
  Matrix C(K, X.cols());
  std::vector<double> d2(static_cast<std::size_t>(n),
                         std::numeric_limits<double>::infinity());
  C.row(0) = X.row(static_cast<Eigen::Index>(rng.below(n)));
  for (int k = 1; k < K; ++k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (X.row(i) - C.row(k - 1)).squaredNorm());
      total += d2[i];
    }
    int pick = static_cast<int>(rng.below(n));
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (int i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    }
    C.row(k) = X.row(pick);
  }
  Labels lab(static_cast<std::size_t>(n), 0);
  for (int it = 0; it <= iters; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) {
        const double dd = (X.row(i) - C.row(k)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = k;
        }
      }
      changed |= lab[i] != best;
      lab[i] = best;
    }
    if (it > 0 && !changed) break;
    Matrix sum = Matrix::Zero(K, X.cols());
    std::vector<int> cnt(static_cast<std::size_t>(K), 0);
    for (int i = 0; i < n; ++i) {
      sum.row(lab[i]) += X.row(i);
      ++cnt[lab[i]];
    }
    for (int k = 0; k < K; ++k)
      if (cnt[k] > 0) C.row(k) = sum.row(k) / cnt[k];
      else C.row(k) = X.row(static_cast<Eigen::Index>(rng.below(n)));
  }
  return lab;
}

class EmState {
 public:
  EmState(const Matrix& X, int K, Covariance cov, double floor)
      : X_(X), n_(static_cast<int>(X.rows())), d_(static_cast<int>(X.cols())),
        K_(K), cov_(cov), floor_(floor), resp_(K, n_) {}

  void init_from_labels(const Labels& lab) {
    resp_.setZero();
    for (int i = 0; i < n_; ++i) resp_(lab[i], i) = 1.0;
    m_step();
  }

  // E-step at the current parameters. Returns the log-likelihood.
  double e_step() {
    // logp and resp are K x n so each vertex's column is contiguous.
    for (int k = 0; k < K_; ++k) {
      Eigen::LLT<Matrix> llt(cov_k_[k]);
      const double logdet =
          2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
      diff_ = (X_.rowwise() - mu_.row(k)).transpose();
      llt.matrixL().solveInPlace(diff_);
      const double lw = w_(k) > 0.0 ? std::log(w_(k))
                                    : -std::numeric_limits<double>::infinity();
      const double c = lw - 0.5 * (d_ * std::log(2.0 * std::numbers::pi) +
                                   logdet);
      resp_.row(k) = (c - 0.5 * diff_.colwise().squaredNorm().array()).matrix();
    }
    double ll = 0.0;
    for (int i = 0; i < n_; ++i) {
      double* col = resp_.col(i).data();
      const double lse = log_sum_exp(col, K_);
      ll += lse;
      for (int k = 0; k < K_; ++k) col[k] = std::exp(col[k] - lse);
    }
    return ll;
  }

  void m_step() {
    const Vector Nk = resp_.rowwise().sum();
    if (mu_.size() == 0) {
      mu_ = Matrix::Zero(K_, d_);
      cov_k_.assign(static_cast<std::size_t>(K_),
                    Matrix::Identity(d_, d_) * floor_);
    }
    w_ = Nk / static_cast<double>(n_);
    Matrix tied = Matrix::Zero(d_, d_);
    for (int k = 0; k < K_; ++k) {
      if (Nk(k) <= 1e-12 * n_) {
        degenerate_ = true;
        continue;  // keep previous mean and covariance
      }
      mu_.row(k) = (resp_.row(k) * X_) / Nk(k);
      diff_ = (X_.rowwise() - mu_.row(k)).transpose();  // d x n
      Matrix S = (diff_.array().rowwise() * resp_.row(k).array()).matrix() *
                 diff_.transpose();
      if (cov_ == Covariance::Tied) {
        tied += S;
        continue;
      }
      S /= Nk(k);
      if (cov_ == Covariance::Diagonal) {
        Matrix D = Matrix::Zero(d_, d_);
        for (int j = 0; j < d_; ++j) D(j, j) = S(j, j);
        S = D;
      } else if (cov_ == Covariance::Spherical) {
        S = Matrix::Identity(d_, d_) * (S.trace() / d_);
      } else {
        S = 0.5 * (S + S.transpose());
      }
      floor_hit_ |= clamp_spectrum(S, floor_);
      cov_k_[k] = S;
    }
    if (cov_ == Covariance::Tied) {
      tied /= static_cast<double>(n_);
      tied = 0.5 * (tied + tied.transpose());
      floor_hit_ |= clamp_spectrum(tied, floor_);
      for (auto& c : cov_k_) c = tied;
    }
  }

  [[nodiscard]] GmmFit result(double ll) const {
    GmmFit f;
    f.K = K_;
    f.means = mu_;
    f.covariances = cov_k_;
    f.weights = w_;
    f.loglik = ll;
    f.covariance = cov_;
    f.floor_engaged = floor_hit_;
    f.degenerate = degenerate_;
    f.labels.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      // argmax, lowest index on ties
      int best = 0;
      for (int k = 1; k < K_; ++k)
        if (resp_(k, i) > resp_(best, i)) best = k;
      f.labels[i] = best;
    }
    f.bic = -2.0 * ll + gmm_parameter_count(K_, d_, cov_) * std::log(n_);
    return f;
  }

  // Runs EM from the current parameters; appends to `trace`.
  double run(int max_iter, double rel_tol, std::vector<double>& trace,
             bool& converged) {
    double ll = e_step();
    trace.push_back(ll);
    converged = false;
    for (int it = 0; it < max_iter; ++it) {
      m_step();
      const double next = e_step();
      assert(next >= ll - 1e-9 * std::max(1.0, std::abs(ll)));
      trace.push_back(next);
      const bool done = std::abs(next - ll) <= rel_tol * std::abs(next);
      ll = next;
      if (done) {
        converged = true;
        break;
      }
    }
    return ll;
  }

 private:
  const Matrix& X_;
  int n_, d_, K_;
  Covariance cov_;
  double floor_;
  Matrix resp_;  // K x n
  Matrix diff_;
  Matrix mu_;
  std::vector<Matrix> cov_k_;
  Vector w_;
  bool floor_hit_ = false;
  bool degenerate_ = false;
};

}  // namespace detail

/// Gaussian mixture by EM, best log-likelihood over k-means++ restarts.
inline GmmFit fit_gmm(const Matrix& X, int K, std::uint64_t seed,
                      const GmmOptions& opt = {},
                      Covariance cov = Covariance::Full) {
  const auto n = static_cast<int>(X.rows());
  if (K < 1) throw ClusterError("K must be positive");
  if (n < K)
    throw ClusterError("need at least K points (n=" + std::to_string(n) +
                       ", K=" + std::to_string(K) + ")");
  if (X.cols() < 1) throw ClusterError("data has no columns");
  if (!X.allFinite()) throw ClusterError("data contains non-finite values");
  const double floor = variance_floor(X);
  const Matrix W = opt.whiten_init ? detail::whiten(X) : X;
  const int restarts = K == 1 ? 1 : std::max(1, opt.restarts);

  struct Run {
    detail::EmState state;
    std::vector<double> trace;
    double ll;
    bool converged;
  };
  std::vector<Run> runs;
  runs.reserve(static_cast<std::size_t>(restarts));
  const int first_iter = opt.screen_iter > 0 ? opt.screen_iter : opt.max_iter;
  for (int r = 0; r < restarts; ++r) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(r));
    Labels init = K == 1 ? Labels(static_cast<std::size_t>(n), 0)
                         : detail::kmeans(W, K, rng, opt.kmeans_iter);
    Run run{detail::EmState(X, K, cov, floor), {}, 0.0, false};
    run.state.init_from_labels(init);
    run.ll = run.state.run(first_iter, opt.rel_tol, run.trace, run.converged);
    runs.push_back(std::move(run));
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].ll > runs[best].ll) best = r;
  Run& b = runs[best];
  if (opt.screen_iter > 0 && !b.converged) {
    std::vector<double> more;
    b.ll = b.state.run(opt.max_iter, opt.rel_tol, more, b.converged);
    b.trace.insert(b.trace.end(), more.begin() + 1, more.end());
  }
  GmmFit f = b.state.result(b.ll);
  f.loglik_trace = std::move(b.trace);
  f.iterations = static_cast<int>(f.loglik_trace.size()) - 1;
  f.converged = b.converged;
  return f;
}

/// Fits every K in [kmin, kmax] (and every listed covariance structure) and
/// returns the fit with the smallest BIC; ties go to the earlier candidate.
inline GmmFit select_k_bic(const Matrix& X, int kmin, int kmax,
                           std::uint64_t seed, const GmmOptions& opt = {},
                           const std::vector<Covariance>& structures = {
                               Covariance::Full}) {
  if (kmin < 1 || kmax < kmin) throw ClusterError("invalid K range");
  if (kmax > X.rows()) throw ClusterError("K range exceeds point count");
  if (structures.empty()) throw ClusterError("no covariance structure");
  GmmFit best;
  bool have = false;
  for (int k = kmin; k <= kmax; ++k)
    for (Covariance c : structures) {
      GmmFit f = fit_gmm(X, k, seed, opt, c);
      if (!have || f.bic < best.bic) {
        best = std::move(f);
        have = true;
      }
    }
  return best;
}

/// Hubert-Arabie adjusted Rand index.
inline double ari(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) throw ClusterError("label lengths differ");
  if (a.size() < 2) throw ClusterError("need at least 2 labels");
  std::map<int, int> ia, ib;
  for (int v : a) ia.emplace(v, static_cast<int>(ia.size()));
  for (int v : b) ib.emplace(v, static_cast<int>(ib.size()));
  std::vector<double> table(ia.size() * ib.size(), 0.0), ra(ia.size(), 0.0),
      rb(ib.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int x = ia[a[i]], y = ib[b[i]];
    table[static_cast<std::size_t>(x) * ib.size() + y] += 1.0;
    ra[x] += 1.0;
    rb[y] += 1.0;
  }
  auto c2 = [](double v) { return v * (v - 1.0) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (double v : table) sum_ij += c2(v);
  for (double v : ra) sum_a += c2(v);
  for (double v : rb) sum_b += c2(v);
  const double total = c2(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (sum_ij - expected) / denom;
}

}  // namespace sbmcov
