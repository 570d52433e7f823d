#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbmcov/linalg.hpp"

namespace sbmcov {

class SpectralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Estimated latent positions. Columns follow the signature: d_plus
/// positive-eigenvalue columns first, then d_minus negative ones.
struct Embedding {
  Matrix Y;
  int d_plus = 0;
  int d_minus = 0;
  Vector eigenvalues;  // matches column order
  bool zero_eigenvalue = false;

  [[nodiscard]] int d() const { return static_cast<int>(Y.cols()); }
  /// diag(1,...,1,-1,...,-1)
  [[nodiscard]] Vector signature() const {
    Vector s(d());
    for (int i = 0; i < d(); ++i) s(i) = i < d_plus ? 1.0 : -1.0;
    return s;
  }
};

struct ScreeSelection {
  int chosen_d = 1;
  std::vector<double> profile_loglik;  // first elbow, split q = 1..p-1
  int elbow_index = 1;
  std::vector<int> elbows;             // cumulative elbow positions
};

struct SpectralOptions {
  int dense_limit = 4096;   // larger graphs use Lanczos
  int max_candidates = 100;
  int elbow = 1;
};

inline void check_symmetric(const Matrix& A) {
  if (A.rows() != A.cols()) throw SpectralError("matrix must be square");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-10 * scale))
    throw SpectralError("matrix is not symmetric (max asymmetry " +
                        std::to_string(asym) + ")");
}

namespace detail {

// Zhu-Ghodsi profile log-likelihood for splitting x (descending) after q.
inline std::vector<double> profile_loglik(const std::vector<double>& x) {
  const auto p = static_cast<int>(x.size());
  std::vector<double> out;
  double mean_sq = 0.0;
  for (double v : x) mean_sq += v * v;
  mean_sq /= p;
  const double floor = std::max(1e-12 * mean_sq,
                                std::numeric_limits<double>::min());
  for (int q = 1; q < p; ++q) {
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < q; ++i) m1 += x[i];
    for (int i = q; i < p; ++i) m2 += x[i];
    m1 /= q;
    m2 /= p - q;
    double ss = 0.0;
    for (int i = 0; i < q; ++i) ss += (x[i] - m1) * (x[i] - m1);
    for (int i = q; i < p; ++i) ss += (x[i] - m2) * (x[i] - m2);
    double var = ss / std::max(p - 2, 1);
    var = std::max(var, floor);
    double ll = 0.0;
    for (int i = 0; i < p; ++i) {
      const double r = x[i] - (i < q ? m1 : m2);
      ll += -0.5 * std::log(2.0 * std::numbers::pi * var) - r * r / (2 * var);
    }
    out.push_back(ll);
  }
  return out;
}

inline int argmax_first(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace detail

/// Scree elbow by profile likelihood. `magnitudes` must be sorted
/// descending; elbows beyond the first recurse on the tail.
inline ScreeSelection select_dimension(std::vector<double> magnitudes,
                                       int max_candidates = 100,
                                       int elbow = 1) {
  if (magnitudes.empty()) throw SpectralError("empty spectrum");
  if (elbow < 1) throw SpectralError("elbow must be >= 1");
  if (!std::is_sorted(magnitudes.rbegin(), magnitudes.rend()))
    throw SpectralError("magnitudes must be sorted in descending order");
  if (static_cast<int>(magnitudes.size()) > max_candidates)
    magnitudes.resize(static_cast<std::size_t>(max_candidates));
  ScreeSelection sel;
  if (magnitudes.size() < 2) {
    sel.chosen_d = 1;
    sel.elbows = {1};
    return sel;
  }
  int offset = 0;
  for (int e = 1; e <= elbow; ++e) {
    std::vector<double> tail(magnitudes.begin() + offset, magnitudes.end());
    if (tail.size() < 2) break;
    auto ll = detail::profile_loglik(tail);
    if (e == 1) sel.profile_loglik = ll;
    offset += detail::argmax_first(ll) + 1;
    sel.elbows.push_back(offset);
    sel.elbow_index = e;
  }
  sel.chosen_d = sel.elbows.back();
  return sel;
}

inline ScreeSelection select_dimension(const Vector& magnitudes,
                                       int max_candidates = 100,
                                       int elbow = 1) {
  return select_dimension(
      std::vector<double>(magnitudes.data(),
                          magnitudes.data() + magnitudes.size()),
      max_candidates, elbow);
}

/// Spectrum of a symmetric matrix, computed once and queried for both the
/// scree magnitudes and the leading eigenpairs.
class Spectrum {
 public:
  Spectrum(const Matrix& A, const SpectralOptions& opt = {})
      : opt_(opt), n_(static_cast<int>(A.rows())) {
    check_symmetric(A);
    if (n_ < 2) throw SpectralError("need at least 2 vertices");
    if (n_ <= opt.dense_limit) {
      dense_.emplace(A);
    } else {
      const int k = std::min(n_ - 1, std::max(opt.max_candidates, 1));
      lanczos_ = lanczos_top_magnitude(A, k);
    }
  }

  [[nodiscard]] int n() const { return n_; }

  /// Leading magnitudes, descending; at most min(n-1, max_candidates).
  [[nodiscard]] Vector magnitudes() const {
    const int count = std::min(n_ - 1, opt_.max_candidates);
    if (dense_) return magnitudes_descending(dense_->eigenvalues(), count);
    Vector m = lanczos_.values.cwiseAbs();
    std::sort(m.data(), m.data() + m.size(), std::greater<>());
    return m.head(std::min<Eigen::Index>(count, m.size()));
  }

  [[nodiscard]] ScreeSelection select(int elbow) const {
    return select_dimension(magnitudes(), opt_.max_candidates, elbow);
  }

  [[nodiscard]] Embedding embed(int d) const {
    if (d < 1 || d >= n_)
      throw SpectralError("embedding dimension must satisfy 1 <= d < n");
    EigenPairs p;
    if (dense_) {
      p = dense_->top_magnitude(d);
    } else {
      if (d > lanczos_.values.size())
        throw SpectralError("d exceeds the iterative solver's candidates");
      p = take_leading(lanczos_, d);
    }
    canonicalize_signs(p.vectors);
    Embedding e;
    e.d_plus = p.d_plus;
    e.d_minus = p.d_minus;
    e.eigenvalues = p.values;
    e.Y = p.vectors;
    const double scale = std::max(1.0, std::abs(p.values.size() ? p.values.cwiseAbs().maxCoeff() : 0.0));
    for (int j = 0; j < d; ++j) {
      const double lam = p.values(j);
      if (std::abs(lam) <= 1e-12 * scale) {
        e.zero_eigenvalue = true;
        e.Y.col(j).setZero();
      } else {
        e.Y.col(j) *= std::sqrt(std::abs(lam));
      }
    }
    // Zero eigenvalues count as positive signature columns.
    e.d_plus = d - e.d_minus;
    return e;
  }

 private:
  // The first d of k magnitude-ordered pairs, re-sorted by sign.
  static EigenPairs take_leading(const EigenPairs& all, int d) {
    const auto k = static_cast<int>(all.values.size());
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return std::abs(all.values(a)) > std::abs(all.values(b));
    });
    idx.resize(static_cast<std::size_t>(d));
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      const bool pa = all.values(a) > 0.0, pb = all.values(b) > 0.0;
      if (pa != pb) return pa;
      return std::abs(all.values(a)) > std::abs(all.values(b));
    });
    EigenPairs out;
    out.values.resize(d);
    out.vectors.resize(all.vectors.rows(), d);
    for (int c = 0; c < d; ++c) {
      const int i = idx[static_cast<std::size_t>(c)];
      out.values(c) = all.values(i);
      out.vectors.col(c) = all.vectors.col(i);
      if (all.values(i) > 0.0) ++out.d_plus;
      else if (all.values(i) < 0.0) ++out.d_minus;
    }
    return out;
  }

  SpectralOptions opt_;
  int n_;
  std::optional<DenseSymmetricEigen> dense_;
  EigenPairs lanczos_;
};

/// Adjacency spectral embedding: Y = E_d |Lambda_d|^{1/2} over the d
/// eigenpairs of largest magnitude.
inline Embedding ase(const Matrix& A, int d, const SpectralOptions& opt = {}) {
  return Spectrum(A, opt).embed(d);
}

}  // namespace sbmcov
