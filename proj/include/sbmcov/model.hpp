#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbmcov/rng.hpp"

namespace sbmcov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Expanded block connectivity: (k,z),(l,z') -> B(k,l) + beta * [z == z'].
/// Expanded index is k * levels + z (block-major, 0-based).
inline Matrix build_bz(const Matrix& B, double beta, int levels) {
  const auto K = static_cast<int>(B.rows());
  const int m = K * levels;
  Matrix bz(m, m);
  for (int k = 0; k < K; ++k)
    for (int z = 0; z < levels; ++z)
      for (int l = 0; l < K; ++l)
        for (int w = 0; w < levels; ++w)
          bz(k * levels + z, l * levels + w) = B(k, l) + (z == w ? beta : 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (!(bz(i, j) >= 0.0 && bz(i, j) <= 1.0))
        throw ModelError("B_Z entry (" + std::to_string(i) + "," +
                         std::to_string(j) + ") = " +
                         std::to_string(bz(i, j)) + " is outside [0,1]");
  return bz;
}

/// SBM whose edge probabilities gain `beta` when both endpoints share a
/// categorical covariate level.
struct CovariateBlockModel {
  Matrix B;       // K x K
  Vector pi;      // block probabilities
  double beta = 0.0;
  int levels = 2;  // c
  Vector piZ;     // K*c expanded probabilities, block-major

  CovariateBlockModel() = default;
  CovariateBlockModel(Matrix B_, Vector pi_, double beta_, int levels_,
                      Vector piZ_)
      : B(std::move(B_)), pi(std::move(pi_)), beta(beta_), levels(levels_),
        piZ(std::move(piZ_)) {
    validate();
  }

  /// Uniform block and level probabilities.
  static CovariateBlockModel uniform(Matrix B, double beta, int levels) {
    const auto K = B.rows();
    Vector pi = Vector::Constant(K, 1.0 / static_cast<double>(K));
    Vector piZ = Vector::Constant(K * levels,
                                  1.0 / static_cast<double>(K * levels));
    return {std::move(B), std::move(pi), beta, levels, std::move(piZ)};
  }

  [[nodiscard]] int blocks() const { return static_cast<int>(B.rows()); }
  [[nodiscard]] int expanded() const { return blocks() * levels; }
  [[nodiscard]] Matrix bz() const { return build_bz(B, beta, levels); }

  void validate() const {
    const auto K = B.rows();
    if (K < 1 || B.cols() != K) throw ModelError("B must be square");
    if (levels < 2) throw ModelError("covariate needs at least 2 levels");
    if ((B - B.transpose()).cwiseAbs().maxCoeff() != 0.0)
      throw ModelError("B must be symmetric");
    for (Eigen::Index i = 0; i < B.size(); ++i)
      if (!(B.data()[i] >= 0.0 && B.data()[i] <= 1.0))
        throw ModelError("B entries must lie in [0,1]");
    check_simplex(pi, K, "pi");
    check_simplex(piZ, K * levels, "piZ");
    for (Eigen::Index k = 0; k < K; ++k) {
      const double s = piZ.segment(k * levels, levels).sum();
      if (std::abs(s - pi(k)) > 1e-12)
        throw ModelError("piZ does not marginalize to pi in block " +
                         std::to_string(k));
    }
    (void)bz();
  }

 private:
  static void check_simplex(const Vector& v, Eigen::Index size,
                            const char* name) {
    if (v.size() != size)
      throw ModelError(std::string(name) + " has wrong length");
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!(v(i) > 0.0))
        throw ModelError(std::string(name) + " entries must be positive");
    if (std::abs(v.sum() - 1.0) > 1e-12)
      throw ModelError(std::string(name) + " must sum to 1");
  }
};

/// B = nu nu^T with nu = (p, q).
inline CovariateBlockModel rank_one_model(double p, double q, double beta,
                                          int levels = 2) {
  if (!(p > 0.0 && p <= q && q < 1.0))
    throw ModelError("rank-one model needs 0 < p <= q < 1");
  Matrix B(2, 2);
  B << p * p, p * q, p * q, q * q;
  return CovariateBlockModel::uniform(std::move(B), beta, levels);
}

/// a on the diagonal, b elsewhere.
inline CovariateBlockModel homogeneous_model(double a, double b, double beta,
                                             int K = 2, int levels = 2) {
  if (!(b > 0.0 && b <= a && a < 1.0))
    throw ModelError("homogeneous model needs 0 < b <= a < 1");
  if (K < 1) throw ModelError("K must be positive");
  Matrix B = Matrix::Constant(K, K, b);
  B.diagonal().setConstant(a);
  return CovariateBlockModel::uniform(std::move(B), beta, levels);
}

struct Graph {
  Matrix A;
  [[nodiscard]] int n() const { return static_cast<int>(A.rows()); }
};

/// Sampled graph with its ground truth. Labels are 0-based and satisfy
/// xi = tau * c + z.
struct LabeledSample {
  Graph graph;
  Labels tau;
  Labels xi;
  Labels z;
};

/// Expanded labels in block-major order with exact counts n * piZ.
inline Labels balanced_labels(const CovariateBlockModel& model, int n) {
  const int m = model.expanded();
  if (n < m) throw ModelError("balanced sampling needs n >= K*c");
  Labels xi;
  xi.reserve(static_cast<std::size_t>(n));
  int assigned = 0;
  for (int j = 0; j < m; ++j) {
    const double want = model.piZ(j) * n;
    const auto cnt = static_cast<int>(std::llround(want));
    if (std::abs(want - cnt) > 1e-9 || cnt < 1)
      throw ModelError("n * piZ must be a positive integer for every "
                       "expanded block in balanced mode");
    xi.insert(xi.end(), static_cast<std::size_t>(cnt), j);
    assigned += cnt;
  }
  if (assigned != n) throw ModelError("balanced counts do not add up to n");
  return xi;
}

/// Draws A given expanded labels. Upper triangle once, mirrored, zero
/// diagonal; u < P gives an edge so P = 1 is always an edge.
inline LabeledSample sample_with_labels(const CovariateBlockModel& model,
                                        Labels xi, Rng& rng) {
  const Matrix bz = model.bz();
  const auto n = static_cast<int>(xi.size());
  for (int v : xi)
    if (v < 0 || v >= model.expanded())
      throw ModelError("expanded label out of range");
  LabeledSample s;
  s.graph.A = Matrix::Zero(n, n);
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < j; ++i) {
      const double a = rng.uniform() < bz(xi[i], xi[j]) ? 1.0 : 0.0;
      s.graph.A(i, j) = a;
      s.graph.A(j, i) = a;
    }
  s.tau.resize(xi.size());
  s.z.resize(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    s.tau[i] = xi[i] / model.levels;
    s.z[i] = xi[i] % model.levels;
  }
  s.xi = std::move(xi);
  return s;
}

/// Samples a labeled graph. Balanced mode uses exact counts in block-major
/// vertex order; otherwise labels are i.i.d. from piZ.
inline LabeledSample sample(const CovariateBlockModel& model, int n,
                            std::uint64_t seed, bool balanced = true) {
  if (n < 2) throw ModelError("need at least 2 vertices");
  Rng rng(seed);
  Labels xi;
  if (balanced) {
    xi = balanced_labels(model, n);
  } else {
    std::vector<double> cdf(static_cast<std::size_t>(model.expanded()));
    std::partial_sum(model.piZ.data(), model.piZ.data() + model.piZ.size(),
                     cdf.begin());
    xi.resize(static_cast<std::size_t>(n));
    for (auto& v : xi) {
      const double u = rng.uniform() * cdf.back();
      v = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) -
                           cdf.begin());
      if (v >= model.expanded()) v = model.expanded() - 1;
    }
  }
  return sample_with_labels(model, std::move(xi), rng);
}

/// Probability matrix P_ij = B_Z(xi_i, xi_j) with zero diagonal.
inline Matrix probability_matrix(const CovariateBlockModel& model,
                                 const Labels& xi) {
  const Matrix bz = model.bz();
  const auto n = static_cast<Eigen::Index>(xi.size());
  Matrix P(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      P(i, j) = i == j ? 0.0 : bz(xi[i], xi[j]);
  return P;
}

}  // namespace sbmcov
