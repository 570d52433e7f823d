#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbmcov/model.hpp"
#include "sbmcov/optimize.hpp"

namespace sbmcov {

class ChernoffError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point masses nu (rows) with mixing weights and an indefinite signature.
struct LatentConfiguration {
  Matrix nu;
  Vector weights;
  int d_plus = 0;
  int d_minus = 0;

  [[nodiscard]] int d() const { return static_cast<int>(nu.cols()); }
  [[nodiscard]] int m() const { return static_cast<int>(nu.rows()); }
  [[nodiscard]] Vector signature() const {
    Vector s(d());
    for (int i = 0; i < d(); ++i) s(i) = i < d_plus ? 1.0 : -1.0;
    return s;
  }
  /// nu I nu^T
  [[nodiscard]] Matrix gram() const {
    return nu * signature().asDiagonal() * nu.transpose();
  }
};

struct PairChernoff {
  double value = 0.0;
  double t_star = 0.5;
};

namespace detail {

inline double log_det_spd(const Matrix& S) {
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success)
    throw ChernoffError("covariance is not positive definite");
  return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
}

}  // namespace detail

/// Chernoff information between N(mu1, S1) and N(mu2, S2).
inline PairChernoff gaussian_chernoff(const Vector& mu1, const Matrix& S1,
                                      const Vector& mu2, const Matrix& S2) {
  if (mu1.size() != mu2.size() || S1.rows() != mu1.size() ||
      S2.rows() != mu2.size() || S1.cols() != S1.rows() ||
      S2.cols() != S2.rows())
    throw ChernoffError("dimension mismatch");
  const double ld1 = detail::log_det_spd(S1), ld2 = detail::log_det_spd(S2);
  const Vector diff = mu1 - mu2;
  auto f = [&](double t) {
    const Matrix St = t * S1 + (1.0 - t) * S2;
    Eigen::LLT<Matrix> llt(St);
    if (llt.info() != Eigen::Success)
      throw ChernoffError("singular interpolated covariance");
    const double quad = diff.dot(llt.solve(diff));
    const double ldt = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    return 0.5 * t * (1.0 - t) * quad +
           0.5 * (ldt - t * ld1 - (1.0 - t) * ld2);
  };
  const Maximum m = maximize_unit_interval(f);
  return {m.value, m.x};
}

/// Second-moment matrix sum_m w_m nu_m nu_m^T.
inline Matrix second_moment(const LatentConfiguration& c) {
  return c.nu.transpose() * c.weights.asDiagonal() * c.nu;
}

/// Limiting covariance of the embedded positions of block k
/// (unscaled by 1/n).
inline Matrix limiting_covariance(const LatentConfiguration& c, int k) {
  const Matrix delta = second_moment(c);
  Eigen::FullPivLU<Matrix> lu(delta);
  if (!lu.isInvertible()) throw ChernoffError("second-moment is singular");
  const Matrix di = lu.inverse();
  const Vector sig = c.signature();
  const Eigen::RowVectorXd nk = c.nu.row(k);
  Matrix E = Matrix::Zero(c.d(), c.d());
  for (int m = 0; m < c.m(); ++m) {
    const double x = (nk.array() * sig.transpose().array() *
                      c.nu.row(m).array()).sum();
    E += c.weights(m) * x * (1.0 - x) * c.nu.row(m).transpose() *
         c.nu.row(m);
  }
  Matrix S = sig.asDiagonal() * di * E * di * sig.asDiagonal();
  return 0.5 * (S + S.transpose());
}

inline std::vector<Matrix> limiting_covariances(const LatentConfiguration& c) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(c.m()));
  for (int k = 0; k < c.m(); ++k) out.push_back(limiting_covariance(c, k));
  return out;
}

/// sup_t t(1-t) (nu_k - nu_l)^T (t S_k + (1-t) S_l)^{-1} (nu_k - nu_l).
inline PairChernoff c_kl(const LatentConfiguration& c,
                         const std::vector<Matrix>& covs, int k, int l) {
  if (k == l) throw ChernoffError("C_kl needs distinct blocks");
  const Vector diff = (c.nu.row(k) - c.nu.row(l)).transpose();
  auto f = [&](double t) {
    const Matrix St = t * covs[k] + (1.0 - t) * covs[l];
    Eigen::LDLT<Matrix> ldlt(St);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 0.0)
      throw ChernoffError("singular interpolated covariance");
    return t * (1.0 - t) * diff.dot(ldlt.solve(diff));
  };
  const Maximum m = maximize_unit_interval(f);
  return {m.value, m.x};
}

inline PairChernoff c_kl(const LatentConfiguration& c, int k, int l) {
  return c_kl(c, limiting_covariances(c), k, l);
}

/// Pairwise C over all blocks of a configuration; upper triangle filled.
struct PairwiseChernoff {
  Matrix C;       // NaN on and below the diagonal
  Matrix t_star;
  double minimum = std::numeric_limits<double>::infinity();
  int arg_k = -1, arg_l = -1;
};

inline PairwiseChernoff pairwise_chernoff(const LatentConfiguration& c) {
  const auto covs = limiting_covariances(c);
  const int m = c.m();
  PairwiseChernoff p;
  p.C = Matrix::Constant(m, m, std::numeric_limits<double>::quiet_NaN());
  p.t_star = p.C;
  for (int k = 0; k < m; ++k)
    for (int l = k + 1; l < m; ++l) {
      const PairChernoff r = c_kl(c, covs, k, l);
      p.C(k, l) = r.value;
      p.t_star(k, l) = r.t_star;
      if (r.value < p.minimum) {
        p.minimum = r.value;
        p.arg_k = k;
        p.arg_l = l;
      }
    }
  return p;
}

/// Positions E |Lambda|^{1/2} from the nonzero eigenpairs of a symmetric
/// matrix, positive eigenvalues first.
inline LatentConfiguration positions_from_matrix(const Matrix& M,
                                                 const Vector& weights,
                                                 double tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  const Vector& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<int> pos, neg;
  for (int i = static_cast<int>(ev.size()) - 1; i >= 0; --i)
    if (ev(i) > tol * scale) pos.push_back(i);
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) < -tol * scale) neg.push_back(i);
  LatentConfiguration c;
  c.d_plus = static_cast<int>(pos.size());
  c.d_minus = static_cast<int>(neg.size());
  c.nu.resize(M.rows(), c.d_plus + c.d_minus);
  int col = 0;
  for (int i : pos) c.nu.col(col++) = es.eigenvectors().col(i) * std::sqrt(ev(i));
  for (int i : neg) c.nu.col(col++) = es.eigenvectors().col(i) * std::sqrt(-ev(i));
  c.weights = weights;
  return c;
}

/// Row-by-row Cholesky factor of a positive semidefinite matrix; columns
/// whose pivot vanishes are dropped.
inline Matrix semidefinite_cholesky(const Matrix& M, double tol = 1e-12) {
  const auto n = static_cast<int>(M.rows());
  Matrix L = Matrix::Zero(n, n);
  std::vector<int> pivots;
  for (int i = 0; i < n; ++i) {
    const int r = static_cast<int>(pivots.size());
    for (int jj = 0; jj < r; ++jj) {
      const int j = pivots[static_cast<std::size_t>(jj)];
      L(i, jj) = (M(i, j) - L.row(i).head(jj).dot(L.row(j).head(jj))) /
                 L(j, jj);
    }
    const double rem = M(i, i) - L.row(i).head(r).squaredNorm();
    if (rem > tol) {
      L(i, r) = std::sqrt(rem);
      pivots.push_back(i);
    } else if (rem < -1e3 * tol) {
      throw ChernoffError("matrix is not positive semidefinite");
    }
  }
  return L.leftCols(static_cast<Eigen::Index>(pivots.size()));
}

/// Closed-form pieces for the two-level (c = 2) models.
namespace closed_form {

inline double phi(double x) { return x * (1.0 - x); }

// Rank-one model, expanded blocks (1,1),(1,2),(2,1),(2,2).
inline double c12_rank_one(double p, double q, double beta) {
  return beta * beta /
         (2.0 * (phi(p * p) + phi(p * q) + beta * (1.0 - p * p - p * q - beta)));
}
inline double c34_rank_one(double p, double q, double beta) {
  return beta * beta /
         (2.0 * (phi(q * q) + phi(p * q) + beta * (1.0 - q * q - p * q - beta)));
}

/// Induced two-block rank-one model.
inline double rho2_rank_one(double p, double q) {
  const double fp = phi(p * p), fq = phi(q * q), fpq = phi(p * q);
  const double s = std::sqrt(p * p * fp + q * q * fpq) +
                   std::sqrt(q * q * fq + p * p * fpq);
  const double pp = p * p + q * q;
  return (p - q) * (p - q) * pp * pp / (2.0 * s * s);
}

inline double phi_beta(double a, double b, double beta) {
  return beta * (1.0 - a - b - beta);
}

inline double d3(double a, double b, double beta, int K) {
  return K - 2.0 * a - 2.0 * (K - 1) * b - K * beta;
}
inline double d4(double a, double b, double beta, int K) {
  return 2.0 * phi(a) + 2.0 * (K - 1) * phi(b) + beta * d3(a, b, beta, K);
}
inline double delta(double a, double b, double beta, int K) {
  const double S = phi(a) + phi(b) + phi_beta(a, b, beta);
  return K * K * beta * beta * S -
         2.0 * (a - b) * (a - b) * d4(a, b, beta, K);
}

/// Induced K-block homogeneous model.
inline double rho2_homogeneous(double a, double b, int K) {
  return (a - b) * (a - b) / (K * (phi(a) + phi(b)));
}

inline double rho1_homogeneous(double a, double b, double beta, int K) {
  if (delta(a, b, beta, K) <= 0.0)
    return K * beta * beta / (2.0 * d4(a, b, beta, K));
  return (a - b) * (a - b) /
         (K * (phi(a) + phi(b) + phi_beta(a, b, beta)));
}

/// Chernoff ratio for the K-block homogeneous balanced model.
inline double rho_star_homogeneous(double a, double b, double beta, int K) {
  const double fa = phi(a), fb = phi(b), fbeta = phi_beta(a, b, beta);
  if (delta(a, b, beta, K) <= 0.0)
    return K * K * beta * beta * (fa + fb) /
           (2.0 * (a - b) * (a - b) * d4(a, b, beta, K));
  return (fa + fb) / (fa + fb + fbeta);
}

/// Two-block special case, split on beta against a - b.
inline double rho_star_two_block(double a, double b, double beta) {
  const double fa = phi(a), fb = phi(b), fbeta = phi_beta(a, b, beta);
  if (beta <= a - b)
    return beta * beta * (fa + fb) /
           ((a - b) * (a - b) * (fa + fb + fbeta));
  return (fa + fb) / (fa + fb + fbeta);
}

// Homogeneous K = 2: pairs (1,2), (1,3), (1,4).
inline double c12_homogeneous2(double a, double b, double beta) {
  return beta * beta / (2.0 * (phi(a) + phi(b) + phi_beta(a, b, beta)));
}
inline double c13_homogeneous2(double a, double b, double beta) {
  return (a - b) * (a - b) /
         (2.0 * (phi(a) + phi(b) + phi_beta(a, b, beta)));
}
inline double c14_homogeneous2(double a, double b, double beta) {
  const double fa = phi(a), fb = phi(b), fbeta = phi_beta(a, b, beta);
  const double n1 = a * (1 - b) + b * (1 - a) + fbeta;
  const double n2 = a * b * (a - b) + fa * (a + beta) - fb * (b + beta);
  const double d1 = beta * beta * (1 - 2 * a - beta) * (1 - 2 * b - beta);
  return (beta * beta * n1 + (a - b) * n2) /
         (2.0 * (d1 + (fa + fb) * (fa + fb + 2 * fbeta)));
}

// Homogeneous K >= 3.
inline double c12_homogeneous(double a, double b, double beta, int K) {
  return K * beta * beta / (2.0 * d4(a, b, beta, K));
}
inline double c13_homogeneous(double a, double b, double beta, int K) {
  return (a - b) * (a - b) /
         (K * (phi(a) + phi(b) + phi_beta(a, b, beta)));
}
inline double c14_homogeneous(double a, double b, double beta, int K) {
  const double fa = phi(a), fb = phi(b), fbeta = phi_beta(a, b, beta);
  const double amb = a - b;
  const double n3 = amb * amb * (2 * fb + beta * (1 + beta - 2 * b));
  const double n4 = amb * amb * amb * (1 - a - b - beta);
  const double d5 =
      2 * beta * amb * ((1 - a - b - beta) - 2 * (fa + fb) - fbeta +
                        2 * b * (a + beta)) +
      K * (2 * fb * (fa + fb) - 2 * b * beta * (fb + a - b * b) -
           2 * a * b * fbeta +
           beta * (1 - beta) *
               (fa + (3 * b + beta) * (1 - beta) - a * beta - 5 * b * b));
  return (K * K * beta * beta * (fa + fb + fbeta) + 2 * K * n3 + 4 * n4) /
         (2.0 * K * (2 * (fa * fa - fb * fb) + d5));
}

}  // namespace closed_form

/// Canonical positions for the two-level rank-one model (rank 3).
inline LatentConfiguration canonical_positions_rank_one(double p, double q,
                                                        double beta) {
  if (!(p > 0 && p < q && q < 1 && beta > 0))
    throw ChernoffError("canonical rank-one positions need 0<p<q<1, beta>0");
  (void)build_bz(Matrix{{p * p, p * q}, {p * q, q * q}}, beta, 2);
  const double r = std::sqrt(p * p + beta);
  const double s = std::sqrt(2 * p * p + beta);
  const double third = std::sqrt(beta * (q - p) * (q - p) / (2 * p * p + beta));
  LatentConfiguration c;
  c.nu.resize(4, 3);
  c.nu << r, 0, 0,
      p * p / r, std::sqrt(beta * (2 * p * p + beta) / (p * p + beta)), 0,
      (p * q + beta) / r, p * std::sqrt(beta) * (q - p) / (r * s), third,
      p * q / r, std::sqrt(beta) * (p * p + p * q + beta) / (r * s), third;
  c.weights = Vector::Constant(4, 0.25);
  c.d_plus = 3;
  return c;
}

/// Canonical positions for the two-level K-block homogeneous model
/// (rank K + 1), built up one block at a time from K = 2.
inline LatentConfiguration canonical_positions_homogeneous(double a, double b,
                                                           double beta,
                                                           int K) {
  if (!(b > 0 && b < a && a < 1 && beta > 0 && K >= 2))
    throw ChernoffError(
        "canonical homogeneous positions need 0<b<a<1, beta>0, K>=2");
  {
    Matrix B = Matrix::Constant(K, K, b);
    B.diagonal().setConstant(a);
    (void)build_bz(B, beta, 2);
  }
  const double r = std::sqrt(a + beta), s = std::sqrt(2 * a + beta);
  const double tail = std::sqrt(2 * (a - b) * (a + b + beta) / (2 * a + beta));
  Matrix nu(4, 3);
  nu << r, 0, 0,
      a / r, std::sqrt(beta * (2 * a + beta) / (a + beta)), 0,
      (b + beta) / r, (b - a) * std::sqrt(beta) / (r * s), tail,
      b / r, std::sqrt(beta) * (a + b + beta) / (r * s), tail;
  for (int k = 3; k <= K; ++k) {
    const double den = 2 * a + 2 * (k - 2) * b + (k - 1) * beta;
    const double kappa = (2 * b + beta) / den;
    const double last =
        std::sqrt((a - b) * (2 * a + 2 * (k - 1) * b + k * beta) / den);
    const Matrix prev = nu.bottomRows(2);
    Matrix grown = Matrix::Zero(nu.rows() + 2, k + 1);
    grown.topLeftCorner(nu.rows(), k) = nu;
    grown.block(nu.rows(), 0, 2, k - 1) = prev.leftCols(k - 1);
    grown.block(nu.rows(), k - 1, 2, 1) = kappa * prev.col(k - 1);
    grown.block(nu.rows(), k, 2, 1).setConstant(last);
    nu = std::move(grown);
  }
  LatentConfiguration c;
  c.nu = std::move(nu);
  c.weights = Vector::Constant(2 * K, 1.0 / (2 * K));
  c.d_plus = K + 1;
  return c;
}

struct ChernoffReport {
  double rho1_star = 0.0;
  double rho2_star = 0.0;
  double rho_star = 0.0;
  PairwiseChernoff expanded;   // adjacency-only pipeline, expanded blocks
  PairwiseChernoff induced;    // after covariate removal, induced blocks
};

/// Chernoff ratio of any model, computed numerically from eigen-derived
/// positions of B_Z (weights piZ) and B (weights pi).
inline ChernoffReport rho_numeric(const CovariateBlockModel& model) {
  ChernoffReport r;
  r.expanded = pairwise_chernoff(positions_from_matrix(model.bz(), model.piZ));
  r.induced = pairwise_chernoff(positions_from_matrix(model.B, model.pi));
  r.rho1_star = r.expanded.minimum;
  r.rho2_star = r.induced.minimum;
  r.rho_star = r.rho1_star / r.rho2_star;
  return r;
}

/// Two-level rank-one model: numeric rho1 from canonical positions,
/// closed-form rho2.
inline ChernoffReport rho_rank_one(double p, double q, double beta) {
  ChernoffReport r;
  r.expanded = pairwise_chernoff(canonical_positions_rank_one(p, q, beta));
  LatentConfiguration induced;
  induced.nu = Matrix{{p}, {q}};
  induced.weights = Vector::Constant(2, 0.5);
  induced.d_plus = 1;
  r.induced = pairwise_chernoff(induced);
  r.rho1_star = r.expanded.minimum;
  r.rho2_star = closed_form::rho2_rank_one(p, q);
  r.rho_star = r.rho1_star / r.rho2_star;
  return r;
}

struct HomogeneousReport {
  double rho1_star = 0.0;
  double rho2_star = 0.0;
  double rho_star = 0.0;
  double delta = 0.0;
  ChernoffReport numeric;  // cross-check from canonical positions
};

/// Two-level K-block homogeneous model: closed form, with the numeric
/// values alongside.
inline HomogeneousReport rho_homogeneous(double a, double b, double beta,
                                         int K, bool with_numeric = true) {
  if (!(b > 0 && b < a && a < 1 && K >= 2))
    throw ChernoffError("homogeneous ratio needs 0<b<a<1 and K>=2");
  HomogeneousReport h;
  (void)homogeneous_model(a, b, beta, K, 2);
  h.delta = closed_form::delta(a, b, beta, K);
  h.rho1_star = closed_form::rho1_homogeneous(a, b, beta, K);
  h.rho2_star = closed_form::rho2_homogeneous(a, b, K);
  h.rho_star = closed_form::rho_star_homogeneous(a, b, beta, K);
  if (with_numeric) {
    const LatentConfiguration ex =
        beta > 0 ? canonical_positions_homogeneous(a, b, beta, K)
                 : positions_from_matrix(
                       homogeneous_model(a, b, beta, K, 2).bz(),
                       Vector::Constant(2 * K, 1.0 / (2 * K)));
    h.numeric.expanded = pairwise_chernoff(ex);
    Matrix B = Matrix::Constant(K, K, b);
    B.diagonal().setConstant(a);
    h.numeric.induced =
        pairwise_chernoff(positions_from_matrix(B, Vector::Constant(K, 1.0 / K)));
    h.numeric.rho1_star = h.numeric.expanded.minimum;
    h.numeric.rho2_star = h.numeric.induced.minimum;
    h.numeric.rho_star = h.numeric.rho1_star / h.numeric.rho2_star;
  }
  return h;
}

enum class GridFamily { RankOne, Homogeneous };

struct GridSpec {
  GridFamily family = GridFamily::RankOne;
  double fixed = 0.3;     // p for rank-one, b for homogeneous
  int K = 2;              // homogeneous only
  double axis1_lo = 0.3, axis1_hi = 0.7;   // q or a
  double axis2_lo = 0.1, axis2_hi = 0.5;   // beta
  int resolution1 = 41, resolution2 = 41;  // inclusive endpoints
  bool numeric = false;   // homogeneous: numeric sup instead of closed form
};

struct GridCell {
  double x = 0.0, beta = 0.0;
  std::optional<double> rho_star;
};

inline double grid_point(double lo, double hi, int res, int i) {
  return res <= 1 ? lo : lo + (hi - lo) * i / (res - 1);
}

/// rho* over a rectangle; cells with an invalid model are left empty.
inline std::vector<GridCell> chernoff_grid(const GridSpec& g) {
  std::vector<GridCell> out;
  out.reserve(static_cast<std::size_t>(g.resolution1) * g.resolution2);
  for (int i = 0; i < g.resolution1; ++i)
    for (int j = 0; j < g.resolution2; ++j) {
      GridCell cell;
      cell.x = grid_point(g.axis1_lo, g.axis1_hi, g.resolution1, i);
      cell.beta = grid_point(g.axis2_lo, g.axis2_hi, g.resolution2, j);
      try {
        double v;
        if (g.family == GridFamily::RankOne) {
          v = rho_rank_one(g.fixed, cell.x, cell.beta).rho_star;
        } else {
          const HomogeneousReport h =
              rho_homogeneous(cell.x, g.fixed, cell.beta, g.K, g.numeric);
          v = g.numeric ? h.numeric.rho_star : h.rho_star;
        }
        if (std::isfinite(v)) cell.rho_star = v;
      } catch (const std::exception&) {
        // invalid parameters: missing cell
      }
      out.push_back(cell);
    }
  return out;
}

}  // namespace sbmcov
