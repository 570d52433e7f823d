#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sbmcov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigenpairs selected by magnitude. Columns are ordered positive
/// eigenvalues first, each sign group by descending magnitude.
struct EigenPairs {
  Vector values;
  Matrix vectors;
  int d_plus = 0;
  int d_minus = 0;
};

/// Splits the `d` largest-magnitude entries of an ascending spectrum into
/// (count taken from the top, count taken from the bottom). Ties in
/// magnitude prefer the positive end.
inline std::pair<int, int> split_by_magnitude(const Vector& ascending,
                                              int d) {
  const auto n = static_cast<int>(ascending.size());
  int lo = 0, hi = n - 1, top = 0, bottom = 0;
  for (int taken = 0; taken < d && lo <= hi; ++taken) {
    if (std::abs(ascending(hi)) >= std::abs(ascending(lo))) {
      --hi;
      ++top;
    } else {
      ++lo;
      ++bottom;
    }
  }
  return {top, bottom};
}

/// Magnitudes of an ascending spectrum, sorted descending.
inline Vector magnitudes_descending(const Vector& ascending, int count) {
  const auto n = static_cast<int>(ascending.size());
  count = std::min(count, n);
  Vector out(count);
  int lo = 0, hi = n - 1;
  for (int i = 0; i < count; ++i) {
    if (std::abs(ascending(hi)) >= std::abs(ascending(lo)))
      out(i) = std::abs(ascending(hi--));
    else
      out(i) = std::abs(ascending(lo++));
  }
  return out;
}

/// Makes the largest-magnitude entry of each column positive (first index
/// wins ties).
inline void canonicalize_signs(Matrix& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < V.rows(); ++i)
      if (std::abs(V(i, j)) > best) {
        best = std::abs(V(i, j));
        arg = i;
      }
    if (V(arg, j) < 0.0) V.col(j) *= -1.0;
  }
}

/// Dense symmetric eigensolver. Tridiagonalizes once; the full spectrum
/// comes from dsterf and selected eigenvectors from dstemr plus the
/// Householder back-transform.
class DenseSymmetricEigen {
 public:
  explicit DenseSymmetricEigen(const Matrix& A)
      : n_(static_cast<int>(A.rows())), qr_(A) {
    if (A.rows() != A.cols()) throw LinalgError("matrix must be square");
    if (n_ == 0) return;
    diag_.resize(n_);
    off_.resize(std::max(n_, 1));
    tau_.resize(std::max(n_ - 1, 1));
    off_.setZero();
    int info = LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', n_, qr_.data(), n_,
                              diag_.data(), off_.data(), tau_.data());
    if (info != 0) throw LinalgError("dsytrd failed: " + std::to_string(info));
    values_ = diag_;
    Vector e = off_;
    info = LAPACKE_dsterf(n_, values_.data(), e.data());
    if (info != 0) throw LinalgError("dsterf failed: " + std::to_string(info));
  }

  /// All eigenvalues in ascending order.
  [[nodiscard]] const Vector& eigenvalues() const { return values_; }

  /// The `d` eigenpairs of largest magnitude.
  [[nodiscard]] EigenPairs top_magnitude(int d) const {
    if (d < 0 || d > n_) throw LinalgError("invalid eigenpair count");
    auto [top, bottom] = split_by_magnitude(values_, d);
    EigenPairs out;
    out.values.resize(d);
    out.vectors.resize(n_, d);
    int col = 0;
    if (top > 0) {
      auto [w, Z] = range(n_ - top + 1, n_);
      for (int j = top - 1; j >= 0; --j, ++col) {
        out.values(col) = w(j);
        out.vectors.col(col) = Z.col(j);
      }
    }
    if (bottom > 0) {
      auto [w, Z] = range(1, bottom);
      for (int j = 0; j < bottom; ++j, ++col) {
        out.values(col) = w(j);
        out.vectors.col(col) = Z.col(j);
      }
    }
    // A "top" eigenvalue can be negative (or zero) when the spectrum has
    // few positive entries; signature is by sign, not by end.
    reorder_by_sign(out);
    return out;
  }

 private:
  // Eigenpairs with 1-based ascending indices il..iu.
  [[nodiscard]] std::pair<Vector, Matrix> range(int il, int iu) const {
    const int m_want = iu - il + 1;
    Vector d = diag_, e = off_;
    Vector w(n_);
    Matrix Z(n_, m_want);
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(m_want));
    lapack_int m = 0;
    lapack_logical tryrac = 1;
    int info = LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', n_, d.data(),
                              e.data(), 0.0, 0.0, il, iu, &m, w.data(),
                              Z.data(), n_, m_want, isuppz.data(), &tryrac);
    if (info != 0 || m != m_want)
      throw LinalgError("dstemr failed: " + std::to_string(info));
    if (n_ > 1) {
      info = LAPACKE_dormtr(LAPACK_COL_MAJOR, 'L', 'L', 'N', n_, m_want,
                            qr_.data(), n_, tau_.data(), Z.data(), n_);
      if (info != 0)
        throw LinalgError("dormtr failed: " + std::to_string(info));
    }
    return {w.head(m_want), std::move(Z)};
  }

  static void reorder_by_sign(EigenPairs& p) {
    const auto d = static_cast<int>(p.values.size());
    std::vector<int> idx(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      const bool pa = p.values(a) > 0.0, pb = p.values(b) > 0.0;
      if (pa != pb) return pa;
      return std::abs(p.values(a)) > std::abs(p.values(b));
    });
    EigenPairs out;
    out.values.resize(d);
    out.vectors.resize(p.vectors.rows(), d);
    for (int i = 0; i < d; ++i) {
      out.values(i) = p.values(idx[static_cast<std::size_t>(i)]);
      out.vectors.col(i) = p.vectors.col(idx[static_cast<std::size_t>(i)]);
      if (out.values(i) > 0.0) ++out.d_plus;
      else if (out.values(i) < 0.0) ++out.d_minus;
    }
    p = std::move(out);
  }

  int n_;
  Matrix qr_;
  Vector diag_, off_, tau_, values_;
};

/// Largest-magnitude eigenpairs by Lanczos with full reorthogonalization.
/// Grows the Krylov space until the leading `k` Ritz pairs have residuals
/// below `tol * |lambda_max|`.
inline EigenPairs lanczos_top_magnitude(const Matrix& A, int k,
                                        double tol = 1e-10,
                                        unsigned seed = 12345u) {
  const auto n = static_cast<int>(A.rows());
  if (k < 1 || k > n) throw LinalgError("invalid eigenpair count");
  int m_max = std::min(n, std::max(2 * k + 20, 60));
  Matrix Q(n, 0);
  std::vector<double> alpha, beta;
  Vector q(n);
  // Deterministic start vector.
  unsigned s = seed;
  for (int i = 0; i < n; ++i) {
    s = s * 1664525u + 1013904223u;
    q(i) = static_cast<double>(s >> 8) / 16777216.0 - 0.5;
  }
  q.normalize();
  Vector q_prev = Vector::Zero(n);
  double b_prev = 0.0;
  while (true) {
    const auto m0 = static_cast<int>(Q.cols());
    Q.conservativeResize(n, m_max);
    for (int j = m0; j < m_max; ++j) {
      Q.col(j) = q;
      Vector w = A * q - b_prev * q_prev;
      const double a = q.dot(w);
      w -= a * q;
      // Two passes of classical Gram-Schmidt against the whole basis.
      for (int pass = 0; pass < 2; ++pass)
        w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
      const double b = w.norm();
      alpha.push_back(a);
      beta.push_back(b);
      q_prev = q;
      b_prev = b;
      if (b <= 1e-14 * std::max(1.0, std::abs(a)) || j + 1 == n) {
        Q.conservativeResize(n, j + 1);
        break;
      }
      q = w / b;
    }
    const auto m = static_cast<int>(Q.cols());
    Matrix T = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m)
        T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(T);
    const Vector& theta = es.eigenvalues();
    auto [top, bottom] = split_by_magnitude(theta, k);
    std::vector<int> sel;
    for (int i = 0; i < top; ++i) sel.push_back(m - 1 - i);
    for (int i = 0; i < bottom; ++i) sel.push_back(i);
    const double scale = std::max(std::abs(theta(0)), std::abs(theta(m - 1)));
    const double b_last = beta[static_cast<std::size_t>(m - 1)];
    bool converged = true;
    for (int i : sel)
      if (std::abs(b_last * es.eigenvectors()(m - 1, i)) > tol * scale)
        converged = false;
    const bool exhausted = m == n || b_last <= 1e-14 * scale;
    if (converged || exhausted || m < m_max) {
      EigenPairs out;
      out.values.resize(k);
      out.vectors.resize(n, k);
      std::vector<int> order = sel;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const bool pa = theta(a) > 0.0, pb = theta(b) > 0.0;
        if (pa != pb) return pa;
        return std::abs(theta(a)) > std::abs(theta(b));
      });
      for (int c = 0; c < k; ++c) {
        const int i = order[static_cast<std::size_t>(c)];
        out.values(c) = theta(i);
        out.vectors.col(c) = Q * es.eigenvectors().col(i);
        if (theta(i) > 0.0) ++out.d_plus;
        else if (theta(i) < 0.0) ++out.d_minus;
      }
      return out;
    }
    m_max = std::min(n, 2 * m_max);
  }
}

}  // namespace sbmcov
