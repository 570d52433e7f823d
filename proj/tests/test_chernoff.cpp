#include <gtest/gtest.h>

#include <cmath>

#include "sbmcov/chernoff.hpp"
#include "sbmcov/optimize.hpp"

using namespace sbmcov;
namespace cf = sbmcov::closed_form;

TEST(GaussianChernoff, IdenticalIsZero) {
  Vector mu{{0.3, -0.2}};
  Matrix S{{1.0, 0.2}, {0.2, 0.5}};
  EXPECT_NEAR(gaussian_chernoff(mu, S, mu, S).value, 0.0, 1e-14);
}

TEST(GaussianChernoff, EqualCovarianceClosedForm) {
  Vector m1{{0.0, 0.0}}, m2{{1.0, 2.0}};
  Matrix S{{2.0, 0.5}, {0.5, 1.0}};
  const auto r = gaussian_chernoff(m1, S, m2, S);
  const Vector dm = m2 - m1;
  EXPECT_NEAR(r.value, dm.dot(S.ldlt().solve(dm)) / 8.0, 1e-10);
  EXPECT_NEAR(r.t_star, 0.5, 1e-6);
}

TEST(GaussianChernoff, OneDimensionalQuadrature) {
  // -log of the integral of f1^t f2^(1-t), maximized over a t grid.
  const double s1 = 1.0, s2 = 2.0, m2 = 1.0;
  auto logpdf = [](double x, double m, double s) {
    return -0.5 * std::log(2 * M_PI * s * s) - (x - m) * (x - m) / (2 * s * s);
  };
  double best = -1.0;
  for (int it = 1; it < 2000; ++it) {
    const double t = it / 2000.0;
    const double h = 1e-3;
    double integral = 0.0;
    for (double x = -30; x <= 30; x += h)
      integral += std::exp(t * logpdf(x, 0, s1) + (1 - t) * logpdf(x, m2, s2));
    best = std::max(best, -std::log(integral * h));
  }
  const auto r = gaussian_chernoff(Vector::Constant(1, 0.0), Matrix::Constant(1, 1, s1 * s1),
                                   Vector::Constant(1, m2), Matrix::Constant(1, 1, s2 * s2));
  EXPECT_NEAR(r.value, best, 1e-6);
}

TEST(LimitingCovariance, RankOneScalar) {
  LatentConfiguration c;
  c.nu = Matrix{{0.3}, {0.6}};
  c.weights = Vector::Constant(2, 0.5);
  c.d_plus = 1;
  const Matrix S1 = limiting_covariance(c, 0);
  const double want = (0.5 * 0.0081 * 0.91 + 0.5 * 0.3 * 0.216 * 0.82) / (0.225 * 0.225);
  EXPECT_NEAR(S1(0, 0), want, 1e-12);
  EXPECT_NEAR(S1(0, 0), 0.5975, 5e-4);
}

TEST(LimitingCovariance, IdenticalPositions) {
  // g * Delta^{-1} when every position is the same.
  LatentConfiguration c;
  c.nu = Matrix::Constant(3, 1, 0.5);
  c.weights = Vector::Constant(3, 1.0 / 3);
  c.d_plus = 1;
  const double g = 0.25 * 0.75;
  EXPECT_NEAR(limiting_covariance(c, 1)(0, 0), g / 0.25, 1e-12);
}

TEST(Ckl, RankOneClosedFormC12) {
  const auto c = canonical_positions_rank_one(0.3, 0.6, 0.1);
  const auto r = c_kl(c, 0, 1);
  EXPECT_NEAR(cf::c12_rank_one(0.3, 0.6, 0.1), 0.01 / (2 * 0.2925), 1e-12);
  EXPECT_NEAR(r.value, 0.017094, 1e-6);
  EXPECT_NEAR(r.value, cf::c12_rank_one(0.3, 0.6, 0.1), 1e-8);
  EXPECT_NEAR(c_kl(c, 2, 3).value, cf::c34_rank_one(0.3, 0.6, 0.1), 1e-8);
}

TEST(Ckl, HomogeneousClosedFormK2) {
  const auto c = canonical_positions_homogeneous(0.3, 0.1, 0.1, 2);
  EXPECT_NEAR(cf::c13_homogeneous2(0.3, 0.1, 0.1), 0.04 / 0.7, 1e-12);
  EXPECT_NEAR(c_kl(c, 0, 2).value, 0.05714, 1e-5);
  EXPECT_NEAR(c_kl(c, 0, 2).value, cf::c13_homogeneous2(0.3, 0.1, 0.1), 1e-8);
  EXPECT_NEAR(c_kl(c, 0, 1).value, cf::c12_homogeneous2(0.3, 0.1, 0.1), 1e-8);
  EXPECT_NEAR(c_kl(c, 0, 3).value, cf::c14_homogeneous2(0.3, 0.1, 0.1), 1e-8);
}

TEST(Ckl, SymmetricCovariancesGiveHalf) {
  const auto c = canonical_positions_homogeneous(0.3, 0.1, 0.1, 2);
  // Blocks 1 and 3 share a role under the block swap: equal spectra.
  const auto covs = limiting_covariances(c);
  Eigen::SelfAdjointEigenSolver<Matrix> e0(covs[0]), e2(covs[2]);
  EXPECT_LT((e0.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10);
  LatentConfiguration same;
  same.nu = Matrix{{0.5, 0.1}, {0.1, 0.5}};
  same.weights = Vector::Constant(2, 0.5);
  same.d_plus = 2;
  EXPECT_NEAR(c_kl(same, 0, 1).t_star, 0.5, 1e-6);
}

TEST(Ckl, IndefiniteOrthogonalInvariance) {
  // A hyperbolic rotation W with W I W^T = I leaves C unchanged.
  LatentConfiguration c = positions_from_matrix(
      Matrix{{0.2, 0.5}, {0.5, 0.3}}, Vector::Constant(2, 0.5));
  ASSERT_EQ(c.d_plus, 1);
  ASSERT_EQ(c.d_minus, 1);
  const double h = 0.4;
  Matrix W{{std::cosh(h), std::sinh(h)}, {std::sinh(h), std::cosh(h)}};
  LatentConfiguration w = c;
  w.nu = c.nu * W;
  EXPECT_LT((w.gram() - c.gram()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(c_kl(w, 0, 1).value, c_kl(c, 0, 1).value, 1e-8);
}

TEST(CanonicalPositions, RankOneReproducesBz) {
  const auto c = canonical_positions_rank_one(0.3, 0.6, 0.1);
  const Matrix bz = build_bz(Matrix{{0.09, 0.18}, {0.18, 0.36}}, 0.1, 2);
  EXPECT_LT((c.gram() - bz).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(c.nu(0, 0), std::sqrt(0.19), 1e-15);
  EXPECT_EQ(c.nu(0, 1), 0.0);
  EXPECT_EQ(c.nu(0, 2), 0.0);
}

TEST(CanonicalPositions, HomogeneousK2Entries) {
  const double a = 0.3, b = 0.1, beta = 0.2;
  const auto c = canonical_positions_homogeneous(a, b, beta, 2);
  ASSERT_EQ(c.nu.rows(), 4);
  ASSERT_EQ(c.nu.cols(), 3);
  EXPECT_NEAR(c.nu(0, 0), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(c.nu(1, 0), 0.3 / std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(c.nu(1, 1), std::sqrt(0.2 * 0.8 / 0.5), 1e-15);
  EXPECT_NEAR(c.nu(2, 2), std::sqrt(2 * 0.2 * 0.6 / 0.8), 1e-15);
  EXPECT_NEAR(c.nu.row(0).dot(c.nu.row(1)), a, 1e-12);
  EXPECT_NEAR(c.nu.row(0).dot(c.nu.row(2)), b + beta, 1e-12);
  EXPECT_NEAR(c.nu.row(0).dot(c.nu.row(3)), b, 1e-12);
}

TEST(CanonicalPositions, HomogeneousRecursionReproducesBz) {
  for (int K = 2; K <= 6; ++K) {
    const auto c = canonical_positions_homogeneous(0.3, 0.1, 0.1, K);
    const Matrix bz = homogeneous_model(0.3, 0.1, 0.1, K, 2).bz();
    EXPECT_LT((c.gram() - bz).cwiseAbs().maxCoeff(), 1e-10) << "K=" << K;
    EXPECT_EQ(c.d_plus, K + 1);
  }
}

TEST(Rho, RankOneInducedClosedForm) {
  EXPECT_NEAR(cf::rho2_rank_one(0.3, 0.6), 0.02946, 1e-5);
  // The closed form against a numeric sup on the induced one-dimensional
  // configuration.
  LatentConfiguration c;
  c.nu = Matrix{{0.3}, {0.6}};
  c.weights = Vector::Constant(2, 0.5);
  c.d_plus = 1;
  EXPECT_NEAR(c_kl(c, 0, 1).value, cf::rho2_rank_one(0.3, 0.6), 1e-8);
}

TEST(Rho, RankOneRegimes) {
  EXPECT_NEAR(rho_rank_one(0.3, 0.668, 0.49).rho_star, 1.10, 0.03);
  EXPECT_NEAR(rho_rank_one(0.3, 0.564, 0.49).rho_star, 0.91, 0.03);
}

TEST(Rho, HomogeneousWorkedValues) {
  EXPECT_NEAR(cf::d3(0.3, 0.1, 0.1, 4), 2.4, 1e-12);
  EXPECT_NEAR(cf::d4(0.3, 0.1, 0.1, 4), 1.2, 1e-12);
  EXPECT_NEAR(cf::delta(0.3, 0.1, 0.1, 4), -0.04, 1e-12);
  EXPECT_NEAR(rho_homogeneous(0.3, 0.1, 0.1, 4).rho_star, 0.5, 1e-12);
  EXPECT_NEAR(rho_homogeneous(0.3, 0.1, 0.1, 2).rho_star, 0.003 / 0.014, 1e-12);
  const double fa = 0.21, fb = 0.09;
  const double beta = 0.35;  // > a - b
  EXPECT_NEAR(cf::rho_star_two_block(0.3, 0.1, beta),
              (fa + fb) / (fa + fb + cf::phi_beta(0.3, 0.1, beta)), 1e-12);
}

TEST(Rho, HomogeneousClosedFormMatchesNumeric) {
  for (int K = 2; K <= 4; ++K)
    for (double beta : {0.05, 0.1, 0.3}) {
      const auto h = rho_homogeneous(0.3, 0.1, beta, K);
      EXPECT_NEAR(h.rho1_star, h.numeric.rho1_star, 1e-7) << K << " " << beta;
      EXPECT_NEAR(h.rho2_star, h.numeric.rho2_star, 1e-7) << K << " " << beta;
    }
}

TEST(Rho, GeneralRatioMatchesTwoBlockRatio) {
  for (double a : {0.2, 0.35, 0.5})
    for (double beta : {0.05, 0.15, 0.4})
      EXPECT_NEAR(cf::rho_star_homogeneous(a, 0.1, beta, 2),
                  cf::rho_star_two_block(a, 0.1, beta), 1e-12);
}

TEST(Grid, MissingCellsAndHeaderFamily) {
  GridSpec g;
  g.family = GridFamily::Homogeneous;
  g.fixed = 0.1;
  g.axis1_lo = 0.1;
  g.axis1_hi = 0.5;
  g.resolution1 = 5;
  g.resolution2 = 3;
  const auto cells = chernoff_grid(g);
  ASSERT_EQ(cells.size(), 15u);
  for (int j = 0; j < 3; ++j) EXPECT_FALSE(cells[static_cast<std::size_t>(j)].rho_star);  // a == b
  for (std::size_t i = 3; i < cells.size(); ++i) EXPECT_TRUE(cells[i].rho_star);
}

TEST(Optimize, GoldenSectionFindsInteriorMaximum) {
  const auto m = maximize_unit_interval([](double t) { return -(t - 0.3137) * (t - 0.3137); });
  EXPECT_NEAR(m.x, 0.3137, 1e-6);
  const auto edge = maximize_unit_interval([](double t) { return t; });
  EXPECT_GT(edge.x, 0.99);
}
