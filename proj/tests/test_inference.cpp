#include <gtest/gtest.h>

#include <numeric>

#include "sbmcov/inference.hpp"
#include "sbmcov/model.hpp"
#include "sbmcov/rng.hpp"

using namespace sbmcov;

namespace {

// Perfect stage-one output: one vertex per expanded block is enough for
// the beta estimators, but use `per` to mimic real counts.
struct Oracle {
  Matrix bz;
  Labels xi, z, phi;
};

Oracle oracle(const Matrix& B, double beta, int levels, int per) {
  Oracle o;
  o.bz = build_bz(B, beta, levels);
  const auto m = static_cast<int>(o.bz.rows());
  for (int j = 0; j < m; ++j) {
    o.phi.push_back(j / levels);
    for (int i = 0; i < per; ++i) {
      o.xi.push_back(j);
      o.z.push_back(j % levels);
    }
  }
  return o;
}

Matrix homogeneous(double a, double b, int K) {
  Matrix B = Matrix::Constant(K, K, b);
  B.diagonal().setConstant(a);
  return B;
}

}  // namespace

TEST(BetaEstimators, ExactOnPerfectInputs) {
  for (double beta : {0.1, 0.25, 0.4}) {
    for (int levels : {2, 5}) {
      const auto o = oracle(homogeneous(0.3, 0.1, 2), beta, levels, 3);
      EXPECT_NEAR(estimate_beta_sa(o.bz, o.xi, o.phi, o.z, levels), beta, 1e-12);
      EXPECT_NEAR(estimate_beta_wa(o.bz, o.xi, o.phi, o.z, levels), beta, 1e-12);
      const auto r = oracle(Matrix{{0.09, 0.18}, {0.18, 0.36}}, beta, levels, 2);
      EXPECT_NEAR(estimate_beta_sa(r.bz, r.xi, r.phi, r.z, levels), beta, 1e-12);
      EXPECT_NEAR(estimate_beta_wa(r.bz, r.xi, r.phi, r.z, levels), beta, 1e-12);
    }
  }
}

TEST(BetaEstimators, NegativeBeta) {
  const auto o = oracle(homogeneous(0.135, 0.1, 2), -0.07, 5, 4);
  EXPECT_NEAR(estimate_beta_sa(o.bz, o.xi, o.phi, o.z), -0.07, 1e-12);
  EXPECT_NEAR(estimate_beta_wa(o.bz, o.xi, o.phi, o.z), -0.07, 1e-12);
}

TEST(BetaEstimators, InvariantToClusterRelabeling) {
  auto o = oracle(homogeneous(0.4, 0.2, 3), 0.15, 2, 2);
  const auto m = static_cast<int>(o.bz.rows());
  std::vector<int> sigma(static_cast<std::size_t>(m));
  std::iota(sigma.begin(), sigma.end(), 0);
  Rng rng(5);
  rng.shuffle(std::span<int>(sigma));
  Matrix bz(m, m);
  Labels phi(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    phi[sigma[i]] = o.phi[i];
    for (int j = 0; j < m; ++j) bz(sigma[i], sigma[j]) = o.bz(i, j);
  }
  for (auto& v : o.xi) v = sigma[v];
  EXPECT_NEAR(estimate_beta_sa(bz, o.xi, phi, o.z), 0.15, 1e-12);
  EXPECT_NEAR(estimate_beta_wa(bz, o.xi, phi, o.z), 0.15, 1e-12);
}

TEST(BetaEstimators, SimpleAverageEmptyPairSet) {
  auto o = oracle(homogeneous(0.3, 0.1, 2), 0.1, 2, 3);
  // Every cluster's modal level becomes 0.
  for (auto& v : o.z) v = 0;
  EXPECT_THROW(estimate_beta_sa(o.bz, o.xi, o.phi, o.z, 2), EmptyPairSetError);
}

TEST(BetaEstimators, WeightedAverageNormalizations) {
  auto o = oracle(homogeneous(0.3, 0.1, 2), 0.2, 2, 3);
  EXPECT_NEAR(estimate_beta_wa(o.bz, o.xi, o.phi, o.z, 2), 0.2, 1e-12);
  // Pure clusters: weight 1 for each k and each l sharing k's level (with
  // l' the other cluster of l's block), so 4 * 2 = 8 unit terms. K = 4 and
  // |W| = 8 ordered pairs within blocks, hence 8 beta / 32.
  const double kp = estimate_beta_wa(o.bz, o.xi, o.phi, o.z, 2,
                                     WaNormalization::KTimesPairs);
  EXPECT_NEAR(kp, 0.2 * 8.0 / 32.0, 1e-12);
}

TEST(ModalLevels, TiesGoToLowestLevel) {
  const Labels xi{0, 0, 1, 1, 1};
  const Labels z{1, 0, 2, 2, 1};
  const Labels mode = modal_levels(xi, z, 2, 3);
  EXPECT_EQ(mode, (Labels{0, 2}));
}

TEST(Adjust, SubtractsSharedLevelsOffDiagonal) {
  Matrix A{{0, 1, 1}, {1, 0, 0}, {1, 0, 0}};
  const Matrix At = adjust_for_covariate(A, {0, 0, 1}, 0.25);
  const Matrix want{{0, 0.75, 1}, {0.75, 0, 0}, {1, 0, 0}};
  EXPECT_LT((At - want).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(adjust_for_covariate(A, {0, 1}, 0.1), InferenceError);
}

TEST(Algo1, RecoversBlocksFromProbabilityMatrix) {
  const auto m = rank_one_model(0.3, 0.6, 0.2);
  const auto xi = balanced_labels(m, 200);
  Graph g{probability_matrix(m, xi)};
  Algo1Options o;
  o.d = 3;
  o.seed = 1;
  const Algo1Result r = algo1(g, o);
  EXPECT_EQ(r.K_hat, 4);
  EXPECT_EQ(r.induced, 2);
  Labels tau(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) tau[i] = xi[i] / 2;
  EXPECT_DOUBLE_EQ(ari(r.xi_hat, xi), 1.0);
  EXPECT_DOUBLE_EQ(ari(r.tau_hat, tau), 1.0);
  Labels z(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) z[i] = xi[i] % 2;
  EXPECT_NEAR(estimate_beta(r, z, 2, BetaMethod::SA), 0.2, 0.01);
  EXPECT_NEAR(estimate_beta(r, z, 2, BetaMethod::WA), 0.2, 0.01);
}

TEST(Algo2, KnownBetaRecoversTauOnProbabilityMatrix) {
  const auto m = homogeneous_model(0.135, 0.1, 0.2, 2, 5);
  const auto xi = balanced_labels(m, 500);
  Graph g{probability_matrix(m, xi)};
  Labels tau(xi.size()), z(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    tau[i] = xi[i] / 5;
    z[i] = xi[i] % 5;
  }
  Algo1Options o1;
  o1.d = 6;
  o1.levels = 5;
  o1.K = 10;
  const Algo1Result s1 = algo1(g, o1);
  Algo2Options o2;
  o2.beta_known = 0.2;
  o2.d2 = 2;
  o2.k_induced = 2;
  const Algo2Result r = algo2(g, z, s1, 5, o2);
  EXPECT_TRUE(r.beta_was_known);
  EXPECT_EQ(r.k_induced, 2);
  EXPECT_DOUBLE_EQ(ari(r.tau_tilde, tau), 1.0);
}

TEST(Algo2, EstimatedBetaOnSampledGraph) {
  const auto m = rank_one_model(0.3, 0.668, 0.49, 2);
  const auto s = sample(m, 260, 21);
  Algo1Options o1;
  o1.d = 3;
  o1.seed = 2;
  Algo2Options o2;
  o2.d2 = 1;
  o2.seed = 3;
  const Algo2Result r = algo2(s.graph, s.z, o1, o2);
  EXPECT_NEAR(r.beta_hat, 0.49, 0.05);
  EXPECT_GT(ari(r.tau_tilde, s.tau), 0.9);
}

TEST(Algo1, TooFewComponentsIsAnError) {
  const auto m = rank_one_model(0.3, 0.6, 0.2, 3);
  const auto xi = balanced_labels(m, 60);
  Graph g{probability_matrix(m, xi)};
  Algo1Options o;
  o.d = 2;
  o.K = 2;
  o.levels = 3;
  EXPECT_THROW(algo1(g, o), InferenceError);
}

TEST(ClusterDiagonal, SplitsTwoGroups) {
  Matrix B = Matrix::Zero(4, 4);
  B.diagonal() << 0.1, 0.5, 0.11, 0.52;
  const Labels phi = cluster_diagonal(B, 2, 0);
  EXPECT_EQ(phi[0], phi[2]);
  EXPECT_EQ(phi[1], phi[3]);
  EXPECT_NE(phi[0], phi[1]);
  EXPECT_THROW(cluster_diagonal(B, 5, 0), InferenceError);
}
