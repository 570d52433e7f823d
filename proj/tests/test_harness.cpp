#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "sbmcov/harness/config.hpp"
#include "sbmcov/harness/experiment.hpp"
#include "sbmcov/harness/io.hpp"

using namespace sbmcov;
using namespace sbmcov::harness;

namespace {

ExperimentSpec small_spec() {
  std::istringstream in(
      "family = rank_one\n"
      "p = 0.3\nq = 0.668\nbeta = 0.49\n"
      "levels = 2\nn = 40\ntrials = 6\nseed = 99\n"
      "d = 3\nd2 = 1\nkmax = 6\nrestarts = 3\ntiming = false\n");
  return parse_config(in);
}

std::string table_csv(const Summary& s) {
  std::ostringstream out;
  write_table(s, out);
  write_records(s, out);
  return out.str();
}

std::set<std::pair<int, int>> edge_set(const Graph& g) {
  std::set<std::pair<int, int>> e;
  for (int i = 0; i < g.n(); ++i)
    for (int j = i + 1; j < g.n(); ++j)
      if (g.A(i, j) != 0.0) e.emplace(i, j);
  return e;
}

}  // namespace

TEST(Config, ParsesKeysAndComments) {
  std::istringstream in(
      "# comment line\n"
      "family = homogeneous  # trailing comment\n"
      "a = 0.135\nb=0.1\nbeta = -0.05\nK = 3\nlevels = 5\n"
      "d = auto\nd2 = 2\ncovariance = full+tied\nmethod = SA\n");
  const ExperimentSpec s = parse_config(in);
  EXPECT_EQ(s.family, Family::Homogeneous);
  EXPECT_DOUBLE_EQ(s.a, 0.135);
  EXPECT_DOUBLE_EQ(s.beta, -0.05);
  EXPECT_EQ(s.K, 3);
  EXPECT_FALSE(s.d.has_value());
  EXPECT_EQ(s.d2, 2);
  EXPECT_EQ(s.method, BetaMethod::SA);
  EXPECT_EQ(s.structures(),
            (std::vector<Covariance>{Covariance::Full, Covariance::Tied}));
  EXPECT_NO_THROW(s.validate());
}

TEST(Config, ErrorsCarryLineNumbers) {
  std::istringstream in("n = 10\nbogus = 3\n");
  try {
    parse_config(in, "x.conf");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.conf:2"), std::string::npos);
  }
  ExperimentSpec s;
  EXPECT_THROW(apply_assignment(s, "n"), ConfigError);
  EXPECT_THROW(apply_assignment(s, "n=ten"), ConfigError);
  EXPECT_THROW(apply_assignment(s, "balanced=maybe"), ConfigError);
  s.trials = 0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Config, OverridesApplyAfterFile) {
  ExperimentSpec s = small_spec();
  apply_assignment(s, "n=80");
  apply_assignment(s, "covariance=diagonal");
  EXPECT_EQ(s.n, 80);
  EXPECT_EQ(s.structures(), std::vector<Covariance>{Covariance::Diagonal});
}

TEST(Summary, StderrIsSampleSdOverRootCount) {
  const Stat s = summarize({1.0, 2.0, 3.0, 4.0, kNaN});
  EXPECT_EQ(s.count, 4);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stderr_, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}

TEST(Experiment, DeterministicAcrossRuns) {
  const ExperimentSpec s = small_spec();
  EXPECT_EQ(table_csv(run_experiment(s, 1)), table_csv(run_experiment(s, 1)));
}

TEST(Experiment, SerialAndParallelBytesEqual) {
  const ExperimentSpec s = small_spec();
  EXPECT_EQ(table_csv(run_experiment(s, 1)), table_csv(run_experiment(s, 4)));
}

TEST(Experiment, RecordsAreBoundedAndEchoSpec) {
  const Summary sum = run_experiment(small_spec(), 1);
  for (const auto& r : sum.records) {
    ASSERT_TRUE(r.failure.empty()) << r.failure;
    EXPECT_GE(r.ari_algo1, -1.0);
    EXPECT_LE(r.ari_algo1, 1.0);
    EXPECT_GE(r.ari_algo2_hat, -1.0);
    EXPECT_LE(r.ari_algo2_hat, 1.0);
  }
  std::ostringstream out;
  write_table(sum, out);
  const std::string csv = out.str();
  EXPECT_EQ(csv.rfind("family,p,q,a,b,beta,K,levels,n,trials,seed,d,d2,", 0), 0u);
  EXPECT_NE(csv.find("\nrank_one,0.3,0.668,,,0.49,2,2,40,6,99,3,1,WA,auto,"),
            std::string::npos);
  EXPECT_EQ(csv.find("seconds"), std::string::npos);  // timing = false
}

TEST(Experiment, FailuresAreRecordedNotFatal) {
  ExperimentSpec s = small_spec();
  s.trials = 2;
  s.kmin = 1;
  s.kmax = 1;  // one component is fewer than the two levels
  EXPECT_THROW(run_experiment(s, 1), std::runtime_error);
}

TEST(Grid, HeaderAndMissingCells) {
  std::vector<GridCell> cells(2);
  cells[0].x = 0.1;
  cells[0].beta = 0.2;
  cells[1].x = 0.2;
  cells[1].beta = 0.2;
  cells[1].rho_star = 0.123456789;
  std::ostringstream out;
  write_grid(cells, GridFamily::Homogeneous, out);
  EXPECT_EQ(out.str(), "a,beta,rho_star\n0.1,0.2,\n0.2,0.2,0.123457\n");
}

TEST(EdgeList, MinimalPath) {
  std::istringstream in("0,1\n1,2\n");
  const LoadedGraph g = parse_edge_list(in);
  EXPECT_EQ(g.graph.n(), 3);
  EXPECT_EQ(g.edges, 2);
  EXPECT_FALSE(g.remapped);
  EXPECT_EQ(edge_set(g.graph), (std::set<std::pair<int, int>>{{0, 1}, {1, 2}}));
}

TEST(EdgeList, DuplicatesAndSelfLoops) {
  std::istringstream in("src,dst\n0,1\n1,0\n0,1\n2,2\n1\t2\n");
  const LoadedGraph g = parse_edge_list(in);
  EXPECT_EQ(g.edges, 2);
  EXPECT_EQ(g.duplicates, 2);
  EXPECT_EQ(g.self_loops, 1);
  EXPECT_EQ(g.graph.A(2, 2), 0.0);
}

TEST(EdgeList, RemapsArbitraryIds) {
  std::istringstream in("# comment\n10 30\nalice 10\n");
  const LoadedGraph g = parse_edge_list(in);
  EXPECT_TRUE(g.remapped);
  EXPECT_EQ(g.ids, (std::vector<std::string>{"10", "30", "alice"}));
  const auto idx = g.index();
  EXPECT_EQ(g.graph.A(idx.at("alice"), idx.at("10")), 1.0);
}

TEST(EdgeList, MalformedLineReportsLineNumber) {
  std::istringstream in("0,1\n1,2,3\n");
  try {
    parse_edge_list(in, "g.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("g.csv:2"), std::string::npos);
  }
}

TEST(EdgeList, RoundTrip) {
  const auto s = sample(homogeneous_model(0.3, 0.1, 0.1, 2, 2), 40, 3);
  std::stringstream buf;
  write_edge_list(s.graph, buf);
  const LoadedGraph g = parse_edge_list(buf);
  // Isolated vertices drop out of an edge list, so compare by original id.
  const auto e = edge_set(s.graph);
  std::set<std::pair<int, int>> got;
  for (const auto& [i, j] : edge_set(g.graph))
    got.emplace(std::stoi(g.ids[static_cast<std::size_t>(i)]),
                std::stoi(g.ids[static_cast<std::size_t>(j)]));
  EXPECT_EQ(got, e);
}

TEST(Covariates, NumericThresholds) {
  std::istringstream in("vertex,likes\na,150\nb,250\nc,900\n");
  const Covariates c = parse_covariates(in, "likes", {"a", "b", "c"}, {200, 400, 600});
  EXPECT_EQ(c.z, (Labels{0, 1, 3}));
  EXPECT_EQ(c.levels.size(), 4u);
  EXPECT_EQ(c.levels.front(), "[-inf,200)");
  EXPECT_EQ(bin_level(200, {200, 400, 600}), 1);
}

TEST(Covariates, CategoricalLexicographic) {
  std::istringstream in("vertex,gender,city\n0,m,paris\n1,f,oslo\n2,m,lima\n");
  const Covariates c = parse_covariates(in, "city", {"0", "1", "2"});
  EXPECT_EQ(c.levels, (std::vector<std::string>{"lima", "oslo", "paris"}));
  EXPECT_EQ(c.z, (Labels{2, 1, 0}));
}

TEST(Covariates, ErrorsNameTheVertex) {
  std::istringstream missing("vertex,x\n0,a\n");
  try {
    parse_covariates(missing, "x", {"0", "7"});
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("'7'"), std::string::npos);
  }
  std::istringstream unknown("vertex,x\n0,a\n9,b\n");
  EXPECT_THROW(parse_covariates(unknown, "x", {"0"}), ParseError);
  std::istringstream dup("vertex,x\n0,a\n0,b\n");
  EXPECT_THROW(parse_covariates(dup, "x", {"0"}), ParseError);
  std::istringstream nocol("vertex,x\n0,a\n");
  EXPECT_THROW(parse_covariates(nocol, "y", {"0"}), ParseError);
  std::istringstream text("vertex,x\n0,abc\n");
  EXPECT_THROW(parse_covariates(text, "x", {"0"}, {1.0}), ParseError);
}
