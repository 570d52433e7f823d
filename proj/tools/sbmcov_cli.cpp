#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sbmcov/sbmcov.hpp"

using namespace sbmcov;
using namespace sbmcov::harness;

namespace {

ExperimentSpec spec_from(const std::string& config,
                         const std::vector<std::string>& sets) {
  ExperimentSpec s = config.empty() ? ExperimentSpec{} : load_config(config);
  for (const auto& kv : sets) apply_assignment(s, kv);
  return s;
}

void write_labels(const std::string& path, const std::vector<std::string>& ids,
                  const std::vector<std::pair<std::string, const Labels*>>& cols) {
  write_file(path, [&](std::ostream& out) {
    out << "vertex";
    for (const auto& c : cols) out << ',' << c.first;
    out << '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out << ids[i];
      for (const auto& c : cols) out << ',' << (*c.second)[i];
      out << '\n';
    }
  });
}

std::vector<std::string> index_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

struct GraphInput {
  std::string graph, covariates, column, truth, truth_column = "tau";
  std::vector<double> thresholds;
};

void add_graph_options(CLI::App* app, GraphInput& in, bool need_cov) {
  app->add_option("--graph", in.graph, "Edge list")->required();
  auto* cov = app->add_option("--covariates", in.covariates,
                              "Covariate CSV (vertex,<columns>)");
  auto* col = app->add_option("--column", in.column, "Covariate column");
  if (need_cov) {
    cov->required();
    col->required();
  }
  app->add_option("--thresholds", in.thresholds,
                  "Numeric bin edges for the covariate")
      ->delimiter(',');
  app->add_option("--labels", in.truth,
                  "Ground-truth CSV; prints the ARI against it");
  app->add_option("--labels-column", in.truth_column, "Ground-truth column");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral block inference with vertex covariates"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config, sim_out = ".";
  std::vector<std::string> sim_sets;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "Sample a labeled graph");
  sim->add_option("--config", sim_config, "Experiment config");
  sim->add_option("--set", sim_sets, "key=value override");
  sim->add_option("--seed", sim_seed, "Sampler seed");
  sim->add_option("--out-dir", sim_out, "Output directory");

  // algo1 / algo2
  GraphInput g1, g2;
  int levels1 = 2, levels2 = 2, kmin = 1, kmax = 12, elbow = 1;
  std::optional<int> d1, K1, d2a, d2b, kind;
  std::uint64_t seed1 = 0, seed2 = 0;
  std::string out1, out2, cov1 = "auto", cov2 = "auto", method = "WA";
  std::optional<double> beta_known;
  auto* a1 = app.add_subcommand("algo1", "Induced blocks from the graph alone");
  add_graph_options(a1, g1, false);
  a1->add_option("--levels", levels1, "Covariate levels c");
  a1->add_option("--d", d1, "Embedding dimension (default: scree elbow)");
  a1->add_option("--K", K1, "Mixture components (default: BIC)");
  a1->add_option("--kmin", kmin);
  a1->add_option("--kmax", kmax);
  a1->add_option("--elbow", elbow);
  a1->add_option("--covariance", cov1, "auto or full|diagonal|spherical|tied");
  a1->add_option("--seed", seed1);
  a1->add_option("--out", out1, "Labels CSV");

  auto* a2 = app.add_subcommand("algo2", "Induced blocks using covariates");
  add_graph_options(a2, g2, true);
  a2->add_option("--d", d2a, "First embedding dimension");
  a2->add_option("--d2", d2b, "Second embedding dimension");
  a2->add_option("--k-induced", kind, "Induced block count");
  a2->add_option("--beta", beta_known, "Known effect size");
  a2->add_option("--method", method, "SA or WA")
      ->check(CLI::IsMember({"SA", "WA"}));
  a2->add_option("--kmax", kmax);
  a2->add_option("--elbow", elbow);
  a2->add_option("--covariance", cov2);
  a2->add_option("--seed", seed2);
  a2->add_option("--out", out2, "Labels CSV");

  // chernoff
  std::string family = "rank_one";
  double cp = 0.3, cq = 0.668, ca = 0.3, cb = 0.1, cbeta = 0.49;
  int cK = 2;
  auto* ch = app.add_subcommand("chernoff", "Chernoff ratio of a model");
  ch->add_option("--family", family)
      ->check(CLI::IsMember({"rank_one", "homogeneous"}));
  ch->add_option("--p", cp);
  ch->add_option("--q", cq);
  ch->add_option("--a", ca);
  ch->add_option("--b", cb);
  ch->add_option("--beta", cbeta);
  ch->add_option("--K", cK);

  // grid
  GridSpec gs;
  std::string grid_family = "rank_one", grid_out;
  auto* gr = app.add_subcommand("grid", "Chernoff ratio over a grid");
  gr->add_option("--family", grid_family)
      ->check(CLI::IsMember({"rank_one", "homogeneous"}));
  gr->add_option("--fixed", gs.fixed, "p (rank_one) or b (homogeneous)");
  gr->add_option("--K", gs.K);
  gr->add_option("--x-min", gs.axis1_lo, "Lower end of q or a");
  gr->add_option("--x-max", gs.axis1_hi, "Upper end of q or a");
  gr->add_option("--beta-min", gs.axis2_lo);
  gr->add_option("--beta-max", gs.axis2_hi);
  gr->add_option("--resolution", gs.resolution1, "Points per axis");
  gr->add_flag("--numeric", gs.numeric, "Numeric sup for homogeneous");
  gr->add_option("--out", grid_out, "CSV path (default stdout)");

  // experiment
  std::string exp_config;
  std::vector<std::string> exp_sets;
  std::optional<std::uint64_t> exp_seed;
  int workers = 0;
  auto* ex = app.add_subcommand("experiment", "Monte-Carlo table row");
  ex->add_option("--config", exp_config, "Experiment config")->required();
  ex->add_option("--seed", exp_seed, "Master seed")->required();
  ex->add_option("--set", exp_sets, "key=value override");
  ex->add_option("--workers", workers, "Worker threads");

  // ingest
  std::string ing_edges, ing_cov, ing_col, ing_out = ".";
  std::vector<double> ing_thr;
  auto* ing = app.add_subcommand("ingest", "Normalize an external graph");
  ing->add_option("--edges", ing_edges)->required();
  ing->add_option("--covariates", ing_cov);
  ing->add_option("--column", ing_col);
  ing->add_option("--thresholds", ing_thr)->delimiter(',');
  ing->add_option("--out-dir", ing_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      ExperimentSpec s = spec_from(sim_config, sim_sets);
      s.validate();
      const auto model = s.model();
      Rng rng(sim_seed);
      Labels xi = trial_labels(s, model, rng);
      const LabeledSample smp = sample_with_labels(model, std::move(xi), rng);
      std::filesystem::create_directories(sim_out);
      write_file(sim_out + "/graph.edges",
                 [&](std::ostream& o) { write_edge_list(smp.graph, o); });
      const auto ids = index_ids(smp.graph.n());
      write_labels(sim_out + "/labels.csv", ids,
                   {{"tau", &smp.tau}, {"xi", &smp.xi}, {"z", &smp.z}});
      write_labels(sim_out + "/covariates.csv", ids, {{"z", &smp.z}});
      std::cout << "wrote " << smp.graph.n() << " vertices to " << sim_out
                << "\n";
    } else if (a1->parsed()) {
      const LoadedGraph lg = load_graph(g1.graph);
      Algo1Options o;
      o.d = d1;
      o.K = K1;
      o.kmin = kmin;
      o.kmax = kmax;
      o.levels = levels1;
      o.elbow = elbow;
      o.seed = seed1;
      ExperimentSpec tmp;
      tmp.covariance = cov1;
      o.structures = tmp.structures();
      const Algo1Result r = algo1(lg.graph, o);
      std::cout << "d_hat=" << r.d_hat << " K_hat=" << r.K_hat
                << " induced=" << r.induced
                << (r.rounded ? " (K_hat not a multiple of c)" : "") << "\n";
      if (!g1.truth.empty())
        std::cout << "ari="
                  << fmt(ari(r.tau_hat, load_labels(g1.truth, g1.truth_column,
                                                    lg.ids)))
                  << "\n";
      if (!out1.empty())
        write_labels(out1, lg.ids, {{"tau_hat", &r.tau_hat}, {"xi_hat", &r.xi_hat}});
    } else if (a2->parsed()) {
      const LoadedGraph lg = load_graph(g2.graph);
      const Covariates cv =
          load_covariates(g2.covariates, g2.column, lg.ids, g2.thresholds);
      levels2 = static_cast<int>(cv.levels.size());
      ExperimentSpec tmp;
      tmp.covariance = cov2;
      Algo1Options o1;
      o1.d = d2a;
      o1.kmax = kmax;
      o1.levels = levels2;
      o1.elbow = elbow;
      o1.seed = seed2;
      o1.structures = tmp.structures();
      Algo2Options o2;
      o2.beta_known = beta_known;
      o2.method = method == "SA" ? BetaMethod::SA : BetaMethod::WA;
      o2.d2 = d2b;
      o2.k_induced = kind;
      o2.elbow = elbow;
      o2.seed = seed2 ^ 0x9e3779b97f4a7c15ULL;
      o2.structures = o1.structures;
      const Algo1Result s1 = algo1(lg.graph, o1);
      const Algo2Result r = algo2(lg.graph, cv.z, s1, levels2, o2);
      std::cout << "beta_hat=" << fmt(r.beta_hat) << " d_tilde=" << r.d_tilde
                << " k_induced=" << r.k_induced << "\n";
      if (!g2.truth.empty()) {
        const Labels truth = load_labels(g2.truth, g2.truth_column, lg.ids);
        std::cout << "ari_algo1=" << fmt(ari(s1.tau_hat, truth))
                  << " ari_algo2=" << fmt(ari(r.tau_tilde, truth)) << "\n";
      }
      if (!out2.empty())
        write_labels(out2, lg.ids,
                     {{"tau_tilde", &r.tau_tilde}, {"tau_hat", &s1.tau_hat}});
    } else if (ch->parsed()) {
      if (family == "rank_one") {
        const ChernoffReport r = rho_rank_one(cp, cq, cbeta);
        std::cout << "rho1_star=" << fmt(r.rho1_star)
                  << "\nrho2_star=" << fmt(r.rho2_star)
                  << "\nrho_star=" << fmt(r.rho_star) << "\nargmin_pair="
                  << r.expanded.arg_k + 1 << "," << r.expanded.arg_l + 1
                  << "\n";
        for (int k = 0; k < 4; ++k)
          for (int l = k + 1; l < 4; ++l)
            std::cout << "C" << k + 1 << l + 1 << "="
                      << fmt(r.expanded.C(k, l))
                      << " t=" << fmt(r.expanded.t_star(k, l)) << "\n";
      } else {
        const HomogeneousReport h = rho_homogeneous(ca, cb, cbeta, cK);
        std::cout << "delta=" << fmt(h.delta)
                  << "\nrho1_star=" << fmt(h.rho1_star)
                  << "\nrho2_star=" << fmt(h.rho2_star)
                  << "\nrho_star=" << fmt(h.rho_star)
                  << "\nrho_star_numeric=" << fmt(h.numeric.rho_star) << "\n";
      }
    } else if (gr->parsed()) {
      gs.family = grid_family == "rank_one" ? GridFamily::RankOne
                                            : GridFamily::Homogeneous;
      gs.resolution2 = gs.resolution1;
      const auto cells = chernoff_grid(gs);
      if (grid_out.empty())
        write_grid(cells, gs.family, std::cout);
      else
        write_file(grid_out,
                   [&](std::ostream& o) { write_grid(cells, gs.family, o); });
    } else if (ex->parsed()) {
      ExperimentSpec s = spec_from(exp_config, exp_sets);
      s.seed = *exp_seed;
      s.seed_set = true;
      const Summary sum = run_experiment(s, workers);
      if (s.output.empty())
        write_table(sum, std::cout);
      else
        write_file(s.output, [&](std::ostream& o) { write_table(sum, o); });
      if (!s.records.empty())
        write_file(s.records, [&](std::ostream& o) { write_records(sum, o); });
      if (sum.failures > 0)
        std::cerr << sum.failures << " of " << s.trials
                  << " trials failed; see the records file\n";
    } else if (ing->parsed()) {
      const LoadedGraph lg = load_graph(ing_edges);
      std::filesystem::create_directories(ing_out);
      write_file(ing_out + "/graph.edges",
                 [&](std::ostream& o) { write_edge_list(lg.graph, o); });
      write_file(ing_out + "/id_map.csv", [&](std::ostream& o) {
        o << "vertex,original_id\n";
        for (std::size_t i = 0; i < lg.ids.size(); ++i)
          o << i << ',' << csv_escape(lg.ids[i]) << '\n';
      });
      std::cout << "vertices=" << lg.graph.n() << " edges=" << lg.edges
                << " duplicates=" << lg.duplicates
                << " self_loops=" << lg.self_loops << "\n";
      if (!ing_cov.empty()) {
        if (ing_col.empty()) throw std::runtime_error("--column is required");
        const Covariates cv = load_covariates(ing_cov, ing_col, lg.ids, ing_thr);
        write_labels(ing_out + "/covariates.csv", index_ids(lg.graph.n()),
                     {{"z", &cv.z}});
        write_file(ing_out + "/levels.csv", [&](std::ostream& o) {
          o << "level,label\n";
          for (std::size_t k = 0; k < cv.levels.size(); ++k)
            o << k << ',' << csv_escape(cv.levels[k]) << '\n';
        });
        std::cout << "levels=" << cv.levels.size() << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "sbmcov: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
