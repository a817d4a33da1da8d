#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "zsnpg/coefficients.hpp"
#include "zsnpg/harness.hpp"
#include "zsnpg/ne_oracle.hpp"
#include "zsnpg/npg_online.hpp"
#include "zsnpg/npg_population.hpp"

namespace {

zsnpg::StateDist parse_dist(const std::string& text, int n_states) {
  if (text.empty() || text == "uniform") {
    return zsnpg::StateDist::uniform(n_states);
  }
  std::vector<double> w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) w.push_back(std::stod(item));
  if (static_cast<int>(w.size()) != n_states) {
    throw std::invalid_argument("distribution needs " +
                                std::to_string(n_states) + " entries");
  }
  zsnpg::StateDist d;
  d.w = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<long>(w.size()));
  d.validate();
  return d;
}

void write_or_print(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("ZSNPG_THREADS")) {
    Eigen::setNbThreads(std::max(1, std::atoi(threads)));
  } else {
    Eigen::setNbThreads(1);
  }

  CLI::App app{"zero-sum Markov game NPG solver and benchmark harness"};
  app.require_subcommand(1);

  // run <spec.json>
  std::string spec_path;
  CLI::App* run = app.add_subcommand("run", "run an experiment spec");
  run->add_option("spec", spec_path, "experiment spec JSON")->required();

  // solve <game.json> --algo ...
  std::string game_path, algo = "population", out_path;
  int K = 1, T = 1, Tprime = 1, N = 1, Nprime = 1;
  double eta = 0.0, tau = 0.0, w_radius = 1.0;
  std::uint64_t seed = 0;
  CLI::App* solve = app.add_subcommand("solve", "solve one game");
  solve->add_option("game", game_path, "game JSON")->required();
  solve->add_option("--algo", algo, "population | online")
      ->check(CLI::IsMember({"population", "online"}));
  solve->add_option("--K", K, "outer rounds");
  solve->add_option("--T", T, "inner NPG iterations");
  solve->add_option("--Tprime", Tprime, "greedy-step rounds");
  solve->add_option("--N", N, "SGD steps (online iteration)");
  solve->add_option("--Nprime", Nprime, "SGD steps (online greedy, per player)");
  solve->add_option("--eta", eta, "NPG step (0 = default)");
  solve->add_option("--tau", tau, "entropy regularization weight");
  solve->add_option("--W", w_radius, "SGD projection radius");
  solve->add_option("--seed", seed, "master seed (online)");
  solve->add_option("--out", out_path, "trace CSV path (stdout if omitted)");

  // oracle <game.json> --tol
  std::string oracle_game;
  double tol = 1e-8;
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "equilibrium certificate");
  oracle_cmd->add_option("game", oracle_game, "game JSON")->required();
  oracle_cmd->add_option("--tol", tol, "value accuracy");

  // coeff <game.json> --rho --sigma --J
  std::string coeff_game, rho_text = "uniform", sigma_text = "uniform";
  int truncation_j = -1;
  CLI::App* coeff = app.add_subcommand("coeff", "concentrability report");
  coeff->add_option("game", coeff_game, "game JSON")->required();
  coeff->add_option("--rho", rho_text, "evaluation measure (csv or 'uniform')");
  coeff->add_option("--sigma", sigma_text, "reference measure (csv or 'uniform')");
  coeff->add_option("--J", truncation_j, "truncation depth (default from gamma)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      zsnpg::ExperimentSpec spec = zsnpg::ExperimentSpec::load(spec_path);
      zsnpg::ExperimentOutcome outcome = zsnpg::run_experiment(spec);
      std::cout << "summary: " << outcome.summary_file << "\n";
      return outcome.exit_code;
    }
    if (*solve) {
      zsnpg::MarkovGame game = zsnpg::MarkovGame::load(game_path);
      zsnpg::StateDist uniform = zsnpg::StateDist::uniform(game.n_states());
      if (algo == "population") {
        zsnpg::PopulationConfig cfg;
        cfg.outer_k = K;
        cfg.inner_t = T;
        cfg.omd_t_prime = Tprime;
        cfg.eta = eta;
        cfg.tau = tau;
        cfg.sigma = uniform;
        cfg.rho = uniform;
        zsnpg::PopulationResult result = zsnpg::run_population_npg(game, cfg);
        write_or_print(out_path, zsnpg::population_trace_csv(result));
      } else {
        zsnpg::FeatureMap features =
            zsnpg::FeatureMap::indicator(game.n_states(), game.n_actions());
        zsnpg::OnlineConfig cfg;
        cfg.w_radius = w_radius;
        cfg.sgd_n = N;
        cfg.sgd_n_prime = Nprime;
        cfg.npg_t = T;
        cfg.omd_t_prime = Tprime;
        cfg.sigma = uniform;
        cfg.rho = uniform;
        zsnpg::SamplingOracle sampler(game, seed);
        zsnpg::OnlineResult result =
            zsnpg::run_online_npg(sampler, features, cfg, K);
        write_or_print(out_path, zsnpg::online_trace_csv(result));
      }
      return 0;
    }
    if (*oracle_cmd) {
      zsnpg::MarkovGame game = zsnpg::MarkovGame::load(oracle_game);
      zsnpg::NashCertificate cert = zsnpg::shapley_value_iteration(game, tol);
      std::cout << cert.to_json_text() << "\n";
      return 0;
    }
    if (*coeff) {
      zsnpg::MarkovGame game = zsnpg::MarkovGame::load(coeff_game);
      zsnpg::StateDist rho = parse_dist(rho_text, game.n_states());
      zsnpg::StateDist sigma = parse_dist(sigma_text, game.n_states());
      int J = truncation_j >= 0
                  ? truncation_j
                  : zsnpg::default_truncation_depth(game.gamma());
      zsnpg::ConcentrabilityReport report =
          zsnpg::concentrability(game, rho, sigma, J);
      std::cout << report.to_json_text() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
