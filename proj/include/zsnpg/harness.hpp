#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zsnpg/game.hpp"
#include "zsnpg/npg_online.hpp"
#include "zsnpg/npg_population.hpp"

namespace zsnpg {

// Seeded game generators for benchmarks.
// kind "random": Dirichlet(1) transition rows, uniform [0,1] rewards;
//   params {"n_states", "n_actions", "gamma"}.
// kind "matching_pennies_chain": n states, pennies payoffs [[1,0],[0,1]],
//   deterministic chain that advances on a == b; params {"n_states", "gamma"}.
// kind "single_state": one state wrapping params {"matrix", "gamma"}.
MarkovGame generate_game(const std::string& kind, const std::string& params_json,
                         std::uint64_t seed);

struct ExperimentSpec {
  // game source: exactly one of path / generator
  std::string game_path;
  std::string generator;
  std::string generator_params_json = "{}";
  std::uint64_t generator_seed = 0;

  std::string algorithm;  // population | population-entropy | online
  int outer_k = 1;
  int inner_t = 1;
  int omd_t_prime = 1;
  int sgd_n = 1;
  int sgd_n_prime = 1;
  double eta = 0.0;  // 0 selects the population default
  double tau = 0.0;
  double w_radius = 1.0;

  int replications = 1;
  std::uint64_t master_seed = 0;
  std::string output_dir;

  // optional sweep of one budget parameter ("T" or "N") for rate fits
  std::string sweep_param;
  std::vector<int> sweep_values;

  // optional acceptance thresholds; violating any makes run_experiment
  // return nonzero
  std::optional<double> max_median_exploitability;
  std::optional<double> slope_min;
  std::optional<double> slope_max;

  static ExperimentSpec from_json_text(const std::string& text);
  static ExperimentSpec load(const std::string& path);
  void validate() const;
};

struct ExperimentOutcome {
  int exit_code = 0;
  std::vector<std::string> trace_files;
  std::string summary_file;
  double fitted_slope = 0.0;  // log-log fit across sweep values (if any)
};

// Runs all replications (and sweep points), writes per-replication trace CSVs
// plus a summary JSON with medians/IQRs and rate fits. Deterministic in
// (spec, master_seed): identical runs produce byte-identical files.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

// least-squares slope helpers shared with tests
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
double median_of(std::vector<double> values);
double iqr_of(std::vector<double> values);

}  // namespace zsnpg
