#include "zsnpg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "zsnpg/random.hpp"

namespace zsnpg {

namespace {

constexpr std::uint64_t kTagReplication = 0x7265706c;  // "repl"
constexpr std::uint64_t kTagGameGen = 0x67616d65;      // "game"

MarkovGame generate_random(int S, int A, double gamma, std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, kTagGameGen));
  MarkovGame game(S, A, gamma);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int b = 0; b < A; ++b) {
        game.reward(s, a, b) = rng.uniform();
        double total = 0.0;
        std::vector<double> row(S);
        for (int s2 = 0; s2 < S; ++s2) {
          row[s2] = rng.exponential();  // Dirichlet(1) row
          total += row[s2];
        }
        for (int s2 = 0; s2 < S; ++s2) {
          game.transition(s, a, b, s2) = row[s2] / total;
        }
      }
    }
  }
  game.validate();
  return game;
}

MarkovGame generate_pennies_chain(int n, double gamma) {
  MarkovGame game(n, 2, gamma);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        game.reward(s, a, b) = (a == b) ? 1.0 : 0.0;
        int next = (a == b) ? (s + 1) % n : s;
        game.transition(s, a, b, next) = 1.0;
      }
    }
  }
  game.validate();
  return game;
}

MarkovGame generate_single_state(const nlohmann::json& matrix, double gamma) {
  const int A = static_cast<int>(matrix.size());
  MarkovGame game(1, A, gamma);
  for (int a = 0; a < A; ++a) {
    if (static_cast<int>(matrix[a].size()) != A) {
      throw std::invalid_argument("single_state: matrix must be square");
    }
    for (int b = 0; b < A; ++b) {
      game.reward(0, a, b) = matrix[a][b].get<double>();
      game.transition(0, a, b, 0) = 1.0;
    }
  }
  game.validate();
  return game;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

}  // namespace

MarkovGame generate_game(const std::string& kind,
                         const std::string& params_json, std::uint64_t seed) {
  nlohmann::json p = nlohmann::json::parse(params_json);
  const double gamma = p.value("gamma", 0.9);
  if (kind == "random") {
    return generate_random(p.value("n_states", 2), p.value("n_actions", 2),
                           gamma, seed);
  }
  if (kind == "matching_pennies_chain") {
    return generate_pennies_chain(p.value("n_states", 3), gamma);
  }
  if (kind == "single_state") {
    if (!p.contains("matrix")) {
      throw std::invalid_argument("single_state: params need \"matrix\"");
    }
    return generate_single_state(p["matrix"], gamma);
  }
  throw std::invalid_argument("unknown game generator: " + kind);
}

ExperimentSpec ExperimentSpec::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ExperimentSpec spec;
  const auto& game = j.at("game");
  if (game.contains("path")) {
    spec.game_path = game["path"].get<std::string>();
  } else {
    spec.generator = game.at("generator").get<std::string>();
    if (game.contains("params")) spec.generator_params_json = game["params"].dump();
    spec.generator_seed = game.value("seed", 0ULL);
  }
  spec.algorithm = j.at("algorithm").get<std::string>();
  const auto& cfg = j.at("config");
  spec.outer_k = cfg.value("K", 1);
  spec.inner_t = cfg.value("T", 1);
  spec.omd_t_prime = cfg.value("Tprime", 1);
  spec.sgd_n = cfg.value("N", 1);
  spec.sgd_n_prime = cfg.value("Nprime", 1);
  spec.eta = cfg.value("eta", 0.0);
  spec.tau = cfg.value("tau", 0.0);
  spec.w_radius = cfg.value("W", 1.0);
  spec.replications = j.value("replications", 1);
  spec.master_seed = j.value("master_seed", 0ULL);
  spec.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("sweep")) {
    spec.sweep_param = j["sweep"].at("param").get<std::string>();
    spec.sweep_values = j["sweep"].at("values").get<std::vector<int>>();
  }
  if (j.contains("acceptance")) {
    const auto& acc = j["acceptance"];
    if (acc.contains("max_median_exploitability")) {
      spec.max_median_exploitability =
          acc["max_median_exploitability"].get<double>();
    }
    if (acc.contains("slope_min")) spec.slope_min = acc["slope_min"].get<double>();
    if (acc.contains("slope_max")) spec.slope_max = acc["slope_max"].get<double>();
  }
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open spec: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void ExperimentSpec::validate() const {
  if (game_path.empty() == generator.empty()) {
    throw std::invalid_argument(
        "ExperimentSpec: exactly one of game.path / game.generator required");
  }
  if (algorithm != "population" && algorithm != "population-entropy" &&
      algorithm != "online") {
    throw std::invalid_argument("ExperimentSpec: unknown algorithm " + algorithm);
  }
  if (algorithm == "population-entropy" && tau <= 0.0) {
    throw std::invalid_argument("ExperimentSpec: population-entropy needs tau > 0");
  }
  if (replications < 1) {
    throw std::invalid_argument("ExperimentSpec: replications must be >= 1");
  }
  if (output_dir.empty()) {
    throw std::invalid_argument("ExperimentSpec: output_dir required");
  }
  if (!sweep_param.empty() && sweep_param != "T" && sweep_param != "N") {
    throw std::invalid_argument("ExperimentSpec: sweep.param must be T or N");
  }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  const size_t n = lx.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double iqr_of(std::vector<double> values) {
  if (values.size() < 2) return 0.0;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    double pos = q * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  return quantile(0.75) - quantile(0.25);
}

namespace {

struct ReplicationOutcome {
  double final_exploitability = 0.0;
  double final_subopt = 0.0;
  std::string trace_csv;
};

ReplicationOutcome run_one(const MarkovGame& game, const ExperimentSpec& spec,
                           int sweep_value, std::uint64_t seed) {
  ReplicationOutcome out;
  StateDist uniform = StateDist::uniform(game.n_states());
  const int t_budget =
      spec.sweep_param == "T" && sweep_value > 0 ? sweep_value : spec.inner_t;
  const int n_budget =
      spec.sweep_param == "N" && sweep_value > 0 ? sweep_value : spec.sgd_n;

  if (spec.algorithm == "online") {
    FeatureMap features =
        FeatureMap::indicator(game.n_states(), game.n_actions());
    OnlineConfig cfg;
    cfg.w_radius = spec.w_radius;
    cfg.sgd_n = n_budget;
    cfg.sgd_n_prime = spec.sgd_n_prime;
    cfg.npg_t = t_budget;
    cfg.omd_t_prime = spec.omd_t_prime;
    cfg.sigma = uniform;
    cfg.rho = uniform;
    SamplingOracle oracle(game, seed);
    OnlineResult result = run_online_npg(oracle, features, cfg, spec.outer_k);
    out.final_exploitability = result.trace.back().exploitability;
    out.final_subopt = result.trace.back().subopt_sigma;
    out.trace_csv = online_trace_csv(result);
  } else {
    PopulationConfig cfg;
    cfg.outer_k = spec.outer_k;
    cfg.inner_t = t_budget;
    cfg.omd_t_prime = spec.omd_t_prime;
    cfg.eta = spec.eta;
    cfg.tau = spec.algorithm == "population-entropy" ? spec.tau : 0.0;
    cfg.sigma = uniform;
    cfg.rho = uniform;
    PopulationResult result = run_population_npg(game, cfg);
    out.final_exploitability = result.trace.back().exploitability_rho;
    out.final_subopt = result.trace.back().iter_subopt_sigma;
    out.trace_csv = population_trace_csv(result);
  }
  return out;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  MarkovGame game = spec.game_path.empty()
                        ? generate_game(spec.generator,
                                        spec.generator_params_json,
                                        spec.generator_seed)
                        : MarkovGame::load(spec.game_path);

  std::filesystem::create_directories(spec.output_dir);
  ExperimentOutcome outcome;

  std::vector<int> sweep =
      spec.sweep_values.empty() ? std::vector<int>{0} : spec.sweep_values;

  nlohmann::json summary;
  summary["schema"] = "zsnpg-summary-v1";
  summary["algorithm"] = spec.algorithm;
  nlohmann::json points = nlohmann::json::array();

  std::vector<double> fit_x, fit_y;
  for (int value : sweep) {
    std::vector<double> expl, subopt;
    for (int rep = 0; rep < spec.replications; ++rep) {
      std::uint64_t seed =
          derive_seed(spec.master_seed, kTagReplication,
                      static_cast<std::uint64_t>(value),
                      static_cast<std::uint64_t>(rep));
      ReplicationOutcome r = run_one(game, spec, value, seed);
      std::ostringstream name;
      name << spec.output_dir << "/trace";
      if (value > 0) name << "_" << spec.sweep_param << value;
      name << "_rep" << rep << ".csv";
      write_file(name.str(), "# schema: zsnpg-trace-v1\n" + r.trace_csv);
      outcome.trace_files.push_back(name.str());
      expl.push_back(r.final_exploitability);
      subopt.push_back(r.final_subopt);
    }
    nlohmann::json point;
    if (value > 0) point[spec.sweep_param] = value;
    point["median_exploitability"] = median_of(expl);
    point["iqr_exploitability"] = iqr_of(expl);
    point["median_subopt_sigma"] = median_of(subopt);
    point["iqr_subopt_sigma"] = iqr_of(subopt);
    points.push_back(point);
    if (value > 0) {
      fit_x.push_back(static_cast<double>(value));
      fit_y.push_back(std::max(median_of(subopt), 0.0));
    }

    if (spec.max_median_exploitability &&
        median_of(expl) > *spec.max_median_exploitability) {
      outcome.exit_code = 1;
    }
  }
  summary["points"] = points;

  if (fit_x.size() >= 2) {
    outcome.fitted_slope = loglog_slope(fit_x, fit_y);
    summary["rate_fit"] = {{"param", spec.sweep_param},
                           {"slope", outcome.fitted_slope}};
    if ((spec.slope_min && outcome.fitted_slope < *spec.slope_min) ||
        (spec.slope_max && outcome.fitted_slope > *spec.slope_max)) {
      outcome.exit_code = 1;
    }
  }
  summary["exit_code"] = outcome.exit_code;

  outcome.summary_file = spec.output_dir + "/summary.json";
  write_file(outcome.summary_file, summary.dump(2) + "\n");
  return outcome;
}

}  // namespace zsnpg
