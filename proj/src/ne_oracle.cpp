#include "zsnpg/ne_oracle.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace zsnpg {

ValueVector bellman_full(const MarkovGame& game, const ValueVector& v,
                         double matrix_tol) {
  Eigen::VectorXd out(game.n_states());
  for (int s = 0; s < game.n_states(); ++s) {
    Eigen::MatrixXd M = stage_matrix(game, v.v, s);
    out[s] = matrix_game_solve(M, matrix_tol).value;
  }
  return ValueVector{out, v.role};
}

NashCertificate shapley_value_iteration(const MarkovGame& game, double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("shapley_value_iteration: tol must be > 0");
  }
  const int S = game.n_states(), A = game.n_actions();
  const double gamma = game.gamma();
  // Residual-to-value-error conversion: ||V - V*|| <= gamma/(1-gamma) * residual,
  // so this threshold certifies value error <= tol/2.
  const double residual_target =
      (gamma > 0.0) ? tol * (1.0 - gamma) / (2.0 * gamma) : tol;
  const double matrix_tol = std::min(1e-9, residual_target / 10.0);

  Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
  double residual = 0.0;
  // Contraction gives a hard cap on the sweeps needed from V=0.
  int max_sweeps = 64;
  if (gamma > 0.0) {
    max_sweeps = static_cast<int>(
        std::ceil(std::log(residual_target * (1.0 - gamma) /
                           (1.0 + game.value_range())) / std::log(gamma))) + 8;
  }
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Eigen::VectorXd next(S);
    for (int s = 0; s < S; ++s) {
      next[s] = matrix_game_solve(stage_matrix(game, v, s), matrix_tol).value;
    }
    residual = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (residual <= residual_target) break;
  }
  if (residual > residual_target) {
    throw std::runtime_error("shapley_value_iteration: residual " +
                             std::to_string(residual) + " above target");
  }

  NashCertificate cert;
  cert.v_star = ValueVector{v, ValueRole::kPlain};
  cert.pi1_star.probs.resize(S, A);
  cert.pi2_star.probs.resize(S, A);
  Eigen::VectorXd applied(S);
  for (int s = 0; s < S; ++s) {
    MatrixGameSolution sol = matrix_game_solve(stage_matrix(game, v, s), matrix_tol);
    cert.pi1_star.probs.row(s) = sol.row_strategy.transpose();
    cert.pi2_star.probs.row(s) = sol.col_strategy.transpose();
    applied[s] = sol.value;
  }
  cert.residual = (applied - v).cwiseAbs().maxCoeff();
  return cert;
}

BestResponse best_response_min(const MarkovGame& game, const TabularPolicy& pi1) {
  pi1.validate();
  const int S = game.n_states(), A = game.n_actions();
  const double gamma = game.gamma();

  // Induced MDP: stage reward E_{a~pi1} r(s,a,b), kernel E_{a~pi1} P.
  // Value iteration on T_{pi1} to a tight residual, then greedy extraction.
  ValueVector v = ValueVector::zeros(S);
  const double residual_target = 1e-12;
  int max_sweeps = 64;
  if (gamma > 0.0) {
    max_sweeps = static_cast<int>(
        std::ceil(std::log(residual_target * (1.0 - gamma) /
                           (1.0 + game.value_range())) / std::log(gamma))) + 8;
  }
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    ValueVector next = bellman_min_response(game, v, pi1);
    double residual = (next.v - v.v).cwiseAbs().maxCoeff();
    v = next;
    if (residual <= residual_target) break;
  }

  BestResponse out;
  out.pi2.probs = Eigen::MatrixXd::Zero(S, A);
  for (int s = 0; s < S; ++s) {
    Eigen::RowVectorXd weighted = pi1.probs.row(s) * stage_matrix(game, v.v, s);
    int arg = 0;
    weighted.minCoeff(&arg);  // lowest index on ties
    out.pi2.probs(s, arg) = 1.0;
  }
  // Return the exact value of the extracted policy.
  out.value = evaluate_value(game, pi1, out.pi2);
  return out;
}

double exploitability(const MarkovGame& game, const TabularPolicy& pi1,
                      const StateDist& rho, double tol) {
  return exploitability(game, pi1, rho, shapley_value_iteration(game, tol));
}

double exploitability(const MarkovGame& game, const TabularPolicy& pi1,
                      const StateDist& rho, const NashCertificate& cert) {
  BestResponse br = best_response_min(game, pi1);
  return rho.w.dot(cert.v_star.v) - rho.w.dot(br.value.v);
}

std::string NashCertificate::to_json_text() const {
  nlohmann::json j;
  j["v_star"] = std::vector<double>(v_star.v.data(), v_star.v.data() + v_star.v.size());
  j["residual"] = residual;
  auto policy_rows = [](const TabularPolicy& pi) {
    nlohmann::json rows = nlohmann::json::array();
    for (int s = 0; s < pi.n_states(); ++s) {
      std::vector<double> row(pi.n_actions());
      for (int a = 0; a < pi.n_actions(); ++a) row[a] = pi.probs(s, a);
      rows.push_back(row);
    }
    return rows;
  };
  j["pi1_star"] = policy_rows(pi1_star);
  j["pi2_star"] = policy_rows(pi2_star);
  return j.dump(2);
}

}  // namespace zsnpg
