#include "zsnpg/npg_population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace zsnpg {

namespace {

Eigen::MatrixXd safe_log(const Eigen::MatrixXd& probs) {
  return probs.array().max(1e-300).log().matrix();
}

// row-wise weighted plug-in sum_a pi1(a|s) M_s(a,b) for a per-state target.
Eigen::VectorXd weighted_over_a(const Eigen::MatrixXd& pi1_row_probs, int s,
                                const Eigen::MatrixXd& target) {
  return target.transpose() * pi1_row_probs.row(s).transpose();
}

double dot_dist(const StateDist& d, const Eigen::VectorXd& v) {
  return d.w.dot(v);
}

// least-squares slope of y against x
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

double PopulationConfig::effective_eta(const MarkovGame& game) const {
  if (eta > 0.0) return eta;
  const double g = 1.0 - game.gamma();
  return g * g * std::log(static_cast<double>(game.n_actions()));
}

void PopulationConfig::validate(const MarkovGame& game) const {
  if (outer_k < 1 || inner_t < 1 || omd_t_prime < 1) {
    throw std::invalid_argument("PopulationConfig: K, T, T' must be >= 1");
  }
  if (eta < 0.0 || tau < 0.0) {
    throw std::invalid_argument("PopulationConfig: eta and tau must be >= 0");
  }
  sigma.validate();
  rho.validate();
  if (sigma.w.size() != game.n_states() || rho.w.size() != game.n_states()) {
    throw std::invalid_argument("PopulationConfig: measure dimension mismatch");
  }
  if (sigma.w.minCoeff() <= 0.0) {
    throw std::invalid_argument("PopulationConfig: sigma must be strictly positive");
  }
  if (tau > 0.0 &&
      effective_eta(game) * tau / (1.0 - game.gamma()) > 1.0 + 1e-12) {
    throw std::invalid_argument(
        "PopulationConfig: eta*tau/(1-gamma) > 1 flips the update exponent");
  }
}

TabularPolicy npg_inner_update(const MarkovGame& game, const TabularPolicy& pi1,
                               const TabularPolicy& pi2, double eta) {
  if (eta < 0.0) throw std::invalid_argument("npg_inner_update: eta must be >= 0");
  pi1.validate();
  pi2.validate();
  const int S = game.n_states();
  const double scale = eta / (1.0 - game.gamma());
  QTensor qt = q_and_advantage(game, pi1, pi2);
  Eigen::MatrixXd theta = safe_log(pi2.probs);
  for (int s = 0; s < S; ++s) {
    Eigen::VectorXd w = weighted_over_a(pi1.probs, s, qt.advantage(s));
    theta.row(s) -= scale * w.transpose();
  }
  return TabularPolicy::from_logits(theta);
}

FisherCheckResult fisher_npg_update_check(const MarkovGame& game,
                                          const TabularPolicy& pi1,
                                          const TabularPolicy& pi2, double eta,
                                          const StateDist& sigma) {
  TabularPolicy pi2_logit = pi2;
  if (!pi2_logit.logits) {
    Eigen::MatrixXd theta = safe_log(pi2.probs);
    pi2_logit = TabularPolicy::from_logits(theta);
  }
  const int S = game.n_states(), A = game.n_actions();

  Eigen::MatrixXd grad = policy_gradient_min(game, pi1, pi2_logit, sigma);
  Eigen::MatrixXd fisher = fisher_matrix(game, pi1, pi2_logit, sigma);
  Eigen::VectorXd grad_vec(S * A);
  for (int s = 0; s < S; ++s) {
    grad_vec.segment(s * A, A) = grad.row(s).transpose();
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(fisher);
  Eigen::VectorXd direction = cod.pseudoInverse() * grad_vec;

  Eigen::MatrixXd theta_new = *pi2_logit.logits;
  for (int s = 0; s < S; ++s) {
    theta_new.row(s) -= eta * direction.segment(s * A, A).transpose();
  }
  TabularPolicy via_fisher = TabularPolicy::from_logits(theta_new);
  TabularPolicy via_closed_form = npg_inner_update(game, pi1, pi2_logit, eta);

  StateDist d = visitation(game, pi1, pi2_logit, sigma);
  FisherCheckResult result;
  for (int s = 0; s < S; ++s) {
    if (d.w[s] <= 1e-8) {
      result.excluded_states.push_back(s);
      continue;
    }
    double dev =
        (via_fisher.probs.row(s) - via_closed_form.probs.row(s)).cwiseAbs().maxCoeff();
    result.max_deviation = std::max(result.max_deviation, dev);
  }
  return result;
}

ValueVector regularized_value(const MarkovGame& game, const TabularPolicy& pi1,
                              const TabularPolicy& pi2, double tau) {
  const int S = game.n_states();
  Eigen::VectorXd r_bar = policy_reward(game, pi1, pi2);
  Eigen::MatrixXd log_pi2 = safe_log(pi2.probs);
  for (int s = 0; s < S; ++s) {
    r_bar[s] += tau * pi2.probs.row(s).dot(log_pi2.row(s));
  }
  Eigen::MatrixXd kernel = policy_kernel(game, pi1, pi2);
  Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(S, S) - game.gamma() * kernel;
  Eigen::VectorXd v = system.partialPivLu().solve(r_bar);
  return ValueVector{v, ValueRole::kRegularized};
}

QTensor regularized_q(const MarkovGame& game, const TabularPolicy& pi1,
                      const TabularPolicy& pi2, double tau) {
  const int S = game.n_states(), A = game.n_actions();
  ValueVector v_tau = regularized_value(game, pi1, pi2, tau);
  QTensor qt;
  qt.v = v_tau.v;
  qt.q.reserve(S);
  for (int s = 0; s < S; ++s) {
    qt.q.push_back(stage_matrix(game, v_tau.v, s));
  }
  (void)A;
  return qt;
}

SoftBestResponse soft_best_response_min(const MarkovGame& game,
                                        const TabularPolicy& pi1, double tau,
                                        double tol) {
  if (tau <= 0.0) {
    throw std::invalid_argument("soft_best_response_min: tau must be > 0");
  }
  const int S = game.n_states(), A = game.n_actions();
  const double gamma = game.gamma();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
  Eigen::MatrixXd qbar(S, A);
  // soft value iteration: v(s) <- -tau log sum_b exp(-qbar(s,b)/tau)
  const double stop = tol * (1.0 - gamma) / std::max(gamma, 1e-12);
  const int max_sweeps = 10'000'000;
  for (int it = 0; it < max_sweeps; ++it) {
    for (int s = 0; s < S; ++s) {
      Eigen::MatrixXd stage = stage_matrix(game, v, s);
      qbar.row(s) = weighted_over_a(pi1.probs, s, stage).transpose();
    }
    Eigen::VectorXd v_new(S);
    for (int s = 0; s < S; ++s) {
      double m = qbar.row(s).minCoeff();
      double z = ((m - qbar.row(s).array()) / tau).exp().sum();
      v_new[s] = m - tau * std::log(z);
    }
    double change = (v_new - v).cwiseAbs().maxCoeff();
    v = v_new;
    if (change <= stop) break;
  }
  SoftBestResponse out;
  out.v_tau_star = ValueVector{v, ValueRole::kRegularized};
  Eigen::MatrixXd theta(S, A);
  for (int s = 0; s < S; ++s) {
    Eigen::MatrixXd stage = stage_matrix(game, v, s);
    theta.row(s) = -weighted_over_a(pi1.probs, s, stage).transpose() / tau;
  }
  out.pi_tau_star = TabularPolicy::from_logits(theta);
  return out;
}

IterationResult iteration_step(const MarkovGame& game, const TabularPolicy& pi1,
                               int t_iters, double eta, double tau,
                               const StateDist& sigma,
                               bool record_trajectory) {
  if (t_iters < 1) throw std::invalid_argument("iteration_step: T must be >= 1");
  if (eta <= 0.0) throw std::invalid_argument("iteration_step: eta must be > 0");
  const double gamma = game.gamma();
  if (tau > 0.0 && eta * tau / (1.0 - gamma) > 1.0 + 1e-12) {
    throw std::invalid_argument(
        "iteration_step: eta*tau/(1-gamma) > 1 flips the update exponent");
  }
  const int S = game.n_states();
  const double scale = eta / (1.0 - gamma);

  IterationResult result;
  TabularPolicy pi2 = TabularPolicy::uniform(S, game.n_actions());
  if (record_trajectory) result.trajectory.push_back(pi2);
  for (int t = 0; t < t_iters; ++t) {
    if (tau == 0.0) {
      pi2 = npg_inner_update(game, pi1, pi2, eta);
    } else {
      QTensor qt = regularized_q(game, pi1, pi2, tau);
      Eigen::MatrixXd theta = (1.0 - scale * tau) * safe_log(pi2.probs);
      for (int s = 0; s < S; ++s) {
        theta.row(s) -= scale * weighted_over_a(pi1.probs, s, qt.q[s]).transpose();
      }
      pi2 = TabularPolicy::from_logits(theta);
    }
    if (record_trajectory) result.trajectory.push_back(pi2);
  }

  result.pi2 = pi2;
  result.v_k = evaluate_value(game, pi1, pi2);
  BestResponse br = best_response_min(game, pi1);
  result.suboptimality = dot_dist(sigma, result.v_k.v) - dot_dist(sigma, br.value.v);
  return result;
}

RegularizedReport regularized_diagnostics(
    const MarkovGame& game, const TabularPolicy& pi1,
    const std::vector<TabularPolicy>& trajectory, double tau,
    const StateDist& sigma) {
  if (tau <= 0.0) {
    throw std::invalid_argument("regularized_diagnostics: tau must be > 0");
  }
  if (trajectory.size() < 2) {
    throw std::invalid_argument("regularized_diagnostics: need >= 2 policies");
  }
  RegularizedReport report;

  std::vector<double> v_tau_sigma;
  v_tau_sigma.reserve(trajectory.size());
  for (const TabularPolicy& pi2 : trajectory) {
    v_tau_sigma.push_back(
        dot_dist(sigma, regularized_value(game, pi1, pi2, tau).v));
  }
  report.min_improvement = std::numeric_limits<double>::infinity();
  for (size_t t = 0; t + 1 < v_tau_sigma.size(); ++t) {
    double imp = v_tau_sigma[t] - v_tau_sigma[t + 1];
    report.improvements.push_back(imp);
    report.min_improvement = std::min(report.min_improvement, imp);
  }

  SoftBestResponse soft = soft_best_response_min(game, pi1, tau);
  report.v_tau_star_sigma = dot_dist(sigma, soft.v_tau_star.v);
  report.v_pi_tau_star_sigma =
      dot_dist(sigma, evaluate_value(game, pi1, soft.pi_tau_star).v);
  report.v_best_response_sigma =
      dot_dist(sigma, best_response_min(game, pi1).value.v);
  report.sandwich_width_bound =
      tau * std::log(static_cast<double>(game.n_actions())) /
      (1.0 - game.gamma());
  report.sandwich_holds =
      report.v_pi_tau_star_sigma >= report.v_best_response_sigma - 1e-8 &&
      report.v_best_response_sigma >= report.v_tau_star_sigma - 1e-8 &&
      report.v_tau_star_sigma >=
          report.v_pi_tau_star_sigma - report.sandwich_width_bound - 1e-8;

  report.gaps.reserve(v_tau_sigma.size());
  for (double v : v_tau_sigma) report.gaps.push_back(v - report.v_tau_star_sigma);
  std::vector<double> xs, ys;
  for (size_t t = v_tau_sigma.size() / 2; t < v_tau_sigma.size(); ++t) {
    if (report.gaps[t] > 0.0) {
      xs.push_back(static_cast<double>(t));
      ys.push_back(std::log(report.gaps[t]));
    }
  }
  report.log_gap_slope = ls_slope(xs, ys);
  return report;
}

PopulationResult run_population_npg(const MarkovGame& game,
                                    const PopulationConfig& config) {
  config.validate(game);
  const double eta = config.effective_eta(game);

  NashCertificate cert = shapley_value_iteration(game, 1e-9);
  PopulationResult result;
  ValueVector v_prev = ValueVector::zeros(game.n_states());
  TabularPolicy pi1 = TabularPolicy::uniform(game.n_states(), game.n_actions());

  for (int k = 1; k <= config.outer_k; ++k) {
    GreedyResult greedy = run_greedy(game, v_prev, config.omd_t_prime);
    pi1 = greedy.x_bar;
    IterationResult iter = iteration_step(game, pi1, config.inner_t, eta,
                                          config.tau, config.sigma);
    // clamp solver round-off so the next greedy step's range check passes
    Eigen::VectorXd v_k =
        iter.v_k.v.cwiseMax(0.0).cwiseMin(game.value_range());
    v_prev = ValueVector{v_k, ValueRole::kPlain};

    OuterTraceRow row;
    row.k = k;
    row.exploitability_rho = exploitability(game, pi1, config.rho, cert);
    row.greedy_gap_max = greedy.max_gap();
    row.iter_subopt_sigma = iter.suboptimality;
    result.trace.push_back(row);
    result.values.push_back(v_prev);
  }
  result.pi1 = pi1;
  return result;
}

std::string population_trace_csv(const PopulationResult& result) {
  std::ostringstream os;
  os << "k,exploitability_rho,greedy_gap_max,iter_subopt_sigma\n";
  os.precision(17);
  for (const auto& row : result.trace) {
    os << row.k << ',' << row.exploitability_rho << ',' << row.greedy_gap_max
       << ',' << row.iter_subopt_sigma << "\n";
  }
  return os.str();
}

}  // namespace zsnpg
