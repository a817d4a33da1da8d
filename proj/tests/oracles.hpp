#pragma once

// Test-side reference implementations, deliberately independent of the
// library's solvers: truncated power series instead of linear solves,
// exhaustive enumeration instead of MDP solvers, finite differences instead
// of analytic gradients.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "zsnpg/game.hpp"
#include "zsnpg/random.hpp"

namespace zsnpg::testing {

// V = sum_t gamma^t P_pi^t r_pi, truncated so the tail is below tol.
inline Eigen::VectorXd power_series_value(const MarkovGame& game,
                                          const TabularPolicy& pi1,
                                          const TabularPolicy& pi2,
                                          double tol = 1e-12) {
  Eigen::MatrixXd kernel = policy_kernel(game, pi1, pi2);
  Eigen::VectorXd r = policy_reward(game, pi1, pi2);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(game.n_states());
  Eigen::VectorXd term = r;
  double scale = 1.0;
  while (scale / (1.0 - game.gamma()) > tol) {
    v += scale * term;
    term = kernel * term;
    scale *= game.gamma();
  }
  return v;
}

// d = (1-gamma) sum_t gamma^t start^T P_pi^t, truncated.
inline Eigen::VectorXd truncated_visitation(const MarkovGame& game,
                                            const TabularPolicy& pi1,
                                            const TabularPolicy& pi2,
                                            const StateDist& start,
                                            double tol = 1e-12) {
  Eigen::MatrixXd kernel = policy_kernel(game, pi1, pi2);
  Eigen::VectorXd cur = start.w;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(game.n_states());
  double scale = 1.0 - game.gamma();
  while (scale / (1.0 - game.gamma()) > tol) {
    d += scale * cur;
    cur = kernel.transpose() * cur;
    scale *= game.gamma();
  }
  return d;
}

// central finite differences of a scalar function of the min player's logits
inline Eigen::MatrixXd finite_difference_gradient(
    const std::function<double(const Eigen::MatrixXd&)>& value_of_logits,
    const Eigen::MatrixXd& theta, double step = 1e-5) {
  Eigen::MatrixXd grad(theta.rows(), theta.cols());
  Eigen::MatrixXd probe = theta;
  for (int s = 0; s < theta.rows(); ++s) {
    for (int b = 0; b < theta.cols(); ++b) {
      probe(s, b) = theta(s, b) + step;
      double up = value_of_logits(probe);
      probe(s, b) = theta(s, b) - step;
      double down = value_of_logits(probe);
      probe(s, b) = theta(s, b);
      grad(s, b) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

// all deterministic tabular policies (|A|^|S| of them), gated for safety
inline std::vector<TabularPolicy> all_deterministic_policies(int S, int A) {
  double count = std::pow(static_cast<double>(A), S);
  if (count > 4096.0) throw std::runtime_error("enumeration gate: |A|^|S| > 4096");
  std::vector<TabularPolicy> out;
  std::vector<int> cur(S, 0);
  while (true) {
    TabularPolicy p;
    p.probs = Eigen::MatrixXd::Zero(S, A);
    for (int s = 0; s < S; ++s) p.probs(s, cur[s]) = 1.0;
    out.push_back(p);
    int i = 0;
    for (; i < S; ++i) {
      if (++cur[i] < A) break;
      cur[i] = 0;
    }
    if (i == S) break;
  }
  return out;
}

// min over deterministic min-player policies of V^{pi1,pi2}, per state
inline Eigen::VectorXd brute_force_min_value(const MarkovGame& game,
                                             const TabularPolicy& pi1) {
  Eigen::VectorXd best = Eigen::VectorXd::Constant(
      game.n_states(), std::numeric_limits<double>::infinity());
  for (const TabularPolicy& pi2 :
       all_deterministic_policies(game.n_states(), game.n_actions())) {
    Eigen::VectorXd v = power_series_value(game, pi1, pi2);
    best = best.cwiseMin(v);
  }
  return best;
}

// value of a 2x2 zero-sum matrix game by dense grid search over both mixers
inline double grid_search_value_2x2(const Eigen::MatrixXd& A, int grid = 2000) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid; ++i) {
    double x = static_cast<double>(i) / grid;
    // min player's exact response to the mixed row strategy (x, 1-x)
    double col0 = x * A(0, 0) + (1.0 - x) * A(1, 0);
    double col1 = x * A(0, 1) + (1.0 - x) * A(1, 1);
    best = std::max(best, std::min(col0, col1));
  }
  return best;
}

// seeded random game shared by several suites
inline MarkovGame random_game(int S, int A, double gamma, std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, 0x74657374 /* "test" */));
  MarkovGame game(S, A, gamma);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int b = 0; b < A; ++b) {
        game.reward(s, a, b) = rng.uniform();
        double total = 0.0;
        std::vector<double> row(S);
        for (int s2 = 0; s2 < S; ++s2) {
          row[s2] = rng.exponential();
          total += row[s2];
        }
        for (int s2 = 0; s2 < S; ++s2) {
          game.transition(s, a, b, s2) = row[s2] / total;
        }
      }
    }
  }
  return game;
}

inline TabularPolicy random_policy(int S, int A, std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, 0x706f6c /* "pol" */));
  Eigen::MatrixXd theta(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) theta(s, a) = 2.0 * rng.uniform() - 1.0;
  }
  return TabularPolicy::from_logits(theta);
}

}  // namespace zsnpg::testing
