#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace zsnpg {

inline constexpr double kSimplexTol = 1e-12;

// Tabular two-player zero-sum Markov game (S, A, P, r, gamma). Both players
// share the action set. Rewards are in [0, 1]; transitions are row-stochastic.
class MarkovGame {
 public:
  MarkovGame(int n_states, int n_actions, double gamma);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  double value_range() const { return 1.0 / (1.0 - gamma_); }

  double reward(int s, int a, int b) const {
    return reward_[(s * n_actions_ + a) * n_actions_ + b];
  }
  double& reward(int s, int a, int b) {
    return reward_[(s * n_actions_ + a) * n_actions_ + b];
  }
  double transition(int s, int a, int b, int s2) const {
    return transition_[((s * n_actions_ + a) * n_actions_ + b) * n_states_ + s2];
  }
  double& transition(int s, int a, int b, int s2) {
    return transition_[((s * n_actions_ + a) * n_actions_ + b) * n_states_ + s2];
  }
  const double* transition_row(int s, int a, int b) const {
    return transition_.data() + ((s * n_actions_ + a) * n_actions_ + b) * n_states_;
  }

  // Throws std::invalid_argument naming the offending entry.
  void validate() const;

  static MarkovGame from_json_text(const std::string& text);
  static MarkovGame load(const std::string& path);
  std::string to_json_text() const;
  void save(const std::string& path) const;

 private:
  int n_states_;
  int n_actions_;
  double gamma_;
  std::vector<double> reward_;      // [s][a][b]
  std::vector<double> transition_;  // [s][a][b][s']
};

// Per-state action distribution, optionally carrying softmax logits.
struct TabularPolicy {
  Eigen::MatrixXd probs;                  // S x A, rows on the simplex
  std::optional<Eigen::MatrixXd> logits;  // S x A when softmax-parameterized

  static TabularPolicy uniform(int n_states, int n_actions);
  // Builds probs = softmax(theta) row-wise; logits stored shift-normalized
  // (per-state mean zero).
  static TabularPolicy from_logits(const Eigen::MatrixXd& theta);

  int n_states() const { return static_cast<int>(probs.rows()); }
  int n_actions() const { return static_cast<int>(probs.cols()); }
  void validate() const;
};

// Distribution over states (rho, sigma, or a visitation d).
struct StateDist {
  Eigen::VectorXd w;

  static StateDist uniform(int n_states);
  static StateDist point_mass(int n_states, int s);
  void validate() const;
};

enum class ValueRole { kPlain, kRegularized };

struct ValueVector {
  Eigen::VectorXd v;
  ValueRole role = ValueRole::kPlain;

  static ValueVector zeros(int n_states) {
    return ValueVector{Eigen::VectorXd::Zero(n_states), ValueRole::kPlain};
  }
};

// Q(s,a,b) together with the V it was backed up from; advantage is derived.
struct QTensor {
  std::vector<Eigen::MatrixXd> q;  // per state, A x A
  Eigen::VectorXd v;

  Eigen::MatrixXd advantage(int s) const {
    return q[s].array() - v[s];
  }
};

// E_{a~pi1, b~pi2} of the transition kernel and stage reward.
Eigen::MatrixXd policy_kernel(const MarkovGame& game, const TabularPolicy& pi1,
                              const TabularPolicy& pi2);
Eigen::VectorXd policy_reward(const MarkovGame& game, const TabularPolicy& pi1,
                              const TabularPolicy& pi2);

// Stage matrix r(s,.,.) + gamma * sum_{s'} P(s'|s,.,.) v(s').
Eigen::MatrixXd stage_matrix(const MarkovGame& game, const Eigen::VectorXd& v,
                             int s);

// Unique solution of V = r_pi + gamma P_pi V (dense LU).
ValueVector evaluate_value(const MarkovGame& game, const TabularPolicy& pi1,
                           const TabularPolicy& pi2);

QTensor q_and_advantage(const MarkovGame& game, const TabularPolicy& pi1,
                        const TabularPolicy& pi2);

// Discounted state occupancy d = (1-gamma) sum_t gamma^t start P^t.
StateDist visitation(const MarkovGame& game, const TabularPolicy& pi1,
                     const TabularPolicy& pi2, const StateDist& start);

// Bellman operators. T_{pi1,pi2}, T_{pi1} = inf_{pi2} T_{pi1,pi2}, and the
// full T = sup_{pi1} inf_{pi2} which solves a matrix game per state.
ValueVector bellman_joint(const MarkovGame& game, const ValueVector& v,
                          const TabularPolicy& pi1, const TabularPolicy& pi2);
ValueVector bellman_min_response(const MarkovGame& game, const ValueVector& v,
                                 const TabularPolicy& pi1);
ValueVector bellman_full(const MarkovGame& game, const ValueVector& v,
                         double matrix_tol = 1e-9);

// Exact policy gradient of V^{pi1,pi2}(sigma) w.r.t. the min player's softmax
// logits; entry (s,b). The Q and advantage plug-ins coincide (zero-mean score).
Eigen::MatrixXd policy_gradient_min(const MarkovGame& game,
                                    const TabularPolicy& pi1,
                                    const TabularPolicy& pi2,
                                    const StateDist& sigma,
                                    bool use_q_form = false);

// Fisher information of the min player's softmax logits under d_sigma,
// flattened (S*A) x (S*A), block-diagonal per state.
Eigen::MatrixXd fisher_matrix(const MarkovGame& game, const TabularPolicy& pi1,
                              const TabularPolicy& pi2, const StateDist& sigma);

}  // namespace zsnpg
