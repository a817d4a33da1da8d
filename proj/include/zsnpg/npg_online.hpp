#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "zsnpg/game.hpp"
#include "zsnpg/ne_oracle.hpp"
#include "zsnpg/random.hpp"

namespace zsnpg {

// Feature vectors phi[s][a] in R^d with a recorded norm bound D; the induced
// log-linear class is beta-smooth with beta = D^2.
struct FeatureMap {
  int n_states = 0;
  int n_actions = 0;
  int dim = 0;
  Eigen::MatrixXd phi;  // (S*A) x d, row index s*A + a

  Eigen::VectorXd row(int s, int a) const {
    return phi.row(s * n_actions + a).transpose();
  }
  double norm_bound() const;  // D = max_{s,a} ||phi_{s,a}||_2
  void validate() const;

  // One-hot features, d = S*A: the tabular special case (zero approx error).
  static FeatureMap indicator(int n_states, int n_actions);
};

// Softmax over linear scores theta^T phi_{s,a}.
struct LogLinearPolicy {
  const FeatureMap* features = nullptr;  // non-owning
  Eigen::VectorXd theta;

  static LogLinearPolicy zero(const FeatureMap& features);

  // S x A matrix of action probabilities.
  Eigen::MatrixXd prob_table() const;
  // S x d matrix of E_{a~pi} phi_{s,a} rows (for score computation).
  Eigen::MatrixXd mean_feature_table() const;
  // grad of log pi(a|s) w.r.t. theta: phi_{s,a} - E_{a'} phi_{s,a'}.
  Eigen::VectorXd score(int s, int a) const;
};

// Uniform mixture of log-linear policies (the class is not closed under
// averaging, so the greedy step's average is kept as an explicit mixture).
struct MixturePolicy {
  const FeatureMap* features = nullptr;
  std::vector<Eigen::VectorXd> thetas;

  // Induced per-state mixed action distribution (average of the tables).
  Eigen::MatrixXd prob_table() const;
  TabularPolicy to_tabular() const;
};

// Episodic sampler: visitation draws and unbiased Q estimates by geometric
// continuation, with a transition counter for budget accounting.
class SamplingOracle {
 public:
  SamplingOracle(const MarkovGame& game, std::uint64_t master_seed);

  const MarkovGame& game() const { return *game_; }
  // nu0(s,a,b) = sigma(s)/|A|^2; sigma defaults to uniform.
  void set_initial_distribution(const StateDist& sigma);
  // Re-derives the stream for a named (tag, outer, inner) phase.
  void reseed(std::uint64_t tag, std::uint64_t outer, std::uint64_t inner);

  std::uint64_t samples_used() const { return samples_used_; }
  std::uint64_t master_seed() const { return master_seed_; }
  RandomStream& rng() { return rng_; }

  // Exact draw from the discounted state-action visitation nu^{pi1,pi2}_{nu0}:
  // start from nu0, then continue with probability gamma, resampling actions
  // on-policy and transitioning through P; the tuple at stopping is returned.
  void sample_state_action_visitation(const Eigen::MatrixXd& pi1_table,
                                      const Eigen::MatrixXd& pi2_table, int& s,
                                      int& a, int& b);

  // Unbiased estimate of Q^{pi1,pi2}(s,a,b): undiscounted reward sum along a
  // geometrically-stopped rollout (hard cap ceil(50/(1-gamma)) steps).
  double estimate_q(const Eigen::MatrixXd& pi1_table,
                    const Eigen::MatrixXd& pi2_table, int s, int a, int b);

  int horizon_cap() const { return horizon_cap_; }

 private:
  const MarkovGame* game_;
  std::uint64_t master_seed_;
  RandomStream rng_;
  Eigen::VectorXd nu0_state_;  // state marginal of nu0 (actions are uniform)
  std::uint64_t samples_used_ = 0;
  int horizon_cap_;
};

// SGD and step-size configuration; derived constants follow the norm bounds:
// B = 2D, beta = D^2, G = 2B(BW + 2/(1-gamma)).
struct OnlineConfig {
  double w_radius = 1.0;  // W
  int sgd_n = 1;          // N  (iteration-step SGD rounds)
  int sgd_n_prime = 1;    // N' (greedy-step SGD rounds per player)
  int npg_t = 1;          // T  (iteration-step NPG rounds)
  int omd_t_prime = 1;    // T' (greedy-step rounds)
  StateDist sigma;        // optimization measure (also sets nu0)
  StateDist rho;          // evaluation measure

  double score_bound(const FeatureMap& f) const { return 2.0 * f.norm_bound(); }
  double smoothness(const FeatureMap& f) const {
    double d = f.norm_bound();
    return d * d;
  }
  double grad_bound(const FeatureMap& f, double gamma) const {
    double b = score_bound(f);
    return 2.0 * b * (b * w_radius + 2.0 / (1.0 - gamma));
  }
  double sgd_step(const FeatureMap& f, double gamma, int n) const {
    return w_radius / (grad_bound(f, gamma) * std::sqrt(static_cast<double>(n)));
  }
  double npg_step(const FeatureMap& f, int t) const;  // sqrt(2 log|A|/(beta W^2 T))

  void validate(const MarkovGame& game) const;
};

// Projected SGD on the compatible-function-approximation loss; returns the
// uniform average of w_1..w_N (norm <= W).
Eigen::VectorXd sgd_npg_direction(SamplingOracle& oracle,
                                  const Eigen::MatrixXd& pi1_table,
                                  const LogLinearPolicy& pi2,
                                  const OnlineConfig& cfg);

struct OnlineIterationTrace {
  bool record_subopt = false;        // per-t evaluation is desk-scale only
  std::vector<double> subopt_sigma;  // per t, exact, when record_subopt
  int chosen_t = 0;
};

// T rounds of theta <- theta - eta * w_hat from theta = 0; the returned policy
// is drawn uniformly from {pi2^0..pi2^{T-1}}.
LogLinearPolicy online_iteration_step(SamplingOracle& oracle,
                                      const Eigen::MatrixXd& pi1_table,
                                      const FeatureMap& features,
                                      const OnlineConfig& cfg, int outer_k,
                                      OnlineIterationTrace* trace = nullptr);

struct OnlineGreedyResult {
  MixturePolicy x_bar;  // max player mixture over the T' rounds
  MixturePolicy f_bar;  // min player mixture (diagnostics)
  double gap = 0.0;     // duality gap of the induced mixtures on the greedy
                        // matrices, max over states
};

// Algorithm: both players fit SGD directions against the targets
// r + gamma * v_prev(s') and take mirrored parameter steps; returns the
// uniform mixture of the max player's per-round policies.
OnlineGreedyResult online_greedy_step(SamplingOracle& oracle,
                                      const ValueVector& v_prev,
                                      const FeatureMap& features,
                                      const OnlineConfig& cfg, int outer_k);

struct OnlineTraceRow {
  int k = 0;
  int t = 0;  // iteration index drawn as the round's output policy
  std::uint64_t n_samples_used = 0;
  double exploitability = 0.0;
  double subopt_sigma = 0.0;
  double greedy_gap = 0.0;
  std::uint64_t seed = 0;
};

struct OnlineResult {
  TabularPolicy pi1;  // induced per-state mixture of the final greedy step
  std::vector<OnlineTraceRow> trace;
};

OnlineResult run_online_npg(SamplingOracle& oracle, const FeatureMap& features,
                            const OnlineConfig& cfg, int outer_k);

std::string online_trace_csv(const OnlineResult& result);

}  // namespace zsnpg
