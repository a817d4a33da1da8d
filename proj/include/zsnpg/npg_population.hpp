#pragma once

#include <string>
#include <vector>

#include "zsnpg/game.hpp"
#include "zsnpg/greedy_omd.hpp"
#include "zsnpg/ne_oracle.hpp"

namespace zsnpg {

// Outer/inner loop sizes and step parameters for the exact (population) solver.
struct PopulationConfig {
  int outer_k = 1;       // K: greedy + iteration-step rounds
  int inner_t = 1;       // T: NPG iterations per iteration step
  int omd_t_prime = 1;   // T': OMD rounds per greedy step
  double eta = 0.0;      // NPG step; 0 selects the default (1-gamma)^2 log|A|
  double tau = 0.0;      // entropy regularization weight (0 = plain NPG)
  StateDist sigma;       // optimization measure (must be strictly positive)
  StateDist rho;         // evaluation measure

  double effective_eta(const MarkovGame& game) const;
  void validate(const MarkovGame& game) const;
};

struct OuterTraceRow {
  int k = 0;
  double exploitability_rho = 0.0;
  double greedy_gap_max = 0.0;
  double iter_subopt_sigma = 0.0;
};

struct PopulationResult {
  TabularPolicy pi1;                  // final max-player policy
  std::vector<ValueVector> values;    // V_k per outer round
  std::vector<OuterTraceRow> trace;
};

// One exponential-weights NPG step for the min player:
// pi2'(b|s) ∝ pi2(b|s) * exp(-(eta/(1-gamma)) * sum_a pi1(a|s) A(s,a,b)).
TabularPolicy npg_inner_update(const MarkovGame& game, const TabularPolicy& pi1,
                               const TabularPolicy& pi2, double eta);

struct FisherCheckResult {
  double max_deviation = 0.0;        // over states with visitation > 1e-8
  std::vector<int> excluded_states;  // visitation <= 1e-8 under sigma
};

// Recomputes the update as theta - eta * pinv(F_sigma) * grad and compares the
// induced policy against npg_inner_update (they agree on visited states).
FisherCheckResult fisher_npg_update_check(const MarkovGame& game,
                                          const TabularPolicy& pi1,
                                          const TabularPolicy& pi2, double eta,
                                          const StateDist& sigma);

struct IterationResult {
  TabularPolicy pi2;                      // pi2^T
  ValueVector v_k;                        // unregularized V^{pi1, pi2^T}
  double suboptimality = 0.0;             // at sigma, vs exact best response
  std::vector<TabularPolicy> trajectory;  // pi2^0..pi2^T if requested
};

// T inner NPG iterations against fixed pi1, starting from uniform pi2.
// tau > 0 switches to the entropy-regularized update.
IterationResult iteration_step(const MarkovGame& game, const TabularPolicy& pi1,
                               int t_iters, double eta, double tau,
                               const StateDist& sigma,
                               bool record_trajectory = false);

// Entropy-regularized evaluation helpers.
// V_tau treats the min player's effective reward as r + tau * log pi2(b|s).
ValueVector regularized_value(const MarkovGame& game, const TabularPolicy& pi1,
                              const TabularPolicy& pi2, double tau);
// Q_tau(s,a,b) = r(s,a,b) + gamma * E_{s'} V_tau(s'); no instantaneous log term.
QTensor regularized_q(const MarkovGame& game, const TabularPolicy& pi1,
                      const TabularPolicy& pi2, double tau);
// Soft (log-sum-exp) value iteration for the min player's regularized MDP
// against fixed pi1; returns optimal regularized value and its softmax policy.
struct SoftBestResponse {
  ValueVector v_tau_star;
  TabularPolicy pi_tau_star;
};
SoftBestResponse soft_best_response_min(const MarkovGame& game,
                                        const TabularPolicy& pi1, double tau,
                                        double tol = 1e-12);

struct RegularizedReport {
  std::vector<double> improvements;  // V_tau^t(sigma) - V_tau^{t+1}(sigma)
  double min_improvement = 0.0;
  std::vector<double> gaps;          // V_tau^t(sigma) - V_tau^*(sigma)
  double log_gap_slope = 0.0;        // LS fit over the second half
  double v_pi_tau_star_sigma = 0.0;  // plain value of the soft-optimal policy
  double v_best_response_sigma = 0.0;
  double v_tau_star_sigma = 0.0;
  double sandwich_width_bound = 0.0;  // tau * log|A| / (1-gamma)
  bool sandwich_holds = false;
};

RegularizedReport regularized_diagnostics(
    const MarkovGame& game, const TabularPolicy& pi1,
    const std::vector<TabularPolicy>& trajectory, double tau,
    const StateDist& sigma);

PopulationResult run_population_npg(const MarkovGame& game,
                                    const PopulationConfig& config);

std::string population_trace_csv(const PopulationResult& result);

}  // namespace zsnpg
