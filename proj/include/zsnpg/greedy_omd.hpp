#pragma once

#include <string>
#include <vector>

#include "zsnpg/game.hpp"

namespace zsnpg {

// Per-state payoff matrices A_s(a,b) = r(s,a,b) + gamma * sum_{s'} P(s'|s,a,b) V(s')
// built from a frozen value function.
struct GreedyMatrixSet {
  std::vector<Eigen::MatrixXd> matrices;  // per state, A x A
  Eigen::VectorXd v_prev;
};

GreedyMatrixSet build_greedy_matrices(const MarkovGame& game,
                                      const ValueVector& v_prev);

// Adaptive OMD step size from the history of observed opponent payoff
// vectors p_0, p_1, ..., with differences measured in the sup norm:
//   eta_t = min{ log(|A| T'^2) / (sqrt(S_{t-1}) + sqrt(S_{t-2})),
//                1 / (1 + 10/(1-gamma)^2) },
// S_m = sum_{i=1..m} ||p_i - p_{i-1}||_inf^2. Empty sums fall to the cap.
double adaptive_step(const std::vector<Eigen::VectorXd>& payoff_history, int t,
                     double gamma, int t_prime);

// One state's optimistic-mirror-descent bookkeeping for both players.
// Step-size sums are maintained incrementally; they match adaptive_step on
// the stored payoff history exactly.
struct OmdState {
  Eigen::VectorXd x, f;            // primary sequences (max, min)
  Eigen::VectorXd y_mix, g_mix;    // secondary sequences y'_t, g'_t
  std::vector<Eigen::VectorXd> payoffs_min;  // A^T x_0, A^T x_1, ... (seen by min)
  std::vector<Eigen::VectorXd> payoffs_max;  // A f_0, A f_1, ...      (seen by max)
  Eigen::VectorXd x_sum, f_sum;    // running sums of played iterates
  double realized_min = 0.0;       // sum_t phi(f_t, x_t)
  double beta = 0.0;               // uniform mixing weight, 1/T'^2
  int t_prime = 0;
  double s_last_min = 0.0, s_prev_min = 0.0;  // sum ||delta||^2 up to t-1 / t-2
  double s_last_max = 0.0, s_prev_max = 0.0;
  double eta_used_min = 0.0;  // eta_t consumed by the last round (diagnostics)
  double eta_used_max = 0.0;

  static OmdState init(int n_actions, int t_prime);
};

// Applies round t of the subroutine for a single state's matrix.
void omd_round(OmdState& state, const Eigen::MatrixXd& A, int t, double gamma);

struct GreedyDiagnosticsRow {
  int state = 0;
  int t = 0;
  double gap = 0.0;
  double regret_x = 0.0;
  double regret_f = 0.0;
  double eta_x = 0.0;
  double eta_f = 0.0;
};

struct GreedyResult {
  TabularPolicy x_bar;  // averaged max-player strategy, the Greedy Step output
  TabularPolicy f_bar;  // averaged min-player strategy
  std::vector<double> gap;        // per-state realized duality gap of (x_bar, f_bar)
  std::vector<double> regret_x;   // per-state realized regret of the max player
  std::vector<double> regret_f;   // per-state realized regret of the min player
  std::vector<GreedyDiagnosticsRow> trace;

  double max_gap() const;
};

// Runs T' rounds of two-player OMD per state and returns uniform averages.
GreedyResult run_greedy(const MarkovGame& game, const ValueVector& v_prev,
                        int t_prime, bool record_trace = false);

std::string greedy_trace_csv(const GreedyResult& result);

}  // namespace zsnpg
