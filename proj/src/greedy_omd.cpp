#include "zsnpg/greedy_omd.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace zsnpg {

GreedyMatrixSet build_greedy_matrices(const MarkovGame& game,
                                      const ValueVector& v_prev) {
  if (v_prev.v.size() != game.n_states()) {
    throw std::invalid_argument("build_greedy_matrices: value dimension mismatch");
  }
  const double hi = game.value_range();
  for (int s = 0; s < game.n_states(); ++s) {
    if (!(v_prev.v[s] >= -1e-9 && v_prev.v[s] <= hi + 1e-9)) {
      throw std::invalid_argument("build_greedy_matrices: v_prev[" +
                                  std::to_string(s) + "] outside [0, 1/(1-gamma)]");
    }
  }
  GreedyMatrixSet set;
  set.v_prev = v_prev.v;
  set.matrices.reserve(game.n_states());
  for (int s = 0; s < game.n_states(); ++s) {
    set.matrices.push_back(stage_matrix(game, v_prev.v, s));
  }
  return set;
}

double adaptive_step(const std::vector<Eigen::VectorXd>& payoff_history, int t,
                     double gamma, int t_prime) {
  if (t < 1) throw std::invalid_argument("adaptive_step: t must be >= 1");
  const double cap = 1.0 / (1.0 + 10.0 / ((1.0 - gamma) * (1.0 - gamma)));
  double s_last = 0.0, s_prev = 0.0;
  const int avail = static_cast<int>(payoff_history.size()) - 1;  // diffs available
  for (int i = 1; i <= std::min(t - 1, avail); ++i) {
    double d = (payoff_history[i] - payoff_history[i - 1]).cwiseAbs().maxCoeff();
    s_last += d * d;
    if (i <= t - 2) s_prev += d * d;
  }
  double denom = std::sqrt(s_last) + std::sqrt(s_prev);
  if (denom <= 0.0 || payoff_history.empty()) return cap;
  const double n_actions = static_cast<double>(payoff_history.front().size());
  double ratio = std::log(n_actions * static_cast<double>(t_prime) * t_prime) / denom;
  return std::min(ratio, cap);
}

OmdState OmdState::init(int n_actions, int t_prime) {
  if (t_prime < 1) throw std::invalid_argument("OmdState: T' must be >= 1");
  OmdState st;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(n_actions, 1.0 / n_actions);
  st.x = st.f = st.y_mix = st.g_mix = u;
  st.x_sum = st.f_sum = Eigen::VectorXd::Zero(n_actions);
  st.beta = 1.0 / (static_cast<double>(t_prime) * t_prime);
  st.t_prime = t_prime;
  return st;
}

namespace {

// entrywise base .* exp(shift * weights), renormalized with max-shifted exponents
Eigen::VectorXd exp_reweight(const Eigen::VectorXd& base, double step,
                             const Eigen::VectorXd& payoff) {
  Eigen::ArrayXd logit = base.array().max(1e-300).log() + step * payoff.array();
  Eigen::ArrayXd e = (logit - logit.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

// same formula as adaptive_step, but fed from incrementally maintained sums
double step_from_sums(double s_last, double s_prev, double cap, int n_actions,
                      int t_prime) {
  double denom = std::sqrt(s_last) + std::sqrt(s_prev);
  if (denom <= 0.0) return cap;
  double ratio = std::log(static_cast<double>(n_actions) *
                          static_cast<double>(t_prime) * t_prime) /
                 denom;
  return std::min(ratio, cap);
}

}  // namespace

void omd_round(OmdState& state, const Eigen::MatrixXd& A, int t, double gamma) {
  if (t < 1 || t > state.t_prime) {
    throw std::invalid_argument("omd_round: t outside [1, T']");
  }
  const int n = static_cast<int>(A.rows());
  const double beta = state.beta;
  const double cap = 1.0 / (1.0 + 10.0 / ((1.0 - gamma) * (1.0 - gamma)));
  const Eigen::VectorXd mix = Eigen::VectorXd::Constant(n, beta / n);

  Eigen::VectorXd p_min = A.transpose() * state.x;  // observed by min player
  Eigen::VectorXd p_max = A * state.f;              // observed by max player
  if (t == 1) {
    // x_0 = x_1 and f_0 = f_1 (uniform), so the first difference is zero.
    state.payoffs_min.push_back(p_min);
    state.payoffs_max.push_back(p_max);
  }

  double eta_min =
      step_from_sums(state.s_last_min, state.s_prev_min, cap, n, state.t_prime);
  double eta_max =
      step_from_sums(state.s_last_max, state.s_prev_max, cap, n, state.t_prime);
  state.eta_used_min = eta_min;
  state.eta_used_max = eta_max;

  // min player: g_t from the secondary sequence, then uniform mixing.
  Eigen::VectorXd g = exp_reweight(state.g_mix, -eta_min, p_min);
  state.g_mix = (1.0 - beta) * g + mix;
  // max player, ascent direction.
  Eigen::VectorXd y = exp_reweight(state.y_mix, eta_max, p_max);
  state.y_mix = (1.0 - beta) * y + mix;

  state.x_sum += state.x;
  state.f_sum += state.f;
  state.realized_min += state.x.dot(p_max);
  double d_min = (p_min - state.payoffs_min.back()).cwiseAbs().maxCoeff();
  double d_max = (p_max - state.payoffs_max.back()).cwiseAbs().maxCoeff();
  state.s_prev_min = state.s_last_min;
  state.s_last_min += d_min * d_min;
  state.s_prev_max = state.s_last_max;
  state.s_last_max += d_max * d_max;
  state.payoffs_min.push_back(p_min);
  state.payoffs_max.push_back(p_max);

  double eta_next_min =
      step_from_sums(state.s_last_min, state.s_prev_min, cap, n, state.t_prime);
  double eta_next_max =
      step_from_sums(state.s_last_max, state.s_prev_max, cap, n, state.t_prime);
  state.f = exp_reweight(state.g_mix, -eta_next_min, p_min);
  state.x = exp_reweight(state.y_mix, eta_next_max, p_max);
}

double GreedyResult::max_gap() const {
  double m = 0.0;
  for (double g : gap) m = std::max(m, g);
  return m;
}

GreedyResult run_greedy(const MarkovGame& game, const ValueVector& v_prev,
                        int t_prime, bool record_trace) {
  if (t_prime < 1) throw std::invalid_argument("run_greedy: T' must be >= 1");
  GreedyMatrixSet set = build_greedy_matrices(game, v_prev);
  const int S = game.n_states(), A = game.n_actions();

  GreedyResult result;
  result.x_bar.probs.resize(S, A);
  result.f_bar.probs.resize(S, A);
  result.gap.resize(S);
  result.regret_x.resize(S);
  result.regret_f.resize(S);

  for (int s = 0; s < S; ++s) {
    const Eigen::MatrixXd& As = set.matrices[s];
    OmdState st = OmdState::init(A, t_prime);
    Eigen::VectorXd cum_min = Eigen::VectorXd::Zero(A);  // sum_t A^T x_t
    Eigen::VectorXd cum_max = Eigen::VectorXd::Zero(A);  // sum_t A f_t
    for (int t = 1; t <= t_prime; ++t) {
      omd_round(st, As, t, game.gamma());
      cum_min += st.payoffs_min.back();
      cum_max += st.payoffs_max.back();
      if (record_trace) {
        GreedyDiagnosticsRow row;
        row.state = s;
        row.t = t;
        row.gap = cum_max.maxCoeff() / t - cum_min.minCoeff() / t;
        row.regret_x = cum_max.maxCoeff() - st.realized_min;
        row.regret_f = st.realized_min - cum_min.minCoeff();
        row.eta_x = st.eta_used_max;
        row.eta_f = st.eta_used_min;
        result.trace.push_back(row);
      }
    }
    Eigen::VectorXd x_bar = st.x_sum / t_prime;
    Eigen::VectorXd f_bar = st.f_sum / t_prime;
    result.x_bar.probs.row(s) = x_bar.transpose();
    result.f_bar.probs.row(s) = f_bar.transpose();
    result.gap[s] = (As * f_bar).maxCoeff() - (As.transpose() * x_bar).minCoeff();
    result.regret_x[s] = cum_max.maxCoeff() - st.realized_min;
    result.regret_f[s] = st.realized_min - cum_min.minCoeff();
  }
  return result;
}

std::string greedy_trace_csv(const GreedyResult& result) {
  std::ostringstream os;
  os << "state,t,gap,regret_x,regret_f,eta_x,eta_f\n";
  os.precision(17);
  for (const auto& row : result.trace) {
    os << row.state << ',' << row.t << ',' << row.gap << ',' << row.regret_x << ','
       << row.regret_f << ',' << row.eta_x << ',' << row.eta_f << "\n";
  }
  return os.str();
}

}  // namespace zsnpg
