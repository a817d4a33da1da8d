#include "zsnpg/npg_online.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "zsnpg/greedy_omd.hpp"

namespace zsnpg {

namespace {

// named sub-stream tags for the sampling phases
constexpr std::uint64_t kTagIteration = 0x69746572;   // "iter"
constexpr std::uint64_t kTagGreedyMin = 0x67726d6e;   // "grmn"
constexpr std::uint64_t kTagGreedyMax = 0x67726d78;   // "grmx"
constexpr std::uint64_t kTagPolicyDraw = 0x64726177;  // "draw"

int sample_row(RandomStream& rng, const Eigen::MatrixXd& table, int s) {
  double u = rng.uniform();
  double cum = 0.0;
  const int n = static_cast<int>(table.cols());
  for (int i = 0; i < n; ++i) {
    cum += table(s, i);
    if (u < cum) return i;
  }
  return n - 1;
}

}  // namespace

double FeatureMap::norm_bound() const {
  double d = 0.0;
  for (int i = 0; i < phi.rows(); ++i) {
    d = std::max(d, phi.row(i).norm());
  }
  return d;
}

void FeatureMap::validate() const {
  if (n_states < 1 || n_actions < 1 || dim < 1) {
    throw std::invalid_argument("FeatureMap: dimensions must be >= 1");
  }
  if (phi.rows() != static_cast<long>(n_states) * n_actions ||
      phi.cols() != dim) {
    throw std::invalid_argument("FeatureMap: phi shape mismatch");
  }
  if (!phi.allFinite()) {
    throw std::invalid_argument("FeatureMap: non-finite feature entry");
  }
}

FeatureMap FeatureMap::indicator(int n_states, int n_actions) {
  FeatureMap f;
  f.n_states = n_states;
  f.n_actions = n_actions;
  f.dim = n_states * n_actions;
  f.phi = Eigen::MatrixXd::Identity(f.dim, f.dim);
  return f;
}

LogLinearPolicy LogLinearPolicy::zero(const FeatureMap& features) {
  LogLinearPolicy p;
  p.features = &features;
  p.theta = Eigen::VectorXd::Zero(features.dim);
  return p;
}

Eigen::MatrixXd LogLinearPolicy::prob_table() const {
  const int S = features->n_states, A = features->n_actions;
  Eigen::MatrixXd table(S, A);
  for (int s = 0; s < S; ++s) {
    Eigen::ArrayXd logits(A);
    for (int a = 0; a < A; ++a) {
      logits[a] = features->phi.row(s * A + a).dot(theta);
    }
    Eigen::ArrayXd e = (logits - logits.maxCoeff()).exp();
    table.row(s) = (e / e.sum()).matrix().transpose();
  }
  return table;
}

Eigen::MatrixXd LogLinearPolicy::mean_feature_table() const {
  const int S = features->n_states, A = features->n_actions;
  Eigen::MatrixXd table = prob_table();
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(S, features->dim);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      mean.row(s) += table(s, a) * features->phi.row(s * A + a);
    }
  }
  return mean;
}

Eigen::VectorXd LogLinearPolicy::score(int s, int a) const {
  const int A = features->n_actions;
  Eigen::MatrixXd table = prob_table();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(features->dim);
  for (int a2 = 0; a2 < A; ++a2) {
    mean += table(s, a2) * features->phi.row(s * A + a2).transpose();
  }
  return features->phi.row(s * A + a).transpose() - mean;
}

Eigen::MatrixXd MixturePolicy::prob_table() const {
  if (thetas.empty()) {
    throw std::invalid_argument("MixturePolicy: empty mixture");
  }
  LogLinearPolicy p;
  p.features = features;
  Eigen::MatrixXd table =
      Eigen::MatrixXd::Zero(features->n_states, features->n_actions);
  for (const Eigen::VectorXd& theta : thetas) {
    p.theta = theta;
    table += p.prob_table();
  }
  return table / static_cast<double>(thetas.size());
}

TabularPolicy MixturePolicy::to_tabular() const {
  TabularPolicy tp;
  tp.probs = prob_table();
  return tp;
}

SamplingOracle::SamplingOracle(const MarkovGame& game, std::uint64_t master_seed)
    : game_(&game),
      master_seed_(master_seed),
      rng_(master_seed),
      horizon_cap_(static_cast<int>(std::ceil(50.0 / (1.0 - game.gamma())))) {
  nu0_state_ =
      Eigen::VectorXd::Constant(game.n_states(), 1.0 / game.n_states());
}

void SamplingOracle::set_initial_distribution(const StateDist& sigma) {
  sigma.validate();
  if (sigma.w.size() != game_->n_states()) {
    throw std::invalid_argument("SamplingOracle: sigma dimension mismatch");
  }
  nu0_state_ = sigma.w;
}

void SamplingOracle::reseed(std::uint64_t tag, std::uint64_t outer,
                            std::uint64_t inner) {
  rng_ = RandomStream(derive_seed(master_seed_, tag, outer, inner));
}

void SamplingOracle::sample_state_action_visitation(
    const Eigen::MatrixXd& pi1_table, const Eigen::MatrixXd& pi2_table, int& s,
    int& a, int& b) {
  const int A = game_->n_actions();
  s = rng_.categorical(nu0_state_);
  a = static_cast<int>(rng_.next_u64() % static_cast<std::uint64_t>(A));
  b = static_cast<int>(rng_.next_u64() % static_cast<std::uint64_t>(A));
  ++samples_used_;
  const double gamma = game_->gamma();
  for (int step = 0; step < horizon_cap_; ++step) {
    if (!rng_.bernoulli(gamma)) break;
    s = rng_.categorical(game_->transition_row(s, a, b), game_->n_states());
    a = sample_row(rng_, pi1_table, s);
    b = sample_row(rng_, pi2_table, s);
    ++samples_used_;
  }
}

double SamplingOracle::estimate_q(const Eigen::MatrixXd& pi1_table,
                                  const Eigen::MatrixXd& pi2_table, int s,
                                  int a, int b) {
  double total = game_->reward(s, a, b);
  ++samples_used_;
  const double gamma = game_->gamma();
  for (int step = 0; step < horizon_cap_; ++step) {
    if (!rng_.bernoulli(gamma)) break;
    s = rng_.categorical(game_->transition_row(s, a, b), game_->n_states());
    a = sample_row(rng_, pi1_table, s);
    b = sample_row(rng_, pi2_table, s);
    total += game_->reward(s, a, b);
    ++samples_used_;
  }
  return total;
}

double OnlineConfig::npg_step(const FeatureMap& f, int t) const {
  const double beta = smoothness(f);
  return std::sqrt(2.0 * std::log(static_cast<double>(f.n_actions)) /
                   (beta * w_radius * w_radius * static_cast<double>(t)));
}

void OnlineConfig::validate(const MarkovGame& game) const {
  if (w_radius <= 0.0) {
    throw std::invalid_argument("OnlineConfig: W must be > 0");
  }
  if (sgd_n < 1 || sgd_n_prime < 1 || npg_t < 1 || omd_t_prime < 1) {
    throw std::invalid_argument("OnlineConfig: N, N', T, T' must be >= 1");
  }
  sigma.validate();
  rho.validate();
  if (sigma.w.size() != game.n_states() || rho.w.size() != game.n_states()) {
    throw std::invalid_argument("OnlineConfig: measure dimension mismatch");
  }
  if (sigma.w.minCoeff() <= 0.0) {
    throw std::invalid_argument("OnlineConfig: sigma must be strictly positive");
  }
}

Eigen::VectorXd sgd_npg_direction(SamplingOracle& oracle,
                                  const Eigen::MatrixXd& pi1_table,
                                  const LogLinearPolicy& pi2,
                                  const OnlineConfig& cfg) {
  const FeatureMap& f = *pi2.features;
  const int A = f.n_actions;
  const double gamma = oracle.game().gamma();
  const double alpha = cfg.sgd_step(f, gamma, cfg.sgd_n);
  const double w_radius = cfg.w_radius;

  const Eigen::MatrixXd p2 = pi2.prob_table();
  const Eigen::MatrixXd mean = pi2.mean_feature_table();

  Eigen::VectorXd w = Eigen::VectorXd::Zero(f.dim);
  Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(f.dim);
  Eigen::VectorXd score_b(f.dim), g(f.dim);
  int s = 0, a = 0, b = 0;
  for (int n = 0; n < cfg.sgd_n; ++n) {
    oracle.sample_state_action_visitation(pi1_table, p2, s, a, b);
    double q_hat = oracle.estimate_q(pi1_table, p2, s, a, b);
    int b_prime = sample_row(oracle.rng(), p2, s);
    score_b = f.phi.row(s * A + b).transpose() - mean.row(s).transpose();
    // g_n = Q_hat * (score(b) - score(b')); the mean-feature terms cancel.
    g = q_hat *
        (f.phi.row(s * A + b) - f.phi.row(s * A + b_prime)).transpose();
    w -= 2.0 * alpha * (score_b.dot(w) * score_b - g);
    double norm = w.norm();
    if (norm > w_radius) w *= w_radius / norm;
    w_sum += w;
  }
  return w_sum / static_cast<double>(cfg.sgd_n);
}

LogLinearPolicy online_iteration_step(SamplingOracle& oracle,
                                      const Eigen::MatrixXd& pi1_table,
                                      const FeatureMap& features,
                                      const OnlineConfig& cfg, int outer_k,
                                      OnlineIterationTrace* trace) {
  const double eta = cfg.npg_step(features, cfg.npg_t);

  const bool per_t_eval = trace && trace->record_subopt;
  BestResponse br;
  TabularPolicy pi1_tab;
  if (per_t_eval) {
    pi1_tab.probs = pi1_table;
    br = best_response_min(oracle.game(), pi1_tab);
  }

  LogLinearPolicy pi2 = LogLinearPolicy::zero(features);
  std::vector<Eigen::VectorXd> thetas;
  thetas.reserve(cfg.npg_t);
  for (int t = 0; t < cfg.npg_t; ++t) {
    thetas.push_back(pi2.theta);
    if (per_t_eval) {
      TabularPolicy pi2_tab;
      pi2_tab.probs = pi2.prob_table();
      ValueVector v = evaluate_value(oracle.game(), pi1_tab, pi2_tab);
      trace->subopt_sigma.push_back(cfg.sigma.w.dot(v.v - br.value.v));
    }
    oracle.reseed(kTagIteration, static_cast<std::uint64_t>(outer_k),
                  static_cast<std::uint64_t>(t));
    Eigen::VectorXd w_hat = sgd_npg_direction(oracle, pi1_table, pi2, cfg);
    pi2.theta -= eta * w_hat;
  }

  oracle.reseed(kTagPolicyDraw, static_cast<std::uint64_t>(outer_k), 0);
  int chosen = static_cast<int>(oracle.rng().next_u64() %
                                static_cast<std::uint64_t>(cfg.npg_t));
  if (trace) trace->chosen_t = chosen;
  pi2.theta = thetas[static_cast<size_t>(chosen)];
  return pi2;
}

namespace {

// one player's greedy-step SGD fit against targets r + gamma v_prev(s')
Eigen::VectorXd greedy_sgd_fit(SamplingOracle& oracle,
                               const Eigen::MatrixXd& pi1_table,
                               const Eigen::MatrixXd& pi2_table,
                               const LogLinearPolicy& own_policy,
                               bool own_is_max, const Eigen::VectorXd& v_prev,
                               const OnlineConfig& cfg) {
  const FeatureMap& f = *own_policy.features;
  const int A = f.n_actions;
  const MarkovGame& game = oracle.game();
  const double gamma = game.gamma();
  const double alpha = cfg.sgd_step(f, gamma, cfg.sgd_n_prime);
  const double w_radius = cfg.w_radius;

  const Eigen::MatrixXd own_table = own_is_max ? pi1_table : pi2_table;
  const Eigen::MatrixXd mean = own_policy.mean_feature_table();

  Eigen::VectorXd w = Eigen::VectorXd::Zero(f.dim);
  Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(f.dim);
  Eigen::VectorXd score_c(f.dim), g(f.dim);
  int s = 0, a = 0, b = 0;
  for (int n = 0; n < cfg.sgd_n_prime; ++n) {
    oracle.sample_state_action_visitation(pi1_table, pi2_table, s, a, b);
    int s_next = oracle.rng().categorical(game.transition_row(s, a, b),
                                          game.n_states());
    double target = game.reward(s, a, b) + gamma * v_prev[s_next];
    int own_action = own_is_max ? a : b;
    int resampled = sample_row(oracle.rng(), own_table, s);
    score_c =
        f.phi.row(s * A + own_action).transpose() - mean.row(s).transpose();
    g = target *
        (f.phi.row(s * A + own_action) - f.phi.row(s * A + resampled))
            .transpose();
    w -= 2.0 * alpha * (score_c.dot(w) * score_c - g);
    double norm = w.norm();
    if (norm > w_radius) w *= w_radius / norm;
    w_sum += w;
  }
  return w_sum / static_cast<double>(cfg.sgd_n_prime);
}

}  // namespace

OnlineGreedyResult online_greedy_step(SamplingOracle& oracle,
                                      const ValueVector& v_prev,
                                      const FeatureMap& features,
                                      const OnlineConfig& cfg, int outer_k) {
  const MarkovGame& game = oracle.game();
  if (v_prev.v.size() != game.n_states()) {
    throw std::invalid_argument("online_greedy_step: value dimension mismatch");
  }
  const double eta = cfg.npg_step(features, cfg.omd_t_prime);

  LogLinearPolicy pi_max = LogLinearPolicy::zero(features);  // xi
  LogLinearPolicy pi_min = LogLinearPolicy::zero(features);  // theta

  OnlineGreedyResult result;
  result.x_bar.features = &features;
  result.f_bar.features = &features;
  for (int t = 1; t <= cfg.omd_t_prime; ++t) {
    result.x_bar.thetas.push_back(pi_max.theta);
    result.f_bar.thetas.push_back(pi_min.theta);
    const Eigen::MatrixXd max_table = pi_max.prob_table();
    const Eigen::MatrixXd min_table = pi_min.prob_table();

    oracle.reseed(kTagGreedyMin, static_cast<std::uint64_t>(outer_k),
                  static_cast<std::uint64_t>(t));
    Eigen::VectorXd w_min = greedy_sgd_fit(oracle, max_table, min_table,
                                           pi_min, false, v_prev.v, cfg);
    oracle.reseed(kTagGreedyMax, static_cast<std::uint64_t>(outer_k),
                  static_cast<std::uint64_t>(t));
    Eigen::VectorXd w_max = greedy_sgd_fit(oracle, max_table, min_table,
                                           pi_max, true, v_prev.v, cfg);
    pi_min.theta -= eta * w_min;
    pi_max.theta += eta * w_max;
  }

  const Eigen::MatrixXd x_table = result.x_bar.prob_table();
  const Eigen::MatrixXd f_table = result.f_bar.prob_table();
  for (int s = 0; s < game.n_states(); ++s) {
    Eigen::MatrixXd stage = stage_matrix(game, v_prev.v, s);
    Eigen::VectorXd xs = x_table.row(s).transpose();
    Eigen::VectorXd fs = f_table.row(s).transpose();
    double gap_s =
        (stage * fs).maxCoeff() - (stage.transpose() * xs).minCoeff();
    result.gap = std::max(result.gap, gap_s);
  }
  return result;
}

OnlineResult run_online_npg(SamplingOracle& oracle, const FeatureMap& features,
                            const OnlineConfig& cfg, int outer_k) {
  const MarkovGame& game = oracle.game();
  features.validate();
  cfg.validate(game);
  if (outer_k < 1) throw std::invalid_argument("run_online_npg: K must be >= 1");
  if (features.n_states != game.n_states() ||
      features.n_actions != game.n_actions()) {
    throw std::invalid_argument("run_online_npg: feature shape mismatch");
  }
  oracle.set_initial_distribution(cfg.sigma);

  NashCertificate cert = shapley_value_iteration(game, 1e-8);
  OnlineResult result;
  ValueVector v_prev = ValueVector::zeros(game.n_states());
  for (int k = 1; k <= outer_k; ++k) {
    OnlineGreedyResult greedy =
        online_greedy_step(oracle, v_prev, features, cfg, k);
    TabularPolicy pi1 = greedy.x_bar.to_tabular();
    OnlineIterationTrace iter_trace;
    LogLinearPolicy pi2 =
        online_iteration_step(oracle, pi1.probs, features, cfg, k, &iter_trace);
    TabularPolicy pi2_tab;
    pi2_tab.probs = pi2.prob_table();

    ValueVector v_k = evaluate_value(game, pi1, pi2_tab);
    BestResponse br = best_response_min(game, pi1);

    OnlineTraceRow row;
    row.k = k;
    row.t = iter_trace.chosen_t;
    row.n_samples_used = oracle.samples_used();
    row.exploitability = exploitability(game, pi1, cfg.rho, cert);
    row.subopt_sigma = cfg.sigma.w.dot(v_k.v - br.value.v);
    row.greedy_gap = greedy.gap;
    row.seed = derive_seed(oracle.master_seed(), kTagIteration,
                           static_cast<std::uint64_t>(k), 0);
    result.trace.push_back(row);
    result.pi1 = pi1;

    Eigen::VectorXd clamped =
        v_k.v.cwiseMax(0.0).cwiseMin(game.value_range());
    v_prev = ValueVector{clamped, ValueRole::kPlain};
  }
  return result;
}

std::string online_trace_csv(const OnlineResult& result) {
  std::ostringstream os;
  os << "k,t,n_samples_used,exploitability,subopt_sigma,greedy_gap,seed\n";
  os.precision(17);
  for (const auto& row : result.trace) {
    os << row.k << ',' << row.t << ',' << row.n_samples_used << ','
       << row.exploitability
       << ',' << row.subopt_sigma << ',' << row.greedy_gap << ',' << row.seed
       << "\n";
  }
  return os.str();
}

}  // namespace zsnpg
