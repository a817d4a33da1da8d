#include "doctest.h"

#include "oracles.hpp"
#include "zsnpg/npg_online.hpp"

using namespace zsnpg;

namespace {

OnlineConfig tiny_config(int n_states) {
  OnlineConfig cfg;
  cfg.w_radius = 2.0;
  cfg.sgd_n = 5;
  cfg.sgd_n_prime = 5;
  cfg.npg_t = 3;
  cfg.omd_t_prime = 3;
  cfg.sigma = StateDist::uniform(n_states);
  cfg.rho = StateDist::uniform(n_states);
  return cfg;
}

}  // namespace

TEST_CASE("indicator features have unit norm bound and matching shape") {
  FeatureMap f = FeatureMap::indicator(3, 2);
  f.validate();
  CHECK(f.dim == 6);
  CHECK(f.norm_bound() == doctest::Approx(1.0));
}

TEST_CASE("log-linear policy probabilities and scores") {
  FeatureMap f = FeatureMap::indicator(2, 2);
  LogLinearPolicy p = LogLinearPolicy::zero(f);
  p.theta << 1.0, 0.0, 0.0, 0.0;  // boosts (s=0, a=0)
  Eigen::MatrixXd table = p.prob_table();
  double z = std::exp(1.0) + 1.0;
  CHECK(table(0, 0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
  CHECK(table(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  // score identity: E_{a~pi} score(s, a) = 0
  for (int s = 0; s < 2; ++s) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(f.dim);
    for (int a = 0; a < 2; ++a) mean += table(s, a) * p.score(s, a);
    CHECK(mean.cwiseAbs().maxCoeff() < 1e-10);
    for (int a = 0; a < 2; ++a) {
      CHECK(p.score(s, a).norm() <= 2.0 * f.norm_bound() + 1e-12);  // B = 2D
    }
  }
}

TEST_CASE("log softmax is D^2-smooth in the parameters") {
  FeatureMap f = FeatureMap::indicator(2, 3);
  const double beta = f.norm_bound() * f.norm_bound();
  RandomStream rng(201);
  for (int trial = 0; trial < 200; ++trial) {
    LogLinearPolicy p = LogLinearPolicy::zero(f);
    LogLinearPolicy q = LogLinearPolicy::zero(f);
    for (int i = 0; i < f.dim; ++i) {
      p.theta[i] = 2.0 * rng.uniform() - 1.0;
      q.theta[i] = p.theta[i] + 0.5 * (2.0 * rng.uniform() - 1.0);
    }
    int s = static_cast<int>(rng.next_u64() % 2);
    int a = static_cast<int>(rng.next_u64() % 3);
    double lp = std::log(p.prob_table()(s, a));
    double lq = std::log(q.prob_table()(s, a));
    double linear = p.score(s, a).dot(q.theta - p.theta);
    CHECK(std::abs(lq - lp - linear) <=
          0.5 * beta * (q.theta - p.theta).squaredNorm() + 1e-12);
  }
}

TEST_CASE("mixture policy averages the per-state tables") {
  FeatureMap f = FeatureMap::indicator(1, 2);
  MixturePolicy mix;
  mix.features = &f;
  LogLinearPolicy a = LogLinearPolicy::zero(f), b = LogLinearPolicy::zero(f);
  b.theta << 4.0, 0.0;
  mix.thetas = {a.theta, b.theta};
  Eigen::MatrixXd expect = 0.5 * (a.prob_table() + b.prob_table());
  CHECK((mix.prob_table() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gamma = 0 sampling returns the initial draw and the stage reward") {
  MarkovGame game = testing::random_game(2, 2, 0.0, 211);
  SamplingOracle oracle(game, 7);
  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(2, 2, 0.5);
  int s, a, b;
  for (int i = 0; i < 50; ++i) {
    oracle.sample_state_action_visitation(uniform, uniform, s, a, b);
    CHECK(oracle.estimate_q(uniform, uniform, s, a, b) ==
          doctest::Approx(game.reward(s, a, b)));
  }
  CHECK(oracle.samples_used() == 100);  // one transition per call
}

TEST_CASE("Q estimates are unbiased on a single-state unit-reward game") {
  MarkovGame game(1, 2, 0.9);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      game.reward(0, a, b) = 1.0;
      game.transition(0, a, b, 0) = 1.0;
    }
  SamplingOracle oracle(game, 11);
  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(1, 2, 0.5);
  const int n = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double q = oracle.estimate_q(uniform, uniform, 0, 0, 0);
    sum += q;
    sumsq += q * q;
  }
  double mean = sum / n;
  double se = std::sqrt((sumsq / n - mean * mean) / n);
  CHECK(std::abs(mean - 10.0) <= 3.0 * se);  // exact Q = 1/(1-gamma)
}

TEST_CASE("visitation sampling matches the exact occupancy") {
  MarkovGame game = testing::random_game(2, 2, 0.9, 221);
  TabularPolicy pi1 = testing::random_policy(2, 2, 221);
  TabularPolicy pi2 = testing::random_policy(2, 2, 222);
  SamplingOracle oracle(game, 13);
  StateDist sigma = StateDist::uniform(2);
  oracle.set_initial_distribution(sigma);

  // exact per-state visitation of the sampled chain: nu0 state marginal is
  // sigma with uniform actions, then on-policy; compare the state marginal
  // against the mixture (1-gamma) sigma + gamma * (one uniform-action step
  // then on-policy visitation)
  Eigen::VectorXd after_uniform = Eigen::VectorXd::Zero(2);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int s2 = 0; s2 < 2; ++s2)
          after_uniform[s2] += sigma.w[s] * 0.25 * game.transition(s, a, b, s2);
  StateDist push;
  push.w = after_uniform;
  Eigen::VectorXd expect =
      (1.0 - 0.9) * sigma.w + 0.9 * visitation(game, pi1, pi2, push).w;

  const int n = 100000;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(2);
  int s, a, b;
  for (int i = 0; i < n; ++i) {
    oracle.sample_state_action_visitation(pi1.probs, pi2.probs, s, a, b);
    counts[s] += 1.0;
  }
  counts /= n;
  CHECK(0.5 * (counts - expect).cwiseAbs().sum() <= 0.02);  // TV distance
}

TEST_CASE("single SGD step reduces to the projected first gradient") {
  MarkovGame game = testing::random_game(2, 2, 0.8, 231);
  FeatureMap f = FeatureMap::indicator(2, 2);
  LogLinearPolicy pi2 = LogLinearPolicy::zero(f);
  Eigen::MatrixXd pi1 = Eigen::MatrixXd::Constant(2, 2, 0.5);
  OnlineConfig cfg = tiny_config(2);
  cfg.sgd_n = 1;

  SamplingOracle oracle(game, 17);
  oracle.reseed(1, 2, 3);
  Eigen::VectorXd w_hat = sgd_npg_direction(oracle, pi1, pi2, cfg);

  // replay the identical stream by hand
  SamplingOracle replay(game, 17);
  replay.reseed(1, 2, 3);
  Eigen::MatrixXd table = pi2.prob_table();
  int s, a, b;
  replay.sample_state_action_visitation(pi1, table, s, a, b);
  double q_hat = replay.estimate_q(pi1, table, s, a, b);
  int b_prime = replay.rng().categorical(table.row(s).transpose());
  Eigen::VectorXd g =
      q_hat * (f.row(s, b) - f.row(s, b_prime));
  double alpha = cfg.sgd_step(f, 0.8, 1);
  Eigen::VectorXd expect = 2.0 * alpha * g;
  if (expect.norm() > cfg.w_radius) expect *= cfg.w_radius / expect.norm();
  CHECK((w_hat - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(w_hat.norm() <= cfg.w_radius + 1e-12);
}

TEST_CASE("zero rewards keep the fitted direction near zero") {
  MarkovGame game(2, 2, 0.8);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int s2 = 0; s2 < 2; ++s2)
          game.transition(s, a, b, s2) = 0.5;
  FeatureMap f = FeatureMap::indicator(2, 2);
  LogLinearPolicy pi2 = LogLinearPolicy::zero(f);
  Eigen::MatrixXd pi1 = Eigen::MatrixXd::Constant(2, 2, 0.5);
  OnlineConfig cfg = tiny_config(2);
  cfg.sgd_n = 2000;
  SamplingOracle oracle(game, 19);
  Eigen::VectorXd w_hat = sgd_npg_direction(oracle, pi1, pi2, cfg);
  CHECK(w_hat.cwiseAbs().maxCoeff() < 1e-10);  // every target is exactly zero
}

TEST_CASE("iteration step with T = 1 outputs the uniform policy") {
  MarkovGame game = testing::random_game(2, 2, 0.9, 241);
  FeatureMap f = FeatureMap::indicator(2, 2);
  OnlineConfig cfg = tiny_config(2);
  cfg.npg_t = 1;
  SamplingOracle oracle(game, 23);
  LogLinearPolicy out = online_iteration_step(oracle,
      Eigen::MatrixXd::Constant(2, 2, 0.5), f, cfg, 1);
  CHECK(out.theta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("greedy step with T' = 1 returns the uniform mixture") {
  MarkovGame game = testing::random_game(2, 2, 0.9, 251);
  FeatureMap f = FeatureMap::indicator(2, 2);
  OnlineConfig cfg = tiny_config(2);
  cfg.omd_t_prime = 1;
  SamplingOracle oracle(game, 29);
  OnlineGreedyResult result =
      online_greedy_step(oracle, ValueVector::zeros(2), f, cfg, 1);
  CHECK((result.x_bar.prob_table().array() - 0.5).abs().maxCoeff() < 1e-12);
}

TEST_CASE("full online run is deterministic and produces a sane trace") {
  MarkovGame game = testing::random_game(2, 2, 0.9, 261);
  FeatureMap f = FeatureMap::indicator(2, 2);
  OnlineConfig cfg = tiny_config(2);
  SamplingOracle o1(game, 31), o2(game, 31);
  OnlineResult r1 = run_online_npg(o1, f, cfg, 2);
  OnlineResult r2 = run_online_npg(o2, f, cfg, 2);
  CHECK(online_trace_csv(r1) == online_trace_csv(r2));
  REQUIRE(r1.trace.size() == 2);
  for (const auto& row : r1.trace) {
    CHECK(row.exploitability >= -1e-8);
    CHECK(std::isfinite(row.subopt_sigma));
    CHECK(row.n_samples_used > 0);
  }
  CHECK(r1.trace[1].n_samples_used > r1.trace[0].n_samples_used);
}
