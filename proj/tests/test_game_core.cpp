#include "doctest.h"

#include "oracles.hpp"
#include "zsnpg/game.hpp"

using namespace zsnpg;

TEST_CASE("game JSON round trip preserves every entry") {
  MarkovGame game = testing::random_game(3, 2, 0.8, 11);
  MarkovGame copy = MarkovGame::from_json_text(game.to_json_text());
  CHECK(copy.n_states() == 3);
  CHECK(copy.gamma() == doctest::Approx(0.8));
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        CHECK(copy.reward(s, a, b) == game.reward(s, a, b));
        for (int s2 = 0; s2 < 3; ++s2)
          CHECK(copy.transition(s, a, b, s2) == game.transition(s, a, b, s2));
      }
}

TEST_CASE("validate names bad rows and rewards") {
  MarkovGame game = testing::random_game(2, 2, 0.9, 1);
  game.transition(1, 0, 1, 0) += 0.5;  // row no longer sums to 1
  CHECK_THROWS_WITH_AS(game.validate(),
                       doctest::Contains("transition[1][0][1]"),
                       std::invalid_argument);
  MarkovGame game2 = testing::random_game(2, 2, 0.9, 1);
  game2.reward(0, 1, 0) = 1.5;
  CHECK_THROWS_AS(game2.validate(), std::invalid_argument);
}

TEST_CASE("evaluate_value matches the discounted power series") {
  for (std::uint64_t seed : {2ULL, 3ULL, 4ULL}) {
    MarkovGame game = testing::random_game(3, 3, 0.9, seed);
    TabularPolicy pi1 = testing::random_policy(3, 3, seed);
    TabularPolicy pi2 = testing::random_policy(3, 3, seed + 100);
    Eigen::VectorXd ref = testing::power_series_value(game, pi1, pi2);
    ValueVector v = evaluate_value(game, pi1, pi2);
    CHECK((v.v - ref).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(v.v.minCoeff() >= 0.0);
    CHECK(v.v.maxCoeff() <= game.value_range() + 1e-9);
  }
}

TEST_CASE("Q tensor is consistent with V and has zero-mean advantage") {
  MarkovGame game = testing::random_game(2, 3, 0.85, 7);
  TabularPolicy pi1 = testing::random_policy(2, 3, 7);
  TabularPolicy pi2 = testing::random_policy(2, 3, 8);
  QTensor qt = q_and_advantage(game, pi1, pi2);
  for (int s = 0; s < 2; ++s) {
    double v_from_q = pi1.probs.row(s) * qt.q[s] * pi2.probs.row(s).transpose();
    CHECK(v_from_q == doctest::Approx(qt.v[s]).epsilon(1e-10));
    double mean_adv =
        pi1.probs.row(s) * qt.advantage(s) * pi2.probs.row(s).transpose();
    CHECK(std::abs(mean_adv) < 1e-10);
  }
}

TEST_CASE("visitation matches the truncated series and is a distribution") {
  MarkovGame game = testing::random_game(3, 2, 0.9, 21);
  TabularPolicy pi1 = testing::random_policy(3, 2, 21);
  TabularPolicy pi2 = testing::random_policy(3, 2, 22);
  StateDist start = StateDist::point_mass(3, 1);
  StateDist d = visitation(game, pi1, pi2, start);
  Eigen::VectorXd ref = testing::truncated_visitation(game, pi1, pi2, start);
  CHECK((d.w - ref).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(d.w.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.w.minCoeff() >= 0.0);
  // gamma = 0 collapses the visitation to the start distribution
  MarkovGame myopic = testing::random_game(3, 2, 0.0, 21);
  StateDist d0 = visitation(myopic, pi1, pi2, start);
  CHECK((d0.w - start.w).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("stage matrix applies the discount to the continuation value") {
  MarkovGame game = testing::random_game(1, 2, 0.9, 33);
  Eigen::VectorXd v(1);
  v << 2.0;
  Eigen::MatrixXd stage = stage_matrix(game, v, 0);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      CHECK(stage(a, b) ==
            doctest::Approx(game.reward(0, a, b) + 0.9 * 2.0).epsilon(1e-12));
}

TEST_CASE("Bellman operators are gamma-contractions") {
  MarkovGame game = testing::random_game(3, 2, 0.9, 5);
  TabularPolicy pi1 = testing::random_policy(3, 2, 5);
  TabularPolicy pi2 = testing::random_policy(3, 2, 6);
  RandomStream rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd a(3), b(3);
    for (int s = 0; s < 3; ++s) {
      a[s] = rng.uniform() * game.value_range();
      b[s] = rng.uniform() * game.value_range();
    }
    ValueVector va{a, ValueRole::kPlain}, vb{b, ValueRole::kPlain};
    double dist = (a - b).cwiseAbs().maxCoeff();
    double d1 = (bellman_joint(game, va, pi1, pi2).v -
                 bellman_joint(game, vb, pi1, pi2).v).cwiseAbs().maxCoeff();
    double d2 = (bellman_min_response(game, va, pi1).v -
                 bellman_min_response(game, vb, pi1).v).cwiseAbs().maxCoeff();
    double d3 = (bellman_full(game, va).v - bellman_full(game, vb).v)
                    .cwiseAbs().maxCoeff();
    CHECK(d1 <= 0.9 * dist + 1e-10);
    CHECK(d2 <= 0.9 * dist + 1e-10);
    CHECK(d3 <= 0.9 * dist + 1e-10);
  }
}

TEST_CASE("policy gradient matches central finite differences") {
  MarkovGame game = testing::random_game(2, 2, 0.8, 41);
  TabularPolicy pi1 = testing::random_policy(2, 2, 41);
  TabularPolicy pi2 = testing::random_policy(2, 2, 42);
  StateDist sigma = StateDist::uniform(2);
  Eigen::MatrixXd grad = policy_gradient_min(game, pi1, pi2, sigma);
  Eigen::MatrixXd grad_q = policy_gradient_min(game, pi1, pi2, sigma, true);
  CHECK((grad - grad_q).cwiseAbs().maxCoeff() < 1e-10);  // Q and A forms agree
  auto value_of = [&](const Eigen::MatrixXd& theta) {
    TabularPolicy p = TabularPolicy::from_logits(theta);
    return sigma.w.dot(evaluate_value(game, pi1, p).v);
  };
  Eigen::MatrixXd fd =
      testing::finite_difference_gradient(value_of, *pi2.logits);
  CHECK((grad - fd).cwiseAbs().maxCoeff() <
        1e-5 * std::max(1.0, grad.cwiseAbs().maxCoeff()));
}

TEST_CASE("Fisher matrix is block-diagonal and PSD") {
  MarkovGame game = testing::random_game(2, 2, 0.8, 51);
  TabularPolicy pi1 = testing::random_policy(2, 2, 51);
  TabularPolicy pi2 = testing::random_policy(2, 2, 52);
  StateDist sigma = StateDist::uniform(2);
  Eigen::MatrixXd fisher = fisher_matrix(game, pi1, pi2, sigma);
  CHECK(fisher.block(0, 2, 2, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(fisher.block(2, 0, 2, 2).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fisher);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("policy and distribution validation") {
  TabularPolicy p = TabularPolicy::uniform(2, 3);
  p.validate();
  p.probs(0, 0) = -0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  StateDist d = StateDist::uniform(4);
  d.validate();
  d.w[0] = 2.0;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}
