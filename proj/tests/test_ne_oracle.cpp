#include "doctest.h"

#include "oracles.hpp"
#include "zsnpg/ne_oracle.hpp"

using namespace zsnpg;

namespace {

MarkovGame pennies_single_state(double gamma) {
  MarkovGame game(1, 2, gamma);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      game.reward(0, a, b) = (a == b) ? 1.0 : 0.0;
      game.transition(0, a, b, 0) = 1.0;
    }
  return game;
}

}  // namespace

TEST_CASE("Shapley iteration solves single-state matching pennies") {
  MarkovGame game = pennies_single_state(0.9);
  NashCertificate cert = shapley_value_iteration(game, 1e-9);
  // fixed point of v = 0.5 + 0.9 v
  CHECK(cert.v_star.v[0] == doctest::Approx(5.0).epsilon(1e-8));
  CHECK(cert.pi1_star.probs(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(cert.residual <= 1e-9);
}

TEST_CASE("Shapley value is a Bellman fixed point on random games") {
  for (std::uint64_t seed : {61ULL, 62ULL}) {
    MarkovGame game = testing::random_game(3, 2, 0.9, seed);
    NashCertificate cert = shapley_value_iteration(game, 1e-8);
    ValueVector backed = bellman_full(game, cert.v_star, 1e-11);
    CHECK((backed.v - cert.v_star.v).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("best response value matches brute-force enumeration") {
  for (std::uint64_t seed : {71ULL, 72ULL, 73ULL}) {
    MarkovGame game = testing::random_game(3, 2, 0.85, seed);
    TabularPolicy pi1 = testing::random_policy(3, 2, seed);
    BestResponse br = best_response_min(game, pi1);
    Eigen::VectorXd ref = testing::brute_force_min_value(game, pi1);
    CHECK((br.value.v - ref).cwiseAbs().maxCoeff() < 1e-8);
    // greedy policy is deterministic
    for (int s = 0; s < 3; ++s) {
      CHECK(br.pi2.probs.row(s).maxCoeff() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("exploitability is non-negative and zero at equilibrium") {
  MarkovGame game = testing::random_game(2, 2, 0.9, 81);
  StateDist rho = StateDist::uniform(2);
  NashCertificate cert = shapley_value_iteration(game, 1e-9);
  CHECK(exploitability(game, cert.pi1_star, rho, cert) <= 2e-9);
  CHECK(exploitability(game, cert.pi1_star, rho, cert) >= -2e-9);
  TabularPolicy bad;
  bad.probs = Eigen::MatrixXd::Zero(2, 2);
  bad.probs.col(0).setOnes();  // always first action
  CHECK(exploitability(game, bad, rho, cert) >= -1e-10);
}

TEST_CASE("certificate serializes to JSON") {
  MarkovGame game = pennies_single_state(0.9);
  NashCertificate cert = shapley_value_iteration(game, 1e-8);
  std::string text = cert.to_json_text();
  CHECK(text.find("v_star") != std::string::npos);
  CHECK(text.find("residual") != std::string::npos);
}
