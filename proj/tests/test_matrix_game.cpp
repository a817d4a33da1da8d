#include "doctest.h"

#include "oracles.hpp"
#include "zsnpg/matrix_game.hpp"
#include "zsnpg/random.hpp"

using namespace zsnpg;

TEST_CASE("matching pennies value and strategies") {
  Eigen::MatrixXd A(2, 2);
  A << 1, 0, 0, 1;
  MatrixGameSolution sol = matrix_game_solve(A, 1e-10);
  CHECK(sol.value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sol.duality_gap <= 1e-10);
  CHECK(sol.row_strategy[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(sol.col_strategy[0] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("pure saddle point is found exactly") {
  Eigen::MatrixXd A(2, 3);
  A << 0.3, 0.9, 0.5,
       0.1, 0.4, 0.2;
  // row 0 / col 0 is a saddle: 0.3 is min of its row, max of its column
  MatrixGameSolution sol = matrix_game_solve(A, 1e-12);
  CHECK(sol.value == doctest::Approx(0.3));
  CHECK(sol.duality_gap <= 1e-12);
  CHECK(sol.row_strategy[0] == doctest::Approx(1.0));
  CHECK(sol.col_strategy[0] == doctest::Approx(1.0));
}

TEST_CASE("constant matrix solves at the uniform profile") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Constant(3, 3, 0.7);
  MatrixGameSolution sol = matrix_game_solve(A, 1e-12);
  CHECK(sol.value == doctest::Approx(0.7));
  CHECK(sol.duality_gap <= 1e-12);
}

TEST_CASE("random 2x2 values agree with grid search") {
  RandomStream rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd A(2, 2);
    for (int i = 0; i < 4; ++i) A(i / 2, i % 2) = rng.uniform();
    MatrixGameSolution sol = matrix_game_solve(A, 1e-9);
    CHECK(sol.duality_gap <= 1e-9);
    // grid spacing 1/2000 bounds the oracle's own error
    CHECK(std::abs(sol.value - testing::grid_search_value_2x2(A)) < 2e-3);
  }
}

TEST_CASE("certified gap at tight tolerance on random matrices") {
  RandomStream rng(23);
  for (int n : {3, 5, 7}) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = rng.uniform() * 10.0;
    MatrixGameSolution sol = matrix_game_solve(A, 1e-9);
    CHECK(sol.duality_gap <= 1e-9);
    CHECK(duality_gap(A, sol.row_strategy, sol.col_strategy) ==
          doctest::Approx(sol.duality_gap).epsilon(1e-12));
    CHECK(sol.row_strategy.minCoeff() >= 0.0);
    CHECK(sol.row_strategy.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("duality gap is zero exactly at an equilibrium profile") {
  Eigen::MatrixXd A(2, 2);
  A << 1, -1, -1, 1;
  Eigen::VectorXd half = Eigen::VectorXd::Constant(2, 0.5);
  CHECK(duality_gap(A, half, half) == doctest::Approx(0.0));
  Eigen::VectorXd pure(2);
  pure << 1.0, 0.0;
  CHECK(duality_gap(A, pure, half) == doctest::Approx(1.0));  // best response swings
}
