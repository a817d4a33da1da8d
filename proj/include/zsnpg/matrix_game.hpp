#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace zsnpg {

// Mixed strategies for a zero-sum matrix game max_x min_f x^T A f, with an
// exact duality-gap certificate computed from pure best responses.
struct MatrixGameSolution {
  Eigen::VectorXd row_strategy;  // x, maximizer
  Eigen::VectorXd col_strategy;  // f, minimizer
  double value = 0.0;            // x^T A f
  double duality_gap = 0.0;      // max_a (A f)_a - min_b (x^T A)_b
};

class MatrixGameError : public std::runtime_error {
 public:
  MatrixGameError(const std::string& what, double best_gap)
      : std::runtime_error(what), best_gap(best_gap) {}
  double best_gap;
};

// Exact gap of a candidate pair against pure deviations.
double duality_gap(const Eigen::MatrixXd& A, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& f);

// Multiplicative-weights self-play with averaged iterates, followed by a
// support-polishing pass that solves the equalizer system on the supports
// suggested by the averages. Succeeds only when the exact certificate
// passes; otherwise throws MatrixGameError with the best gap achieved.
// Ties in the certificate's argmax/argmin break toward the lowest index.
MatrixGameSolution matrix_game_solve(const Eigen::MatrixXd& A, double tol);

}  // namespace zsnpg
