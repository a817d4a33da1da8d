#include "zsnpg/matrix_game.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace zsnpg {

double duality_gap(const Eigen::MatrixXd& A, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& f) {
  // Pure best responses; maxCoeff/minCoeff scan in index order, so ties
  // resolve toward the lowest action index.
  double best_row = (A * f).maxCoeff();
  double best_col = (A.transpose() * x).minCoeff();
  return best_row - best_col;
}

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::ArrayXd e = (z.array() - z.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

// Solve the equalizer system on the given supports and return a candidate
// pair, or false when the solution leaves the simplex.
bool equalizer_candidate(const Eigen::MatrixXd& A,
                         const std::vector<int>& rows,
                         const std::vector<int>& cols, Eigen::VectorXd* x_out,
                         Eigen::VectorXd* f_out) {
  const int p = static_cast<int>(rows.size());
  const int q = static_cast<int>(cols.size());
  Eigen::MatrixXd sub(p, q);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j) sub(i, j) = A(rows[i], cols[j]);

  // f on cols: sub * f = v * 1, sum f = 1.
  Eigen::MatrixXd Mf(p + 1, q + 1);
  Mf.setZero();
  Mf.block(0, 0, p, q) = sub;
  Mf.block(0, q, p, 1).setConstant(-1.0);
  Mf.block(p, 0, 1, q).setConstant(1.0);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
  rhs[p] = 1.0;
  Eigen::VectorXd sol_f = Mf.colPivHouseholderQr().solve(rhs);

  // x on rows: sub^T * x = v * 1, sum x = 1.
  Eigen::MatrixXd Mx(q + 1, p + 1);
  Mx.setZero();
  Mx.block(0, 0, q, p) = sub.transpose();
  Mx.block(0, p, q, 1).setConstant(-1.0);
  Mx.block(q, 0, 1, p).setConstant(1.0);
  Eigen::VectorXd rhs2 = Eigen::VectorXd::Zero(q + 1);
  rhs2[q] = 1.0;
  Eigen::VectorXd sol_x = Mx.colPivHouseholderQr().solve(rhs2);

  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(A.cols());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < p; ++i) {
    double xi = sol_x[i];
    if (xi < -1e-9 || !std::isfinite(xi)) return false;
    x[rows[i]] = std::max(xi, 0.0);
  }
  for (int j = 0; j < q; ++j) {
    double fj = sol_f[j];
    if (fj < -1e-9 || !std::isfinite(fj)) return false;
    f[cols[j]] = std::max(fj, 0.0);
  }
  double sx = x.sum(), sf = f.sum();
  if (sx <= 0.0 || sf <= 0.0) return false;
  *x_out = x / sx;
  *f_out = f / sf;
  return true;
}

std::vector<int> support_above(const Eigen::VectorXd& v, double rel_threshold) {
  std::vector<int> idx;
  double top = v.maxCoeff();
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] >= rel_threshold * top) idx.push_back(i);
  }
  return idx;
}

void enumerate_supports(int n, std::vector<std::vector<int>>* out) {
  // All nonempty subsets, smallest first.
  std::vector<std::vector<int>> by_mask;
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) s.push_back(i);
    by_mask.push_back(std::move(s));
  }
  std::stable_sort(by_mask.begin(), by_mask.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });
  *out = std::move(by_mask);
}

}  // namespace

MatrixGameSolution matrix_game_solve(const Eigen::MatrixXd& A, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("matrix_game_solve: tol must be > 0");
  if (!A.allFinite()) {
    throw std::invalid_argument("matrix_game_solve: matrix has non-finite entries");
  }
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(A.cols());

  MatrixGameSolution best;
  best.row_strategy = Eigen::VectorXd::Constant(n, 1.0 / n);
  best.col_strategy = Eigen::VectorXd::Constant(m, 1.0 / m);
  best.value = best.row_strategy.dot(A * best.col_strategy);
  best.duality_gap = duality_gap(A, best.row_strategy, best.col_strategy);
  if (best.duality_gap <= tol) return best;

  auto consider = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& f) {
    double gap = duality_gap(A, x, f);
    if (gap < best.duality_gap) {
      best.row_strategy = x;
      best.col_strategy = f;
      best.value = x.dot(A * f);
      best.duality_gap = gap;
    }
    return gap <= tol;
  };

  // Pure saddle check first: cheap and exact when dominance applies.
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < m; ++b) {
      if (A(a, b) == A.col(b).maxCoeff() && A(a, b) == A.row(a).minCoeff()) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
        x[a] = 1.0;
        f[b] = 1.0;
        if (consider(x, f)) return best;
      }
    }
  }

  // Multiplicative-weights self-play on the range-normalized matrix.
  double lo = A.minCoeff(), hi = A.maxCoeff();
  double range = hi - lo;
  Eigen::MatrixXd An = Eigen::MatrixXd::Zero(n, m);
  if (range > 0.0) An = ((A.array() - lo) / range).matrix();
  Eigen::VectorXd cum_x = Eigen::VectorXd::Zero(n);  // cumulative payoff to rows
  Eigen::VectorXd cum_f = Eigen::VectorXd::Zero(m);  // cumulative loss to cols
  Eigen::VectorXd avg_x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd avg_f = Eigen::VectorXd::Zero(m);
  const double log_dim = std::log(static_cast<double>(std::max(n, m)));
  const int kMwBudget = 50000;
  const int kPolishEvery = 200;

  auto polish = [&]() {
    // Equalizer solve on supports harvested from the averaged iterates,
    // widest threshold last.
    for (double thr : {3e-1, 1e-1, 1e-2, 1e-3, 1e-6}) {
      std::vector<int> rows = support_above(avg_x / std::max(avg_x.sum(), 1e-300), thr);
      std::vector<int> cols = support_above(avg_f / std::max(avg_f.sum(), 1e-300), thr);
      Eigen::VectorXd x, f;
      if (equalizer_candidate(A, rows, cols, &x, &f) && consider(x, f)) return true;
    }
    return false;
  };

  for (int t = 1; t <= kMwBudget; ++t) {
    double eta = std::sqrt(log_dim / t);
    Eigen::VectorXd x = softmax(eta * cum_x);
    Eigen::VectorXd f = softmax(-eta * cum_f);
    cum_x += An * f;
    cum_f += An.transpose() * x;
    avg_x += x;
    avg_f += f;
    if (t % kPolishEvery == 0 || t == kMwBudget) {
      Eigen::VectorXd xb = avg_x / t, fb = avg_f / t;
      if (consider(xb, fb)) return best;
      if (polish()) return best;
    }
  }

  // Exhaustive support enumeration for small matrices.
  if (n <= 9 && m <= 9) {
    std::vector<std::vector<int>> row_supports, col_supports;
    enumerate_supports(n, &row_supports);
    enumerate_supports(m, &col_supports);
    for (const auto& rows : row_supports) {
      for (const auto& cols : col_supports) {
        Eigen::VectorXd x, f;
        if (equalizer_candidate(A, rows, cols, &x, &f) && consider(x, f)) {
          return best;
        }
      }
    }
  }

  throw MatrixGameError(
      "matrix_game_solve: certificate not reached, best gap " +
          std::to_string(best.duality_gap) + " > tol " + std::to_string(tol),
      best.duality_gap);
}

}  // namespace zsnpg
