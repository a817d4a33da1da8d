#pragma once

#include <string>

#include "zsnpg/game.hpp"
#include "zsnpg/matrix_game.hpp"

namespace zsnpg {

// Ground-truth equilibrium data: V* plus the per-state strategies of the
// final Shapley matrix games, with a Bellman-residual certificate.
struct NashCertificate {
  ValueVector v_star;
  TabularPolicy pi1_star;
  TabularPolicy pi2_star;
  double residual = 0.0;  // ||T V* - V*||_inf

  std::string to_json_text() const;
};

// Value iteration on the full operator T until the certified value error is
// below tol; stops at residual <= tol * (1-gamma) / (2 gamma).
NashCertificate shapley_value_iteration(const MarkovGame& game, double tol);

struct BestResponse {
  TabularPolicy pi2;   // deterministic greedy min policy
  ValueVector value;   // V^{pi1} = inf_{pi2} V^{pi1,pi2}
};

// Solves the MDP the min player faces when pi1 is frozen.
BestResponse best_response_min(const MarkovGame& game, const TabularPolicy& pi1);

// V*(rho) - inf_{pi2} V^{pi1,pi2}(rho); the one-sided equilibrium metric.
double exploitability(const MarkovGame& game, const TabularPolicy& pi1,
                      const StateDist& rho, double tol = 1e-8);
// Variant reusing a precomputed certificate (the expensive half).
double exploitability(const MarkovGame& game, const TabularPolicy& pi1,
                      const StateDist& rho, const NashCertificate& cert);

}  // namespace zsnpg
