#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zsnpg/game.hpp"

namespace zsnpg {

// Weighted discounted sums of the c(j) ratios, truncated at J with an
// explicit remainder bound from c(j) <= max_s 1/sigma(s).
struct LkdEntry {
  int l = 0, k = 1, d = 0;
  double value = 0.0;       // truncated sum
  double tail_bound = 0.0;  // bound on the dropped remainder
};

struct ConcentrabilityReport {
  int truncation_j = 0;           // J
  std::vector<double> c_values;   // c(0)..c(J)
  double c_prime = 0.0;           // truncated C'
  double c_prime_tail = 0.0;      // remainder bound for C'
  std::vector<LkdEntry> c_lkd;
  bool infinite = false;          // sigma has a zero-mass state

  std::string to_json_text() const;
};

// Default truncation depth so the dropped gamma^J-scale terms are below eps.
int default_truncation_depth(double gamma, double eps = 1e-6);

// Exact c(j) by enumerating deterministic policy-pair sequences. The ratio
// rho P_1 ... P_j / sigma at each state is multilinear in every policy's
// per-state action probabilities, so the sup over stochastic sequences is
// attained at simplex vertices, i.e. deterministic policies; enumerating
// those is exhaustive. Gated to (|A|^|S|)^(2J) <= 1e6 sequences.
ConcentrabilityReport concentrability(const MarkovGame& game,
                                      const StateDist& rho,
                                      const StateDist& sigma, int truncation_j,
                                      std::vector<LkdEntry> lkd_requests = {
                                          {0, 1, 0}, {0, 1, 1}, {1, 2, 0}});

// Lower bounds on c(j) from random stochastic policy sequences (Dirichlet(1)
// rows); enumeration must dominate these.
std::vector<double> concentrability_sampled_lower_bound(
    const MarkovGame& game, const StateDist& rho, const StateDist& sigma,
    int truncation_j, int n_samples, std::uint64_t seed);

// ||d_sigma^{pi1, pi2*} / sigma||_inf with pi2* the exact best response.
double mismatch_coefficient(const MarkovGame& game, const TabularPolicy& pi1,
                            const StateDist& sigma);

}  // namespace zsnpg
