#include "zsnpg/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "zsnpg/ne_oracle.hpp"
#include "zsnpg/random.hpp"

namespace zsnpg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// all |A|^|S| deterministic policies as state -> action tables
std::vector<std::vector<int>> deterministic_policies(int S, int A) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(S, 0);
  while (true) {
    out.push_back(cur);
    int i = 0;
    for (; i < S; ++i) {
      if (++cur[i] < A) break;
      cur[i] = 0;
    }
    if (i == S) break;
  }
  return out;
}

double ratio_inf(const Eigen::VectorXd& v, const Eigen::VectorXd& sigma) {
  double m = 0.0;
  for (int s = 0; s < v.size(); ++s) m = std::max(m, v[s] / sigma[s]);
  return m;
}

// pushforward of v through the kernel of the deterministic pair (f, g)
Eigen::VectorXd push_deterministic(const MarkovGame& game,
                                   const Eigen::VectorXd& v,
                                   const std::vector<int>& f,
                                   const std::vector<int>& g) {
  const int S = game.n_states();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    if (v[s] == 0.0) continue;
    const double* row = game.transition_row(s, f[s], g[s]);
    for (int s2 = 0; s2 < S; ++s2) out[s2] += v[s] * row[s2];
  }
  return out;
}

// depth-first maximization of the per-depth ratios over all sequences
void enumerate_sequences(const MarkovGame& game,
                         const std::vector<std::vector<int>>& dets,
                         const Eigen::VectorXd& v, const Eigen::VectorXd& sigma,
                         int depth, int max_depth, std::vector<double>& best) {
  best[depth] = std::max(best[depth], ratio_inf(v, sigma));
  if (depth == max_depth) return;
  for (const auto& f : dets) {
    for (const auto& g : dets) {
      Eigen::VectorXd next = push_deterministic(game, v, f, g);
      enumerate_sequences(game, dets, next, sigma, depth + 1, max_depth, best);
    }
  }
}

// sum_{m >= m0} m x^{m-1} = x^{m0-1} (m0 - (m0-1) x) / (1-x)^2
double geometric_series_m_tail(double x, int m0) {
  return std::pow(x, m0 - 1) *
         (static_cast<double>(m0) - static_cast<double>(m0 - 1) * x) /
         ((1.0 - x) * (1.0 - x));
}

nlohmann::json finite_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace

int default_truncation_depth(double gamma, double eps) {
  if (gamma <= 0.0) return 1;
  return static_cast<int>(
      std::ceil(std::log(eps * (1.0 - gamma)) / std::log(gamma)));
}

ConcentrabilityReport concentrability(const MarkovGame& game,
                                      const StateDist& rho,
                                      const StateDist& sigma, int truncation_j,
                                      std::vector<LkdEntry> lkd_requests) {
  rho.validate();
  sigma.validate();
  if (truncation_j < 0) {
    throw std::invalid_argument("concentrability: J must be >= 0");
  }
  const int S = game.n_states(), A = game.n_actions();
  if (rho.w.size() != S || sigma.w.size() != S) {
    throw std::invalid_argument("concentrability: measure dimension mismatch");
  }
  const double gamma = game.gamma();

  ConcentrabilityReport report;
  report.truncation_j = truncation_j;
  if (sigma.w.minCoeff() <= 0.0) {
    report.infinite = true;
    report.c_values.assign(truncation_j + 1, kInf);
    report.c_prime = kInf;
    report.c_prime_tail = kInf;
    for (auto& e : lkd_requests) {
      e.value = kInf;
      e.tail_bound = kInf;
    }
    report.c_lkd = std::move(lkd_requests);
    return report;
  }

  const double budget =
      std::pow(std::pow(static_cast<double>(A), S), 2.0 * truncation_j);
  if (budget > 1e6) {
    throw std::invalid_argument(
        "concentrability: (|A|^|S|)^(2J) > 1e6; enumeration infeasible, use "
        "concentrability_sampled_lower_bound for a sampled estimate");
  }

  std::vector<std::vector<int>> dets = deterministic_policies(S, A);
  report.c_values.assign(truncation_j + 1, 0.0);
  enumerate_sequences(game, dets, rho.w, sigma.w, 0, truncation_j,
                      report.c_values);

  const double c_max = 1.0 / sigma.w.minCoeff();  // c(j) <= max_s 1/sigma(s)
  const double one_minus_g2 = (1.0 - gamma) * (1.0 - gamma);

  // C' = (1-gamma)^2 sum_{m>=1} m gamma^{m-1} c(m-1), truncated at m = J+1.
  report.c_prime = 0.0;
  for (int m = 1; m <= truncation_j + 1; ++m) {
    report.c_prime += one_minus_g2 * m * std::pow(gamma, m - 1) *
                      report.c_values[static_cast<size_t>(m - 1)];
  }
  report.c_prime_tail =
      gamma > 0.0
          ? one_minus_g2 * c_max * geometric_series_m_tail(gamma, truncation_j + 2)
          : 0.0;

  // C^{l,k,d} = (1-gamma)^2/(gamma^l - gamma^k) sum_{i=l}^{k-1} sum_{j>=i}
  //             gamma^j c(j+d); terms with j+d <= J are exact.
  for (auto& e : lkd_requests) {
    if (e.k <= e.l || e.l < 0 || e.d < 0) {
      throw std::invalid_argument("concentrability: need k > l >= 0, d >= 0");
    }
    const double denom = std::pow(gamma, e.l) - std::pow(gamma, e.k);
    if (denom <= 0.0) {
      e.value = kInf;
      e.tail_bound = kInf;
      continue;
    }
    double sum = 0.0, tail = 0.0;
    for (int i = e.l; i < e.k; ++i) {
      for (int j = i; j + e.d <= truncation_j; ++j) {
        sum += std::pow(gamma, j) * report.c_values[static_cast<size_t>(j + e.d)];
      }
      int j_tail = std::max(i, truncation_j - e.d + 1);
      tail += c_max * std::pow(gamma, j_tail) / (1.0 - gamma);
    }
    e.value = one_minus_g2 / denom * sum;
    e.tail_bound = one_minus_g2 / denom * tail;
  }
  report.c_lkd = std::move(lkd_requests);
  return report;
}

std::vector<double> concentrability_sampled_lower_bound(
    const MarkovGame& game, const StateDist& rho, const StateDist& sigma,
    int truncation_j, int n_samples, std::uint64_t seed) {
  rho.validate();
  sigma.validate();
  if (sigma.w.minCoeff() <= 0.0) {
    return std::vector<double>(truncation_j + 1, kInf);
  }
  const int S = game.n_states(), A = game.n_actions();
  RandomStream rng(derive_seed(seed, 0x636f6566 /* "coef" */));

  std::vector<double> best(truncation_j + 1, 0.0);
  best[0] = ratio_inf(rho.w, sigma.w);
  Eigen::MatrixXd pi1(S, A), pi2(S, A);
  for (int rep = 0; rep < n_samples; ++rep) {
    Eigen::VectorXd v = rho.w;
    for (int j = 1; j <= truncation_j; ++j) {
      // fresh Dirichlet(1) rows (uniform on the simplex) per level
      for (Eigen::MatrixXd* pi : {&pi1, &pi2}) {
        for (int s = 0; s < S; ++s) {
          double total = 0.0;
          for (int a = 0; a < A; ++a) {
            (*pi)(s, a) = rng.exponential();
            total += (*pi)(s, a);
          }
          pi->row(s) /= total;
        }
      }
      Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
      for (int s = 0; s < S; ++s) {
        if (v[s] == 0.0) continue;
        for (int a = 0; a < A; ++a) {
          for (int b = 0; b < A; ++b) {
            double w = v[s] * pi1(s, a) * pi2(s, b);
            if (w == 0.0) continue;
            const double* row = game.transition_row(s, a, b);
            for (int s2 = 0; s2 < S; ++s2) next[s2] += w * row[s2];
          }
        }
      }
      v = next;
      best[static_cast<size_t>(j)] =
          std::max(best[static_cast<size_t>(j)], ratio_inf(v, sigma.w));
    }
  }
  return best;
}

double mismatch_coefficient(const MarkovGame& game, const TabularPolicy& pi1,
                            const StateDist& sigma) {
  sigma.validate();
  if (sigma.w.minCoeff() <= 0.0) return kInf;
  BestResponse br = best_response_min(game, pi1);
  StateDist d = visitation(game, pi1, br.pi2, sigma);
  return ratio_inf(d.w, sigma.w);
}

std::string ConcentrabilityReport::to_json_text() const {
  nlohmann::json j;
  j["J"] = truncation_j;
  nlohmann::json cj = nlohmann::json::object();
  for (size_t i = 0; i < c_values.size(); ++i) {
    cj[std::to_string(i)] = finite_or_inf(c_values[i]);
  }
  j["c"] = cj;
  j["c_prime"] = finite_or_inf(c_prime);
  j["c_prime_tail_bound"] = finite_or_inf(c_prime_tail);
  nlohmann::json lkd = nlohmann::json::array();
  for (const auto& e : c_lkd) {
    lkd.push_back({{"l", e.l},
                   {"k", e.k},
                   {"d", e.d},
                   {"value", finite_or_inf(e.value)},
                   {"tail_bound", finite_or_inf(e.tail_bound)}});
  }
  j["c_lkd"] = lkd;
  j["infinite"] = infinite;
  return j.dump(2);
}

}  // namespace zsnpg
