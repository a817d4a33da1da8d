#include "zsnpg/game.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace zsnpg {

using json = nlohmann::json;

MarkovGame::MarkovGame(int n_states, int n_actions, double gamma)
    : n_states_(n_states), n_actions_(n_actions), gamma_(gamma) {
  if (n_states <= 0 || n_actions <= 0) {
    throw std::invalid_argument("MarkovGame: n_states and n_actions must be positive");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("MarkovGame: gamma must be in [0, 1)");
  }
  reward_.assign(static_cast<size_t>(n_states) * n_actions * n_actions, 0.0);
  transition_.assign(static_cast<size_t>(n_states) * n_actions * n_actions * n_states, 0.0);
}

void MarkovGame::validate() const {
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      for (int b = 0; b < n_actions_; ++b) {
        double r = reward(s, a, b);
        if (!(r >= 0.0 && r <= 1.0)) {
          std::ostringstream os;
          os << "reward[" << s << "][" << a << "][" << b << "] = " << r
             << " outside [0, 1]";
          throw std::invalid_argument(os.str());
        }
        double total = 0.0;
        for (int s2 = 0; s2 < n_states_; ++s2) {
          double p = transition(s, a, b, s2);
          if (p < 0.0) {
            std::ostringstream os;
            os << "transition[" << s << "][" << a << "][" << b << "][" << s2
               << "] = " << p << " is negative";
            throw std::invalid_argument(os.str());
          }
          total += p;
        }
        if (std::abs(total - 1.0) > kSimplexTol) {
          std::ostringstream os;
          os << "transition[" << s << "][" << a << "][" << b
             << "] sums to " << total << ", expected 1";
          throw std::invalid_argument(os.str());
        }
      }
    }
  }
}

MarkovGame MarkovGame::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("game file parse error: ") + e.what());
  }
  for (const char* key : {"n_states", "n_actions", "gamma", "reward", "transition"}) {
    if (!j.contains(key)) {
      throw std::invalid_argument(std::string("game file missing field '") + key + "'");
    }
  }
  const int S = j["n_states"].get<int>();
  const int A = j["n_actions"].get<int>();
  const double gamma = j["gamma"].get<double>();
  MarkovGame game(S, A, gamma);

  const auto& r = j["reward"];
  const auto& p = j["transition"];
  if (static_cast<int>(r.size()) != S || static_cast<int>(p.size()) != S) {
    throw std::invalid_argument("reward/transition outer size must equal n_states");
  }
  for (int s = 0; s < S; ++s) {
    if (static_cast<int>(r[s].size()) != A || static_cast<int>(p[s].size()) != A) {
      throw std::invalid_argument("reward/transition[" + std::to_string(s) +
                                  "] size must equal n_actions");
    }
    for (int a = 0; a < A; ++a) {
      if (static_cast<int>(r[s][a].size()) != A ||
          static_cast<int>(p[s][a].size()) != A) {
        throw std::invalid_argument("reward/transition[" + std::to_string(s) + "][" +
                                    std::to_string(a) + "] size must equal n_actions");
      }
      for (int b = 0; b < A; ++b) {
        game.reward(s, a, b) = r[s][a][b].get<double>();
        if (static_cast<int>(p[s][a][b].size()) != S) {
          throw std::invalid_argument("transition[" + std::to_string(s) + "][" +
                                      std::to_string(a) + "][" + std::to_string(b) +
                                      "] size must equal n_states");
        }
        for (int s2 = 0; s2 < S; ++s2) {
          game.transition(s, a, b, s2) = p[s][a][b][s2].get<double>();
        }
      }
    }
  }
  game.validate();
  return game;
}

MarkovGame MarkovGame::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open game file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return from_json_text(os.str());
}

std::string MarkovGame::to_json_text() const {
  json r = json::array();
  json p = json::array();
  for (int s = 0; s < n_states_; ++s) {
    json rs = json::array(), ps = json::array();
    for (int a = 0; a < n_actions_; ++a) {
      json ra = json::array(), pa = json::array();
      for (int b = 0; b < n_actions_; ++b) {
        ra.push_back(reward(s, a, b));
        json row = json::array();
        for (int s2 = 0; s2 < n_states_; ++s2) row.push_back(transition(s, a, b, s2));
        pa.push_back(row);
      }
      rs.push_back(ra);
      ps.push_back(pa);
    }
    r.push_back(rs);
    p.push_back(ps);
  }
  json j;
  j["n_states"] = n_states_;
  j["n_actions"] = n_actions_;
  j["gamma"] = gamma_;
  j["reward"] = r;
  j["transition"] = p;
  return j.dump(2);
}

void MarkovGame::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write game file: " + path);
  out << to_json_text() << "\n";
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
  TabularPolicy pi;
  pi.probs = Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions);
  pi.logits = Eigen::MatrixXd::Zero(n_states, n_actions);
  return pi;
}

TabularPolicy TabularPolicy::from_logits(const Eigen::MatrixXd& theta) {
  TabularPolicy pi;
  const int S = static_cast<int>(theta.rows());
  const int A = static_cast<int>(theta.cols());
  pi.probs.resize(S, A);
  Eigen::MatrixXd normed = theta;
  for (int s = 0; s < S; ++s) {
    normed.row(s).array() -= theta.row(s).mean();  // softmax is shift-invariant
    Eigen::ArrayXd e = (normed.row(s).array() - normed.row(s).maxCoeff()).exp();
    pi.probs.row(s) = (e / e.sum()).matrix().transpose();
  }
  pi.logits = normed;
  return pi;
}

void TabularPolicy::validate() const {
  for (int s = 0; s < n_states(); ++s) {
    double total = 0.0;
    for (int a = 0; a < n_actions(); ++a) {
      if (probs(s, a) < 0.0) {
        throw std::invalid_argument("policy probability negative at state " +
                                    std::to_string(s));
      }
      total += probs(s, a);
    }
    if (std::abs(total - 1.0) > kSimplexTol) {
      throw std::invalid_argument("policy row " + std::to_string(s) +
                                  " sums to " + std::to_string(total));
    }
  }
  if (logits) {
    TabularPolicy check = from_logits(*logits);
    if ((check.probs - probs).cwiseAbs().maxCoeff() > kSimplexTol) {
      throw std::invalid_argument("policy logits inconsistent with probabilities");
    }
  }
}

StateDist StateDist::uniform(int n_states) {
  StateDist d;
  d.w = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);
  return d;
}

StateDist StateDist::point_mass(int n_states, int s) {
  StateDist d;
  d.w = Eigen::VectorXd::Zero(n_states);
  d.w[s] = 1.0;
  return d;
}

void StateDist::validate() const {
  if (w.minCoeff() < 0.0 || std::abs(w.sum() - 1.0) > kSimplexTol) {
    throw std::invalid_argument("state distribution not on the simplex");
  }
}

namespace {

void check_dims(const MarkovGame& game, const TabularPolicy& pi,
                const char* name) {
  if (pi.n_states() != game.n_states() || pi.n_actions() != game.n_actions()) {
    throw std::invalid_argument(std::string(name) +
                                ": policy dimensions do not match game");
  }
}

}  // namespace

Eigen::MatrixXd policy_kernel(const MarkovGame& game, const TabularPolicy& pi1,
                              const TabularPolicy& pi2) {
  check_dims(game, pi1, "policy_kernel/pi1");
  check_dims(game, pi2, "policy_kernel/pi2");
  const int S = game.n_states(), A = game.n_actions();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int b = 0; b < A; ++b) {
        double w = pi1.probs(s, a) * pi2.probs(s, b);
        if (w == 0.0) continue;
        const double* row = game.transition_row(s, a, b);
        for (int s2 = 0; s2 < S; ++s2) P(s, s2) += w * row[s2];
      }
    }
  }
  return P;
}

Eigen::VectorXd policy_reward(const MarkovGame& game, const TabularPolicy& pi1,
                              const TabularPolicy& pi2) {
  const int S = game.n_states(), A = game.n_actions();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int b = 0; b < A; ++b) {
        r[s] += pi1.probs(s, a) * pi2.probs(s, b) * game.reward(s, a, b);
      }
    }
  }
  return r;
}

Eigen::MatrixXd stage_matrix(const MarkovGame& game, const Eigen::VectorXd& v,
                             int s) {
  const int S = game.n_states(), A = game.n_actions();
  Eigen::MatrixXd M(A, A);
  for (int a = 0; a < A; ++a) {
    for (int b = 0; b < A; ++b) {
      double backup = 0.0;
      const double* row = game.transition_row(s, a, b);
      for (int s2 = 0; s2 < S; ++s2) backup += row[s2] * v[s2];
      M(a, b) = game.reward(s, a, b) + game.gamma() * backup;
    }
  }
  return M;
}

ValueVector evaluate_value(const MarkovGame& game, const TabularPolicy& pi1,
                           const TabularPolicy& pi2) {
  check_dims(game, pi1, "evaluate_value/pi1");
  check_dims(game, pi2, "evaluate_value/pi2");
  const int S = game.n_states();
  Eigen::MatrixXd P = policy_kernel(game, pi1, pi2);
  Eigen::VectorXd r = policy_reward(game, pi1, pi2);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) - game.gamma() * P;
  Eigen::VectorXd v = M.partialPivLu().solve(r);
  double residual = (v - (r + game.gamma() * P * v)).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10)) {
    throw std::runtime_error("evaluate_value: linear solve residual " +
                             std::to_string(residual));
  }
  return ValueVector{v, ValueRole::kPlain};
}

QTensor q_and_advantage(const MarkovGame& game, const TabularPolicy& pi1,
                        const TabularPolicy& pi2) {
  ValueVector value = evaluate_value(game, pi1, pi2);
  QTensor out;
  out.v = value.v;
  out.q.reserve(game.n_states());
  for (int s = 0; s < game.n_states(); ++s) {
    out.q.push_back(stage_matrix(game, value.v, s));
  }
  return out;
}

StateDist visitation(const MarkovGame& game, const TabularPolicy& pi1,
                     const TabularPolicy& pi2, const StateDist& start) {
  if (start.w.size() != game.n_states()) {
    throw std::invalid_argument("visitation: start distribution dimension mismatch");
  }
  const int S = game.n_states();
  Eigen::MatrixXd P = policy_kernel(game, pi1, pi2);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) - game.gamma() * P.transpose();
  StateDist d;
  d.w = M.partialPivLu().solve((1.0 - game.gamma()) * start.w);
  // Clean tiny negative round-off and renormalize.
  d.w = d.w.cwiseMax(0.0);
  d.w /= d.w.sum();
  return d;
}

ValueVector bellman_joint(const MarkovGame& game, const ValueVector& v,
                          const TabularPolicy& pi1, const TabularPolicy& pi2) {
  Eigen::MatrixXd P = policy_kernel(game, pi1, pi2);
  Eigen::VectorXd r = policy_reward(game, pi1, pi2);
  return ValueVector{r + game.gamma() * P * v.v, v.role};
}

ValueVector bellman_min_response(const MarkovGame& game, const ValueVector& v,
                                 const TabularPolicy& pi1) {
  check_dims(game, pi1, "bellman_min_response");
  const int S = game.n_states(), A = game.n_actions();
  Eigen::VectorXd out(S);
  for (int s = 0; s < S; ++s) {
    Eigen::MatrixXd M = stage_matrix(game, v.v, s);
    // inf over pi2 of pi1^T M pi2; the minimum sits at a pure column.
    Eigen::RowVectorXd weighted = pi1.probs.row(s) * M;
    out[s] = weighted.minCoeff();
  }
  return ValueVector{out, v.role};
}

Eigen::MatrixXd policy_gradient_min(const MarkovGame& game,
                                    const TabularPolicy& pi1,
                                    const TabularPolicy& pi2,
                                    const StateDist& sigma,
                                    bool use_q_form) {
  if (!pi2.logits) {
    throw std::invalid_argument("policy_gradient_min: pi2 must carry logits");
  }
  const int S = game.n_states(), A = game.n_actions();
  QTensor qt = q_and_advantage(game, pi1, pi2);
  StateDist d = visitation(game, pi1, pi2, sigma);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(S, A);
  for (int s = 0; s < S; ++s) {
    const Eigen::MatrixXd target =
        use_q_form ? qt.q[s] : Eigen::MatrixXd(qt.advantage(s));
    // tbar(b) = sum_a pi1(a|s) target(a,b)
    Eigen::RowVectorXd tbar = pi1.probs.row(s) * target;
    // E_b score(s,b) tbar(b): component b' is pi2(b')(tbar(b') - E_b tbar).
    double mean = (pi2.probs.row(s) * tbar.transpose())(0, 0);
    for (int b = 0; b < A; ++b) {
      grad(s, b) = d.w[s] / (1.0 - game.gamma()) * pi2.probs(s, b) * (tbar[b] - mean);
    }
  }
  return grad;
}

Eigen::MatrixXd fisher_matrix(const MarkovGame& game, const TabularPolicy& pi1,
                              const TabularPolicy& pi2, const StateDist& sigma) {
  if (!pi2.logits) {
    throw std::invalid_argument("fisher_matrix: pi2 must carry logits");
  }
  const int S = game.n_states(), A = game.n_actions();
  StateDist d = visitation(game, pi1, pi2, sigma);
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(S * A, S * A);
  for (int s = 0; s < S; ++s) {
    for (int b = 0; b < A; ++b) {
      // score = e_b - pi2(.|s), supported on the state-s block
      Eigen::VectorXd score = -pi2.probs.row(s).transpose();
      score[b] += 1.0;
      F.block(s * A, s * A, A, A) +=
          d.w[s] * pi2.probs(s, b) * score * score.transpose();
    }
  }
  return F;
}

}  // namespace zsnpg
