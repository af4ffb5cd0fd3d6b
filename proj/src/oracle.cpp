#include "rflin/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "rflin/errors.hpp"

namespace rflin {
namespace {

void check_reward(const LinearMDP& mdp, const RewardTable& reward) {
  if (static_cast<int>(reward.size()) != mdp.horizon())
    throw std::invalid_argument("reward table: wrong number of steps");
  for (const auto& r : reward)
    if (r.size() != mdp.num_pairs()) throw std::invalid_argument("reward table: wrong number of pairs");
}

const Vector& reward_at(const LinearMDP& mdp, const std::optional<RewardTable>& reward, int h) {
  return reward ? (*reward)[h] : mdp.rewards(h);
}

Matrix as_state_action(const Vector& q, int n_s, int n_a) {
  Matrix out(n_s, n_a);
  for (int s = 0; s < n_s; ++s)
    for (int a = 0; a < n_a; ++a) out(s, a) = q(s * n_a + a);
  return out;
}

using Key = std::vector<double>;

Key key_of(const Vector& v) { return Key(v.data(), v.data() + v.size()); }
Key key_of(const Matrix& m) { return Key(m.data(), m.data() + m.size()); }

// Calls fn(choice) for every assignment of an action to each of `count` slots.
template <class Fn>
void for_each_assignment(int count, int n_a, Fn&& fn) {
  std::vector<int> choice(count, 0);
  while (true) {
    fn(choice);
    int i = 0;
    while (i < count && ++choice[i] == n_a) choice[i++] = 0;
    if (i == count) return;
  }
}

std::int64_t assignments(int count, int n_a, std::int64_t cap) {
  std::int64_t n = 1;
  for (int i = 0; i < count; ++i) {
    n *= n_a;
    if (n > cap) return cap + 1;
  }
  return n;
}

std::vector<double> supergradient(const std::vector<Matrix>& cs, const Matrix& m, double tie,
                                  double* value) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const Vector& vals = eig.eigenvalues();
  *value = vals(0);
  int k = 1;
  while (k < vals.size() && vals(k) <= vals(0) + tie) ++k;
  const Matrix v = eig.eigenvectors().leftCols(k);
  std::vector<double> g(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) g[i] = (v.transpose() * cs[i] * v).trace() / k;
  return g;
}

Matrix combine(const std::vector<Matrix>& cs, const std::vector<double>& w) {
  Matrix m = Matrix::Zero(cs.front().rows(), cs.front().cols());
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (w[i] != 0.0) m += w[i] * cs[i];
  return m;
}

}  // namespace

RewardTable native_rewards(const LinearMDP& mdp) {
  RewardTable out;
  for (int h = 0; h < mdp.horizon(); ++h) out.push_back(mdp.rewards(h));
  return out;
}

RewardTable linear_rewards(const LinearMDP& mdp, const std::vector<Vector>& theta) {
  if (static_cast<int>(theta.size()) != mdp.horizon())
    throw std::invalid_argument("linear_rewards: need one theta per step");
  RewardTable out;
  for (const auto& t : theta) {
    if (t.size() != mdp.dim()) throw std::invalid_argument("linear_rewards: theta has wrong dimension");
    out.push_back(mdp.features() * t);
  }
  return out;
}

ValueTables value_iteration_exact(const LinearMDP& mdp, const std::optional<RewardTable>& reward) {
  if (reward) check_reward(mdp, *reward);
  const int n_s = mdp.num_states(), n_a = mdp.num_actions(), horizon = mdp.horizon();
  ValueTables out;
  out.initial_state = mdp.initial_state();
  out.Q.resize(horizon);
  out.V.assign(horizon + 1, Vector::Zero(n_s));
  for (int h = horizon - 1; h >= 0; --h) {
    const Vector q = reward_at(mdp, reward, h) + mdp.kernel(h) * out.V[h + 1];
    out.Q[h] = as_state_action(q, n_s, n_a);
    out.V[h] = out.Q[h].rowwise().maxCoeff();
  }
  return out;
}

ValueTables policy_values(const LinearMDP& mdp, const PolicyTable& policy,
                          const std::optional<RewardTable>& reward) {
  if (reward) check_reward(mdp, *reward);
  const int n_s = mdp.num_states(), n_a = mdp.num_actions(), horizon = mdp.horizon();
  if (policy.horizon() != horizon || policy.num_states() != n_s || policy.num_actions() != n_a)
    throw std::invalid_argument("policy shape does not match the MDP");
  ValueTables out;
  out.initial_state = mdp.initial_state();
  out.Q.resize(horizon);
  out.V.assign(horizon + 1, Vector::Zero(n_s));
  for (int h = horizon - 1; h >= 0; --h) {
    const Vector q = reward_at(mdp, reward, h) + mdp.kernel(h) * out.V[h + 1];
    out.Q[h] = as_state_action(q, n_s, n_a);
    for (int s = 0; s < n_s; ++s) {
      double v = 0.0;
      for (int a = 0; a < n_a; ++a) v += policy.prob(h, s, a) * out.Q[h](s, a);
      out.V[h](s) = v;
    }
  }
  return out;
}

double evaluate_policy(const LinearMDP& mdp, const PolicyTable& policy,
                       const std::optional<RewardTable>& reward) {
  return policy_values(mdp, policy, reward).value();
}

std::vector<Vector> state_distributions(const LinearMDP& mdp, const PolicyTable& policy) {
  const int n_s = mdp.num_states(), n_a = mdp.num_actions();
  std::vector<Vector> out;
  Vector p = Vector::Zero(n_s);
  p(mdp.initial_state()) = 1.0;
  for (int h = 0; h < mdp.horizon(); ++h) {
    out.push_back(p);
    Vector next = Vector::Zero(n_s);
    for (int s = 0; s < n_s; ++s) {
      if (p(s) == 0.0) continue;
      for (int a = 0; a < n_a; ++a) {
        const double w = p(s) * policy.prob(h, s, a);
        if (w != 0.0) next += w * mdp.kernel(h).row(mdp.pair_index(s, a)).transpose();
      }
    }
    p = next;
  }
  return out;
}

std::vector<Vector> occupancy(const LinearMDP& mdp, const PolicyTable& policy) {
  const int n_s = mdp.num_states(), n_a = mdp.num_actions();
  const auto dists = state_distributions(mdp, policy);
  std::vector<Vector> out;
  for (int h = 0; h < mdp.horizon(); ++h) {
    Vector occ(mdp.num_pairs());
    for (int s = 0; s < n_s; ++s)
      for (int a = 0; a < n_a; ++a) occ(mdp.pair_index(s, a)) = dists[h](s) * policy.prob(h, s, a);
    out.push_back(std::move(occ));
  }
  return out;
}

double max_visitation_pairs(const LinearMDP& mdp, int h, const std::vector<char>& member) {
  if (h < 0 || h >= mdp.horizon()) throw std::out_of_range("max_visitation: step out of range");
  if (static_cast<int>(member.size()) != mdp.num_pairs())
    throw std::invalid_argument("max_visitation: mask has wrong size");
  RewardTable reward(mdp.horizon(), Vector::Zero(mdp.num_pairs()));
  for (int p = 0; p < mdp.num_pairs(); ++p) reward[h](p) = member[p] ? 1.0 : 0.0;
  // A probability; rounding in the backward pass can land a few ulps above 1.
  return std::clamp(value_iteration_exact(mdp, reward).value(), 0.0, 1.0);
}

double max_visitation(const LinearMDP& mdp, int h, const FeaturePredicate& member) {
  const auto& uniq = mdp.unique_features();
  std::vector<char> in_set(uniq.rows());
  for (Eigen::Index i = 0; i < uniq.rows(); ++i) in_set[i] = member(uniq.row(i).transpose()) ? 1 : 0;
  std::vector<char> mask(mdp.num_pairs());
  for (int p = 0; p < mdp.num_pairs(); ++p) mask[p] = in_set[mdp.feature_id(p)];
  return max_visitation_pairs(mdp, h, mask);
}

double mixture_min_eig(const std::vector<Matrix>& covariances, const std::vector<double>& weights) {
  if (covariances.empty() || covariances.size() != weights.size())
    throw std::invalid_argument("mixture_min_eig: size mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(combine(covariances, weights), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

std::vector<double> project_to_simplex(const std::vector<double>& v) {
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - tau);
  return out;
}

MixtureResult best_mixture_min_eig(const LinearMDP& mdp, int h, std::int64_t budget, int iterations) {
  if (h < 0 || h >= mdp.horizon()) throw std::out_of_range("best_mixture_min_eig: step out of range");
  const int n_s = mdp.num_states(), n_a = mdp.num_actions(), d = mdp.dim();
  MixtureResult out;

  auto charge = [&](int support) {
    out.policies_enumerated += assignments(support, n_a, budget);
    if (out.policies_enumerated > budget)
      throw BudgetExceeded("best_mixture_min_eig: more than " + std::to_string(budget) +
                           " deterministic policies to enumerate");
  };
  auto support_of = [&](const Vector& p) {
    std::vector<int> s;
    for (int i = 0; i < n_s; ++i)
      if (p(i) > 0.0) s.push_back(i);
    return s;
  };

  // Distinct state distributions reachable at each step by deterministic policies.
  std::map<Key, Vector> dists;
  {
    Vector p0 = Vector::Zero(n_s);
    p0(mdp.initial_state()) = 1.0;
    dists.emplace(key_of(p0), p0);
  }
  for (int t = 0; t < h; ++t) {
    std::map<Key, Vector> next;
    for (const auto& [key, p] : dists) {
      const auto supp = support_of(p);
      charge(static_cast<int>(supp.size()));
      for_each_assignment(static_cast<int>(supp.size()), n_a, [&](const std::vector<int>& choice) {
        Vector q = Vector::Zero(n_s);
        for (std::size_t j = 0; j < supp.size(); ++j)
          q += p(supp[j]) * mdp.kernel(t).row(mdp.pair_index(supp[j], choice[j])).transpose();
        next.emplace(key_of(q), q);
      });
    }
    dists = std::move(next);
  }

  std::map<Key, Matrix> covs;
  for (const auto& [key, p] : dists) {
    const auto supp = support_of(p);
    charge(static_cast<int>(supp.size()));
    for_each_assignment(static_cast<int>(supp.size()), n_a, [&](const std::vector<int>& choice) {
      Matrix c = Matrix::Zero(d, d);
      for (std::size_t j = 0; j < supp.size(); ++j) {
        const Vector phi = mdp.feature(supp[j], choice[j]);
        c += p(supp[j]) * phi * phi.transpose();
      }
      covs.emplace(key_of(c), c);
    });
  }
  for (auto& [key, c] : covs) out.covariances.push_back(std::move(c));

  const std::size_t n = out.covariances.size();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  double best = mixture_min_eig(out.covariances, w);
  std::vector<double> best_w = w;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.covariances[i], Eigen::EigenvaluesOnly);
    if (eig.eigenvalues()(0) > best) {
      best = eig.eigenvalues()(0);
      best_w.assign(n, 0.0);
      best_w[i] = 1.0;
    }
  }

  if (n > 1) {
    // Diminishing-step projected supergradient from the best start.
    w = best_w;
    const int phase1 = iterations / 2;
    for (int t = 0; t < phase1; ++t) {
      double f = 0.0;
      auto g = supergradient(out.covariances, combine(out.covariances, w), 1e-9, &f);
      const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
      double norm = 0.0;
      for (auto& gi : g) norm += (gi - mean) * (gi - mean);
      norm = std::sqrt(norm);
      if (norm < 1e-15) break;
      const double step = 0.5 / std::sqrt(t + 1.0) / norm;
      for (std::size_t i = 0; i < n; ++i) w[i] += step * (g[i] - mean);
      w = project_to_simplex(w);
      const double fw = mixture_min_eig(out.covariances, w);
      if (fw > best) {
        best = fw;
        best_w = w;
      }
    }
    // Backtracking refinement from the best iterate; the tie tolerance
    // shrinks with the step.
    w = best_w;
    double step = 1e-2;
    for (int t = phase1; t < iterations && step > 1e-12; ++t) {
      double f = 0.0;
      auto g = supergradient(out.covariances, combine(out.covariances, w), std::max(1e-12, step), &f);
      const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
      double norm = 0.0;
      for (auto& gi : g) norm += (gi - mean) * (gi - mean);
      norm = std::sqrt(norm);
      if (norm < 1e-15) break;
      std::vector<double> trial(w);
      for (std::size_t i = 0; i < n; ++i) trial[i] += step / norm * (g[i] - mean);
      trial = project_to_simplex(trial);
      const double ft = mixture_min_eig(out.covariances, trial);
      if (ft > best) {
        best = ft;
        best_w = trial;
        w = trial;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
  }
  out.value = best;
  out.weights = best_w;
  return out;
}

}  // namespace rflin
