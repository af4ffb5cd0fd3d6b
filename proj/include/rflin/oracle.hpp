#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rflin/linear_mdp.hpp"

namespace rflin {

/// Per-step reward table: rewards[h](pair_index(s, a)).
using RewardTable = std::vector<Vector>;

/// Q[h] is (|S| x |A|); V has horizon + 1 entries with V[H] = 0.
struct ValueTables {
  std::vector<Matrix> Q;
  std::vector<Vector> V;
  int initial_state = 0;

  double value() const { return V.front()(initial_state); }
};

/// Backward induction for Q*, V*. `reward` replaces <phi, theta_h> when given.
ValueTables value_iteration_exact(const LinearMDP& mdp,
                                  const std::optional<RewardTable>& reward = std::nullopt);

/// Q^pi, V^pi by backward induction.
ValueTables policy_values(const LinearMDP& mdp, const PolicyTable& policy,
                          const std::optional<RewardTable>& reward = std::nullopt);

/// V^pi_0 from the initial state.
double evaluate_policy(const LinearMDP& mdp, const PolicyTable& policy,
                       const std::optional<RewardTable>& reward = std::nullopt);

/// The MDP's own reward table <phi(s,a), theta_h>.
RewardTable native_rewards(const LinearMDP& mdp);

/// Reward table r_h(s,a) = <phi(s,a), theta_h> for arbitrary theta vectors.
RewardTable linear_rewards(const LinearMDP& mdp, const std::vector<Vector>& theta);

/// Distribution of s_h under pi for h = 0..H-1.
std::vector<Vector> state_distributions(const LinearMDP& mdp, const PolicyTable& policy);

/// Occupancy over pairs: occupancy[h](pair) = P_pi(s_h = s, a_h = a).
std::vector<Vector> occupancy(const LinearMDP& mdp, const PolicyTable& policy);

using FeaturePredicate = std::function<bool(const Vector&)>;

/// sup_pi P_pi(phi(s_h, a_h) in X), with X given by a predicate on features.
double max_visitation(const LinearMDP& mdp, int h, const FeaturePredicate& member);

/// Same, with X given as a mask over pairs.
double max_visitation_pairs(const LinearMDP& mdp, int h, const std::vector<char>& member);

struct MixtureResult {
  double value = 0.0;
  std::vector<double> weights;        // over `covariances`
  std::vector<Matrix> covariances;    // distinct E_pi[phi phi^T] of deterministic policies
  std::int64_t policies_enumerated = 0;
};

/// max over mixtures of deterministic policies of lambda_min(E[phi(s_h,a_h) phi^T]).
/// Throws BudgetExceeded when more than `budget` policies would be enumerated.
MixtureResult best_mixture_min_eig(const LinearMDP& mdp, int h, std::int64_t budget = 100000,
                                   int iterations = 4000);

/// lambda_min of sum_i w_i C_i.
double mixture_min_eig(const std::vector<Matrix>& covariances, const std::vector<double>& weights);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(const std::vector<double>& v);

}  // namespace rflin
