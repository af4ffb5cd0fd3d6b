#pragma once

#include <vector>

#include "rflin/linear_mdp.hpp"
#include "rflin/rng.hpp"

namespace rflin {

/// Random linear MDP with simplex features.
///
/// phi(s,a) lies on the probability simplex, every column of mu_h is a
/// distribution over next states and theta_h is uniform on [0,1]^d, so all
/// invariants hold by construction.
struct RandomMdpSpec {
  int dim = 4;
  int horizon = 3;
  int num_states = 6;
  int num_actions = 3;
  /// Exponent applied to Exp(1) draws before normalizing; larger values give
  /// sparser features and transitions.
  double sparsity = 2.0;
};
LinearMDP random_linear_mdp(const RandomMdpSpec& spec, Rng& rng);

/// Tabular MDP as a linear MDP: d = |S||A|, phi(s,a) = e_{sa}, mu_h(s') holds
/// P_h(s'|s,a) at coordinate (s,a), theta_h = r_h.
/// `transitions[h]` is (|S||A| x |S|), `rewards[h]` has |S||A| entries.
LinearMDP tabular_embed(int num_states, int num_actions, const std::vector<Matrix>& transitions,
                        const std::vector<Vector>& rewards, int initial_state = 0);

struct RandomTabularSpec {
  int num_states = 5;
  int num_actions = 2;
  int horizon = 3;
  double sparsity = 2.0;
};
/// Random tabular transition / reward tables, embedded with tabular_embed.
LinearMDP random_tabular_mdp(const RandomTabularSpec& spec, Rng& rng);

/// Two-step instance with geometrically harder-to-reach state groups.
///
/// From s0, action a_i (i = 1..A) moves uniformly into group S_i with
/// probability 2^-i and stays in s0 otherwise. Group states self-loop. The
/// reward is 1 at the second step in group S_1 and 0 elsewhere.
struct GroupReachSpec {
  int num_actions = 2;
  int states_per_group = 2;
};
LinearMDP group_reach_instance(const GroupReachSpec& spec);
/// States of group S_i (1-based i) in a group_reach_instance.
std::vector<int> group_states(const GroupReachSpec& spec, int group);

/// Linear-bandit lower-bound family embedded in a (d+1)-dimensional MDP.
///
/// States {s0, s1, sbar_2..sbar_{d+1}}; theta = signs * sqrt(d / (700 K)).
/// Step 0 moves s0 -> s1 with probability <theta, u> + 1/2 for a unit
/// direction u, or 1/2 for the null action. The next `reward_steps` steps
/// stay put and pay 1 in s1, 0 elsewhere, so V* = reward_steps * (||theta|| + 1/2).
///
/// The action net is the 2d signed axes, the 2^d sign diagonals
/// (when `include_diagonals`), `extra_directions` random unit vectors and the
/// null action, which is always last. The constant coordinate of the s0
/// features is scaled by sqrt(2) (and mu by 1/sqrt(2)) so the
/// ||sum |mu_h||| <= sqrt(d+1) bound holds for every d >= 2.
struct LowerBoundSpec {
  int d = 2;
  double K = 4.0;
  std::vector<int> signs;  // empty = all +1
  int reward_steps = 2;
  int extra_directions = 32;
  bool include_diagonals = true;
  std::uint64_t net_seed = 0;
};
LinearMDP lower_bound_instance(const LowerBoundSpec& spec);
double lower_bound_magnitude(int d, double K);
/// Closed-form optimal value reward_steps * (sqrt(d) * mu + 1/2).
double lower_bound_optimal_value(const LowerBoundSpec& spec);

/// Two-step instance whose step-1 features include every axis e_j at every
/// intermediate state, so mixtures of policies reach lambda_min = 1/d for
/// E[phi phi^T] at step 1. Routing from s0 and the distractor actions are
/// random.
struct AxisReachSpec {
  int d = 2;
  int distractors = 2;
  int intermediate_states = 3;
};
LinearMDP axis_reach_instance(const AxisReachSpec& spec, Rng& rng);

}  // namespace rflin
