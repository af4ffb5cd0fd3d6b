#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rflin/exploration.hpp"
#include "rflin/linear_mdp.hpp"
#include "rflin/oracle.hpp"
#include "rflin/precision_matrix.hpp"

namespace rflin {

/// c H sqrt(d log(1 + d H K_max) + log(H / delta)).
double beta(int d, int horizon, double k_max, double delta, double c);

struct EpsilonSchedule {
  int iota = 1;
  std::vector<double> gamma_sq;  // iota entries
};

/// iota = ceil(log2(4 beta H / eps)) (at least 1) and
/// gamma_i^2 = 4^i eps^2 / (64 H^2 iota^2 beta^2) (at most 1).
EpsilonSchedule schedule_from_epsilon(double epsilon, int d, int horizon, double beta);

struct PlanConfig {
  double epsilon = 0.25;
  double delta = 0.1;
  double bonus_scale = 0.1;
  double k_scale = 0.01;
  std::int64_t k_cap = 2000;
  /// Ridge of the exploration covariances; planning always uses 1.
  double lambda = 1.0;
  RegMinConfig regmin;

  void check() const;
};

/// Everything the planner needs: the feature map and per-step covering data.
/// It carries no transition or reward parameters.
struct ExplorationDataset {
  int d = 0;
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  RowMatrix features;  // (|S||A| x d), row pair_index(s, a)
  std::vector<CoveringPartition> partitions;  // one per step

  double beta = 0.0;
  double delta = 0.1;
  double bonus_scale = 0.1;
  double k_max = 0.0;
  int iota = 1;
  std::vector<double> gamma_sq;
  std::int64_t total_episodes = 0;

  std::int64_t record_count() const;
};

struct KMaxResult {
  double k_max = 1.0;
  double beta = 0.0;
  EpsilonSchedule schedule;
  std::vector<std::int64_t> k;  // per epoch, identical for every step
  std::int64_t total = 0;
};

/// Dry pass of the schedule: smallest fixed point K_max >= total episodes.
KMaxResult resolve_k_max(int d, int horizon, const PlanConfig& config);

/// Reward-free exploration: one CoverTraj run per step at confidence delta / H.
ExplorationDataset rflin_explore(Simulator& sim, const PlanConfig& config, Rng& rng);

struct QEstimate {
  int horizon = 0;
  double beta = 0.0;
  std::vector<Vector> w;               // per step
  std::vector<PrecisionMatrix> cov;    // per step, ridge 1
  std::vector<Vector> q;               // per step, over pairs
  std::vector<Vector> v;               // horizon + 1 entries, over states

  double q_value(int h, int pair) const { return q[h](pair); }
};

struct PlanResult {
  PolicyTable policy;
  QEstimate estimate;
};

using RewardFn = std::function<double(int h, int s, int a)>;

/// Evaluates a reward callback on every (h, s, a).
RewardTable tabulate_reward(int horizon, int num_states, int num_actions, const RewardFn& fn);

/// Ridge LSVI with bonus over the pooled data. `bonus_scale` < 0 keeps the
/// dataset's own scale. Throws ContractViolation for rewards outside [0,1].
PlanResult rflin_plan(const ExplorationDataset& dataset, const RewardTable& reward,
                      double bonus_scale = -1.0);

/// V*_0 - V^pi_0 under `reward`.
double suboptimality(const LinearMDP& mdp, const PolicyTable& policy, const RewardTable& reward);

/// Fraction of (h, s, a) with Q_h >= Q*_h - 1e-9.
double optimism_fraction(const LinearMDP& mdp, const QEstimate& estimate, const RewardTable& reward);

/// 2 beta sum_h E_pi[ ||phi(s_h, a_h)||_{Lambda_h^{-1}} ].
double chain_bound(const LinearMDP& mdp, const PolicyTable& policy, const QEstimate& estimate);

/// Random reward parameters theta_h in [0,1]^d, scaled down so that every
/// <phi(s,a), theta_h> lies in [0,1]. Throws ContractViolation when the
/// feature map produces negative rewards.
std::vector<Vector> random_reward_thetas(const LinearMDP& mdp, Rng& rng);

}  // namespace rflin
