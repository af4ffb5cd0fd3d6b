#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rflin/rng.hpp"

namespace rflin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Steps are 0-based throughout the library: h = 0 is the first step of an
// episode and h = horizon() - 1 the last.

/// Finite-state, finite-action linear MDP.
///
/// P_h(s'|s,a) = <phi(s,a), mu_h(s')> and r_h(s,a) = <phi(s,a), theta_h>.
/// Features are stored as a (|S||A| x d) row-major table indexed by
/// `pair_index(s, a) = s * |A| + a`; mu_h is |S| x d with rows mu_h(s').
///
/// Immutable after construction. The constructor checks shapes only; use
/// validate() for the linear-MDP invariants.
class LinearMDP {
 public:
  LinearMDP(int dim, int horizon, std::vector<std::string> states,
            std::vector<std::string> actions, RowMatrix phi, std::vector<Matrix> mu,
            std::vector<Vector> theta, int initial_state);

  int dim() const { return dim_; }
  int horizon() const { return horizon_; }
  int num_states() const { return static_cast<int>(states_.size()); }
  int num_actions() const { return static_cast<int>(actions_.size()); }
  int num_pairs() const { return num_states() * num_actions(); }
  int initial_state() const { return initial_state_; }
  int pair_index(int s, int a) const { return s * num_actions() + a; }

  const std::vector<std::string>& states() const { return states_; }
  const std::vector<std::string>& actions() const { return actions_; }

  const RowMatrix& features() const { return phi_; }
  Vector feature(int s, int a) const { return phi_.row(pair_index(s, a)).transpose(); }
  const Matrix& mu(int h) const { return mu_[h]; }
  const Vector& theta(int h) const { return theta_[h]; }
  const std::vector<Matrix>& mu() const { return mu_; }
  const std::vector<Vector>& theta() const { return theta_; }

  /// Transition kernel for step h: (|S||A| x |S|), row (s,a) is P_h(.|s,a).
  /// Entries in [-1e-12, 0) are clamped to zero and their row renormalized;
  /// rows with larger violations are clamped the same way (so simulation
  /// stays defined) but validate() reports them when they are reachable.
  const Matrix& kernel(int h) const { return kernel_[h]; }
  /// Raw mu_h . phi(s,a) before any clamping.
  Matrix raw_kernel(int h) const;
  /// Rewards for step h, one entry per pair.
  const Vector& rewards(int h) const { return reward_[h]; }
  double reward(int h, int s, int a) const { return reward_[h](pair_index(s, a)); }

  /// Distinct feature vectors: unique_features().row(feature_id(s,a)) == phi(s,a).
  const RowMatrix& unique_features() const { return unique_phi_; }
  int feature_id(int pair) const { return feature_id_[pair]; }
  const std::vector<int>& feature_ids() const { return feature_id_; }

  /// Draw s' ~ P_h(.|s,a) by inverse CDF over the fixed state ordering.
  int sample_next(int h, int pair, double u) const;

  /// States reachable at each step from the initial state under some policy.
  const std::vector<std::vector<int>>& reachable() const { return reachable_; }

  int state_index(const std::string& name) const;
  int action_index(const std::string& name) const;

 private:
  int dim_;
  int horizon_;
  std::vector<std::string> states_;
  std::vector<std::string> actions_;
  RowMatrix phi_;
  std::vector<Matrix> mu_;
  std::vector<Vector> theta_;
  int initial_state_;

  std::vector<Matrix> kernel_;
  std::vector<RowMatrix> cdf_;
  std::vector<Vector> reward_;
  RowMatrix unique_phi_;
  std::vector<int> feature_id_;
  std::vector<std::vector<int>> reachable_;
};

/// Time-indexed policy: a probability vector over actions for every (h, s).
class PolicyTable {
 public:
  /// Uniform policy.
  PolicyTable(int horizon, int num_states, int num_actions);

  /// Deterministic policy from actions[h][s].
  static PolicyTable deterministic(int num_actions, const std::vector<std::vector<int>>& actions);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  double prob(int h, int s, int a) const { return probs_[offset(h, s) + a]; }
  std::span<const double> row(int h, int s) const {
    return {probs_.data() + offset(h, s), static_cast<std::size_t>(num_actions_)};
  }

  void set_action(int h, int s, int a);
  void set_row(int h, int s, std::span<const double> probs);

  /// The action if row (h,s) is one-hot, otherwise nullopt.
  std::optional<int> deterministic_action(int h, int s) const;

  int sample(int h, int s, double u) const;

  /// Largest deviation from "nonnegative and sums to one" over all rows.
  double max_row_error() const;

 private:
  std::size_t offset(int h, int s) const {
    return (static_cast<std::size_t>(h) * num_states_ + s) * num_actions_;
  }

  int horizon_;
  int num_states_;
  int num_actions_;
  std::vector<double> probs_;
};

struct Step {
  int s = 0;
  int a = 0;
  double r = 0.0;
  int s_next = 0;
};

struct Trajectory {
  std::vector<Step> steps;

  double total_reward() const;
};

/// One observed transition, with phi(s,a) cached.
struct TransitionRecord {
  int h = 0;
  int s = 0;
  int a = 0;
  int s_next = 0;
  Vector feature;
};

struct ValidationReport {
  bool pass = true;
  double feature_norm_excess = 0.0;   // max(||phi|| - 1), clipped at 0
  double min_probability = 0.0;       // most negative reachable entry (0 if none)
  double row_sum_error = 0.0;         // max |sum_s' P - 1| over reachable rows
  double theta_norm_excess = 0.0;     // max(||theta_h|| - sqrt(d))
  double mu_norm_excess = 0.0;        // max(|| sum_s' |mu_h(s')| || - sqrt(d))
  double reward_range_excess = 0.0;   // distance of reachable rewards outside [0,1]
  int reachable_rows = 0;
  int unreachable_invalid_rows = 0;   // informational only
  std::vector<std::string> failures;
};

/// Checks the linear-MDP invariants. Transition and reward conditions are
/// checked on (h, s) pairs reachable from the initial state; rows that can
/// never be visited are counted in `unreachable_invalid_rows` but do not
/// fail the report.
ValidationReport validate(const LinearMDP& mdp);

/// Samples one transition. Throws std::out_of_range on bad indices.
std::pair<double, int> step(const LinearMDP& mdp, int h, int s, int a, Rng& rng);

/// One episode from the initial state under `policy`.
Trajectory rollout(const LinearMDP& mdp, const PolicyTable& policy, Rng& rng);

/// Wraps an MDP and counts every episode and transition drawn through it.
class Simulator {
 public:
  explicit Simulator(const LinearMDP& mdp) : mdp_(&mdp) {}

  const LinearMDP& mdp() const { return *mdp_; }

  std::pair<double, int> step(int h, int s, int a, Rng& rng);

  /// Runs one episode; `choose(h, s)` returns the action to play.
  template <class Choose>
  Trajectory episode(Choose&& choose, Rng& rng) {
    Trajectory traj;
    traj.steps.reserve(mdp_->horizon());
    int s = mdp_->initial_state();
    for (int h = 0; h < mdp_->horizon(); ++h) {
      const int a = choose(h, s);
      auto [r, next] = step(h, s, a, rng);
      traj.steps.push_back({s, a, r, next});
      s = next;
    }
    ++episodes_;
    return traj;
  }

  Trajectory rollout(const PolicyTable& policy, Rng& rng);

  std::int64_t episodes() const { return episodes_; }
  std::int64_t transitions() const { return transitions_; }

 private:
  const LinearMDP* mdp_;
  std::int64_t episodes_ = 0;
  std::int64_t transitions_ = 0;
};

}  // namespace rflin
