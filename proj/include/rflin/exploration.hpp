#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "rflin/linear_mdp.hpp"
#include "rflin/precision_matrix.hpp"

namespace rflin {

/// One frozen level: {phi : phi^T inv phi <= gamma_sq} among features not
/// claimed by an earlier level.
struct GoalLevel {
  Matrix inv;
  double gamma_sq = 1.0;
};

/// Nested partition of the unit ball built by CoverTraj. Levels are 1-based;
/// level_of returns num_levels() + 1 for the remainder.
class GoalSetChain {
 public:
  GoalSetChain() = default;

  int num_levels() const { return static_cast<int>(levels_.size()); }
  const GoalLevel& level(int i) const { return levels_.at(i - 1); }
  const std::vector<GoalLevel>& levels() const { return levels_; }

  void push(GoalLevel level) { levels_.push_back(std::move(level)); }

  int level_of(const Vector& phi) const;
  /// True when phi is not claimed by any level yet.
  bool in_remainder(const Vector& phi) const { return level_of(phi) == num_levels() + 1; }

 private:
  std::vector<GoalLevel> levels_;
};

/// Exploration reward: 0 outside X, 1 when phi^T Lambda^{-1} phi > gamma_sq,
/// otherwise the ratio quad / gamma_sq.
double exploration_reward(const Vector& phi, const PrecisionMatrix& pm, double gamma_sq, bool in_set);
double exploration_reward_from_quad(double quad, double gamma_sq, bool in_set);

/// Regret constants of a first-order regret minimizer.
struct RegMinSpec {
  std::string name = "lsvi";
  double C1 = 1.0;
  double C2 = 1.0;
  double p1 = 1.0;
  double p2 = 1.0;

  /// Constants of FORCE for a d-dimensional, horizon-H problem at tolerance gamma_sq.
  static RegMinSpec force(int d, int horizon, double gamma_sq);
  /// Unit constants used with the optimistic LSVI learner.
  static RegMinSpec lsvi_standin();
  void check() const;
};

/// Settings of the online learner used inside Egs.
struct RegMinConfig {
  RegMinSpec spec = RegMinSpec::lsvi_standin();
  /// Scale c of the exploration bonus beta(d, H, K, delta, c).
  double bonus_scale = 0.1;
  /// Replan only when some covariance determinant has doubled since the
  /// last plan (true), or before every episode (false).
  bool rare_switching = true;
};

/// Reward for the designated step, indexed by pair. Must be fixed for the
/// duration of one episode.
using PairReward = std::function<double(int pair)>;

/// Online learner driven by rewards that are nonzero at one step only.
class RegMin {
 public:
  virtual ~RegMin() = default;
  /// Plays one episode, feeding the observed transitions back into the learner.
  virtual Trajectory episode(Simulator& sim, const PairReward& reward, Rng& rng) = 0;
  /// Number of times the learner saw the reward of a pair go up.
  virtual std::int64_t increasing_reward_warnings() const = 0;
  /// log det of the covariance the reward is computed from; lets a lazy
  /// learner notice when the reward has moved enough to replan.
  virtual void observe_reward_logdet(double /*logdet*/) {}
};

/// Optimistic least-squares value iteration for rewards at step `target`.
///
/// Steps after `target` play action 0. At `target` the learner is greedy
/// in the queried reward. For t < target it regresses V_{t+1}(s') on
/// phi(s_t, a_t) with ridge 1 over all transitions seen so far and acts
/// greedily in min(1, phi^T w_t + beta ||phi||_{Lambda_t^{-1}}).
class OptimisticLsvi final : public RegMin {
 public:
  OptimisticLsvi(const LinearMDP& mdp, int target, double beta, bool rare_switching = true);

  Trajectory episode(Simulator& sim, const PairReward& reward, Rng& rng) override;
  std::int64_t increasing_reward_warnings() const override { return warnings_; }
  void observe_reward_logdet(double logdet) override { reward_logdet_ = logdet; }

  double beta() const { return beta_; }
  std::int64_t replans() const { return replans_; }
  /// Current optimistic Q_t over pairs (after the most recent plan).
  const Vector& q(int t) const { return q_[t]; }

 private:
  void replan(const PairReward& reward);
  void check_reward(int pair, double r);

  const LinearMDP* mdp_;
  int target_;
  double beta_;
  bool rare_switching_;

  std::vector<PrecisionMatrix> cov_;                       // t < target
  std::vector<std::vector<std::vector<std::pair<int, int>>>> next_counts_;  // [t][pair] -> (s', n)
  std::vector<double> logdet_at_plan_;
  std::vector<Vector> q_;                                  // [t] over pairs
  std::vector<int> greedy_;                                // [t * |S| + s]
  std::vector<double> last_reward_;
  std::vector<char> seen_reward_;
  bool planned_ = false;
  std::int64_t warnings_ = 0;
  std::int64_t replans_ = 0;
  double reward_logdet_ = 0.0;
  double reward_logdet_at_plan_ = 0.0;
};

/// The bonus scale of the learner's beta: c * beta(d, H, K, delta).
std::unique_ptr<RegMin> make_regmin(const LinearMDP& mdp, int target, std::int64_t episodes,
                                    double delta, const RegMinConfig& config);

struct EgsResult {
  GoalLevel level;
  std::vector<TransitionRecord> data;
  PrecisionMatrix pm;
  std::int64_t increasing_reward_warnings = 0;
};

/// Runs K episodes of the learner with the exploration reward at step h and
/// returns the new level, the step-h transitions and the final covariance.
EgsResult egs(Simulator& sim, const GoalSetChain& chain, int h, std::int64_t K, double gamma_sq,
              double lambda, double delta, const RegMinConfig& regmin, Rng& rng);

struct ToleranceSchedule {
  std::vector<double> gamma_sq;
  double k_scale = 0.01;
  std::int64_t k_cap = 2000;
  double lambda = 1.0;

  int m() const { return static_cast<int>(gamma_sq.size()); }
  void check() const;
};

/// 2^i * max{term1, term2, term3} before rounding or scaling.
double k_schedule_raw(int i, double gamma_sq, const RegMinSpec& spec, int m, double delta, int d,
                      int horizon, double lambda);

/// ceil(k_scale * ceil(k_schedule_raw)) clamped to [0, k_cap].
std::int64_t k_schedule(int i, double gamma_sq, const RegMinSpec& spec, int m, double delta, int d,
                        int horizon, double k_scale, double lambda,
                        std::int64_t k_cap = std::numeric_limits<std::int64_t>::max());

struct CoverLevel {
  double gamma_sq = 1.0;
  std::int64_t K = 0;
  std::vector<TransitionRecord> data;
  PrecisionMatrix pm;
};

struct CoveringPartition {
  int h = 0;
  double lambda = 1.0;
  GoalSetChain chain;
  std::vector<CoverLevel> levels;
  std::int64_t increasing_reward_warnings = 0;

  std::int64_t episodes() const;
  /// 1-based level of phi, num_levels + 1 for the remainder.
  int level_of(const Vector& phi) const { return chain.level_of(phi); }
};

CoveringPartition cover_traj(Simulator& sim, int h, double delta, const ToleranceSchedule& schedule,
                             const RegMinConfig& regmin, Rng& rng);

}  // namespace rflin
