#include "rflin/linear_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "rflin/errors.hpp"

namespace rflin {
namespace {

constexpr double kClampTolerance = 1e-12;
constexpr double kReachTolerance = 1e-12;

void check_index(bool ok, const char* what, int value) {
  if (!ok) throw std::out_of_range(fmt::format("{} index {} out of range", what, value));
}

}  // namespace

LinearMDP::LinearMDP(int dim, int horizon, std::vector<std::string> states,
                     std::vector<std::string> actions, RowMatrix phi, std::vector<Matrix> mu,
                     std::vector<Vector> theta, int initial_state)
    : dim_(dim),
      horizon_(horizon),
      states_(std::move(states)),
      actions_(std::move(actions)),
      phi_(std::move(phi)),
      mu_(std::move(mu)),
      theta_(std::move(theta)),
      initial_state_(initial_state) {
  if (dim_ < 1) throw std::invalid_argument("feature dimension must be >= 1");
  if (horizon_ < 1) throw std::invalid_argument("horizon must be >= 1");
  if (states_.empty() || actions_.empty())
    throw std::invalid_argument("state and action sets must be non-empty");
  if (phi_.rows() != num_pairs() || phi_.cols() != dim_)
    throw std::invalid_argument(fmt::format("phi must be {}x{}, got {}x{}", num_pairs(), dim_,
                                            phi_.rows(), phi_.cols()));
  if (static_cast<int>(mu_.size()) != horizon_ || static_cast<int>(theta_.size()) != horizon_)
    throw std::invalid_argument("mu and theta need one entry per step");
  for (int h = 0; h < horizon_; ++h) {
    if (mu_[h].rows() != num_states() || mu_[h].cols() != dim_)
      throw std::invalid_argument(fmt::format("mu[{}] must be {}x{}", h, num_states(), dim_));
    if (theta_[h].size() != dim_)
      throw std::invalid_argument(fmt::format("theta[{}] must have {} entries", h, dim_));
  }
  if (initial_state_ < 0 || initial_state_ >= num_states())
    throw std::invalid_argument("initial state out of range");
  if (!phi_.allFinite()) throw std::invalid_argument("phi has non-finite entries");

  const int n_pairs = num_pairs();
  const int n_states = num_states();
  kernel_.reserve(horizon_);
  cdf_.reserve(horizon_);
  reward_.reserve(horizon_);
  for (int h = 0; h < horizon_; ++h) {
    Matrix p = raw_kernel(h);
    for (int i = 0; i < n_pairs; ++i) {
      bool clamped = false;
      for (int j = 0; j < n_states; ++j) {
        if (p(i, j) < 0.0) {
          p(i, j) = 0.0;
          clamped = true;
        }
      }
      if (clamped) {
        const double total = p.row(i).sum();
        if (total > 0.0) {
          p.row(i) /= total;
        } else {
          p.row(i).setZero();
          p(i, i / num_actions()) = 1.0;
        }
      }
    }
    RowMatrix cdf(n_pairs, n_states);
    for (int i = 0; i < n_pairs; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n_states; ++j) {
        acc += p(i, j);
        cdf(i, j) = acc;
      }
    }
    kernel_.push_back(std::move(p));
    cdf_.push_back(std::move(cdf));
    reward_.push_back(phi_ * theta_[h]);
  }

  // Deduplicate feature rows (exact equality).
  std::map<std::vector<double>, int> seen;
  std::vector<int> first_pair;
  feature_id_.resize(n_pairs);
  for (int i = 0; i < n_pairs; ++i) {
    std::vector<double> key(phi_.row(i).data(), phi_.row(i).data() + dim_);
    auto [it, inserted] = seen.emplace(std::move(key), static_cast<int>(first_pair.size()));
    if (inserted) first_pair.push_back(i);
    feature_id_[i] = it->second;
  }
  unique_phi_.resize(static_cast<Eigen::Index>(first_pair.size()), dim_);
  for (std::size_t f = 0; f < first_pair.size(); ++f)
    unique_phi_.row(static_cast<Eigen::Index>(f)) = phi_.row(first_pair[f]);

  reachable_.assign(horizon_, {});
  std::vector<char> current(n_states, 0);
  current[initial_state_] = 1;
  for (int h = 0; h < horizon_; ++h) {
    std::vector<char> next(n_states, 0);
    for (int s = 0; s < n_states; ++s) {
      if (!current[s]) continue;
      reachable_[h].push_back(s);
      for (int a = 0; a < num_actions(); ++a) {
        const Eigen::RowVectorXd row = phi_.row(pair_index(s, a)) * mu_[h].transpose();
        for (int j = 0; j < n_states; ++j)
          if (row(j) > kReachTolerance) next[j] = 1;
      }
    }
    current.swap(next);
  }
}

Matrix LinearMDP::raw_kernel(int h) const { return phi_ * mu_[h].transpose(); }

int LinearMDP::sample_next(int h, int pair, double u) const {
  const auto& cdf = cdf_[h];
  const int n = num_states();
  int last_positive = 0;
  double prev = 0.0;
  for (int j = 0; j < n; ++j) {
    const double c = cdf(pair, j);
    if (c > prev) last_positive = j;
    if (u < c) return j;
    prev = c;
  }
  // Cumulative sums can end a few ulps below one.
  return last_positive;
}

int LinearMDP::state_index(const std::string& name) const {
  auto it = std::find(states_.begin(), states_.end(), name);
  if (it == states_.end()) throw std::out_of_range("unknown state '" + name + "'");
  return static_cast<int>(it - states_.begin());
}

int LinearMDP::action_index(const std::string& name) const {
  auto it = std::find(actions_.begin(), actions_.end(), name);
  if (it == actions_.end()) throw std::out_of_range("unknown action '" + name + "'");
  return static_cast<int>(it - actions_.begin());
}

// --- PolicyTable ---

PolicyTable::PolicyTable(int horizon, int num_states, int num_actions)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      probs_(static_cast<std::size_t>(horizon) * num_states * num_actions,
             1.0 / static_cast<double>(num_actions)) {
  if (horizon < 1 || num_states < 1 || num_actions < 1)
    throw std::invalid_argument("policy table dimensions must be positive");
}

PolicyTable PolicyTable::deterministic(int num_actions,
                                       const std::vector<std::vector<int>>& actions) {
  if (actions.empty() || actions.front().empty())
    throw std::invalid_argument("deterministic policy needs at least one (h, s)");
  PolicyTable table(static_cast<int>(actions.size()), static_cast<int>(actions.front().size()),
                    num_actions);
  for (int h = 0; h < table.horizon_; ++h) {
    if (static_cast<int>(actions[h].size()) != table.num_states_)
      throw std::invalid_argument("ragged deterministic policy");
    for (int s = 0; s < table.num_states_; ++s) table.set_action(h, s, actions[h][s]);
  }
  return table;
}

void PolicyTable::set_action(int h, int s, int a) {
  check_index(h >= 0 && h < horizon_, "step", h);
  check_index(s >= 0 && s < num_states_, "state", s);
  check_index(a >= 0 && a < num_actions_, "action", a);
  double* row = probs_.data() + offset(h, s);
  std::fill(row, row + num_actions_, 0.0);
  row[a] = 1.0;
}

void PolicyTable::set_row(int h, int s, std::span<const double> probs) {
  check_index(h >= 0 && h < horizon_, "step", h);
  check_index(s >= 0 && s < num_states_, "state", s);
  if (static_cast<int>(probs.size()) != num_actions_)
    throw std::invalid_argument("policy row has wrong length");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ContractViolation("policy probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ContractViolation(fmt::format("policy row ({}, {}) sums to {}", h, s, total));
  std::copy(probs.begin(), probs.end(), probs_.begin() + static_cast<std::ptrdiff_t>(offset(h, s)));
}

std::optional<int> PolicyTable::deterministic_action(int h, int s) const {
  const auto r = row(h, s);
  for (int a = 0; a < num_actions_; ++a)
    if (r[a] == 1.0) return a;
  return std::nullopt;
}

int PolicyTable::sample(int h, int s, double u) const {
  const auto r = row(h, s);
  double acc = 0.0;
  int last_positive = 0;
  for (int a = 0; a < num_actions_; ++a) {
    if (r[a] > 0.0) last_positive = a;
    acc += r[a];
    if (u < acc) return a;
  }
  return last_positive;
}

double PolicyTable::max_row_error() const {
  double worst = 0.0;
  for (int h = 0; h < horizon_; ++h) {
    for (int s = 0; s < num_states_; ++s) {
      double total = 0.0;
      for (double p : row(h, s)) {
        worst = std::max(worst, -p);
        total += p;
      }
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  return worst;
}

double Trajectory::total_reward() const {
  double total = 0.0;
  for (const auto& st : steps) total += st.r;
  return total;
}

// --- validation ---

ValidationReport validate(const LinearMDP& mdp) {
  ValidationReport rep;
  const int d = mdp.dim();
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  const int n_states = mdp.num_states();
  const int n_actions = mdp.num_actions();

  const auto& phi = mdp.features();
  for (int i = 0; i < mdp.num_pairs(); ++i)
    rep.feature_norm_excess = std::max(rep.feature_norm_excess, phi.row(i).norm() - 1.0);

  for (int h = 0; h < mdp.horizon(); ++h) {
    rep.theta_norm_excess = std::max(rep.theta_norm_excess, mdp.theta(h).norm() - sqrt_d);
    const Vector abs_mass = mdp.mu(h).cwiseAbs().colwise().sum().transpose();
    rep.mu_norm_excess = std::max(rep.mu_norm_excess, abs_mass.norm() - sqrt_d);

    const Matrix p = mdp.raw_kernel(h);
    const Vector& r = mdp.rewards(h);
    std::vector<char> is_reachable(n_states, 0);
    for (int s : mdp.reachable()[h]) is_reachable[s] = 1;
    for (int s = 0; s < n_states; ++s) {
      for (int a = 0; a < n_actions; ++a) {
        const int i = mdp.pair_index(s, a);
        const double min_p = p.row(i).minCoeff();
        const double sum_err = std::abs(p.row(i).sum() - 1.0);
        const double r_excess = std::max({0.0, -r(i), r(i) - 1.0});
        if (is_reachable[s]) {
          ++rep.reachable_rows;
          rep.min_probability = std::min(rep.min_probability, min_p);
          rep.row_sum_error = std::max(rep.row_sum_error, sum_err);
          rep.reward_range_excess = std::max(rep.reward_range_excess, r_excess);
        } else if (min_p < -1e-12 || sum_err > 1e-9 || r_excess > 1e-9) {
          ++rep.unreachable_invalid_rows;
        }
      }
    }
  }
  rep.feature_norm_excess = std::max(0.0, rep.feature_norm_excess);
  rep.theta_norm_excess = std::max(0.0, rep.theta_norm_excess);
  rep.mu_norm_excess = std::max(0.0, rep.mu_norm_excess);

  auto fail = [&](bool bad, std::string msg) {
    if (bad) {
      rep.pass = false;
      rep.failures.push_back(std::move(msg));
    }
  };
  fail(rep.feature_norm_excess > 1e-12,
       fmt::format("feature norm exceeds 1 by {:.3g}", rep.feature_norm_excess));
  fail(rep.min_probability < -kClampTolerance,
       fmt::format("negative transition probability {:.3g}", rep.min_probability));
  fail(rep.row_sum_error > 1e-9,
       fmt::format("transition rows deviate from 1 by {:.3g}", rep.row_sum_error));
  fail(rep.theta_norm_excess > 1e-12,
       fmt::format("||theta_h|| exceeds sqrt(d) by {:.3g}", rep.theta_norm_excess));
  fail(rep.mu_norm_excess > 1e-12,
       fmt::format("||mu_h|(S)| exceeds sqrt(d) by {:.3g}", rep.mu_norm_excess));
  fail(rep.reward_range_excess > 1e-9,
       fmt::format("rewards leave [0,1] by {:.3g}", rep.reward_range_excess));
  return rep;
}

// --- simulation ---

std::pair<double, int> step(const LinearMDP& mdp, int h, int s, int a, Rng& rng) {
  check_index(h >= 0 && h < mdp.horizon(), "step", h);
  check_index(s >= 0 && s < mdp.num_states(), "state", s);
  check_index(a >= 0 && a < mdp.num_actions(), "action", a);
  const int pair = mdp.pair_index(s, a);
  return {mdp.rewards(h)(pair), mdp.sample_next(h, pair, rng.uniform())};
}

Trajectory rollout(const LinearMDP& mdp, const PolicyTable& policy, Rng& rng) {
  Simulator sim(mdp);
  return sim.rollout(policy, rng);
}

std::pair<double, int> Simulator::step(int h, int s, int a, Rng& rng) {
  ++transitions_;
  return rflin::step(*mdp_, h, s, a, rng);
}

Trajectory Simulator::rollout(const PolicyTable& policy, Rng& rng) {
  if (policy.horizon() != mdp_->horizon() || policy.num_states() != mdp_->num_states() ||
      policy.num_actions() != mdp_->num_actions())
    throw std::invalid_argument("policy shape does not match the MDP");
  return episode([&](int h, int s) { return policy.sample(h, s, rng.uniform()); }, rng);
}

}  // namespace rflin
