#include "rflin/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rflin/errors.hpp"

namespace rflin {

double beta(int d, int horizon, double k_max, double delta, double c) {
  if (d < 1 || horizon < 1) throw std::invalid_argument("beta: d and H must be >= 1");
  if (!(k_max > 0.0)) throw std::invalid_argument("beta: K_max must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("beta: delta must lie in (0,1)");
  if (c < 0.0) throw std::invalid_argument("beta: c must be >= 0");
  const double inner = d * std::log(1.0 + static_cast<double>(d) * horizon * k_max) +
                       std::log(static_cast<double>(horizon) / delta);
  return c * horizon * std::sqrt(inner);
}

EpsilonSchedule schedule_from_epsilon(double epsilon, int d, int horizon, double beta) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("schedule_from_epsilon: epsilon must be > 0");
  if (d < 1 || horizon < 1) throw std::invalid_argument("schedule_from_epsilon: bad sizes");
  EpsilonSchedule out;
  const double arg = 4.0 * beta * horizon / epsilon;
  out.iota = arg > 0.0 ? std::max(1, static_cast<int>(std::ceil(std::log2(arg)))) : 1;
  const double iota = out.iota;
  const double denom = 64.0 * horizon * horizon * iota * iota * beta * beta;
  for (int i = 1; i <= out.iota; ++i) {
    const double g = denom > 0.0 ? std::ldexp(1.0, 2 * i) * epsilon * epsilon / denom : 1.0;
    out.gamma_sq.push_back(std::min(1.0, g));
  }
  return out;
}

void PlanConfig::check() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("PlanConfig: epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("PlanConfig: delta must lie in (0,1)");
  if (!(bonus_scale > 0.0)) throw std::invalid_argument("PlanConfig: bonus_scale must be > 0");
  if (!(k_scale > 0.0)) throw std::invalid_argument("PlanConfig: k_scale must be > 0");
  if (k_cap < 0) throw std::invalid_argument("PlanConfig: k_cap must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("PlanConfig: lambda must be > 0");
}

std::int64_t ExplorationDataset::record_count() const {
  std::int64_t n = 0;
  for (const auto& p : partitions)
    for (const auto& l : p.levels) n += static_cast<std::int64_t>(l.data.size());
  return n;
}

KMaxResult resolve_k_max(int d, int horizon, const PlanConfig& config) {
  config.check();
  KMaxResult out;
  const double step_delta = config.delta / horizon;
  for (int iter = 0; iter < 200; ++iter) {
    out.beta = beta(d, horizon, out.k_max, config.delta, config.bonus_scale);
    out.schedule = schedule_from_epsilon(config.epsilon, d, horizon, out.beta);
    out.k.clear();
    std::int64_t per_step = 0;
    for (int i = 1; i <= out.schedule.iota; ++i) {
      out.k.push_back(k_schedule(i, out.schedule.gamma_sq[i - 1], config.regmin.spec, out.schedule.iota,
                                 step_delta, d, horizon, config.k_scale, config.lambda, config.k_cap));
      per_step += out.k.back();
    }
    out.total = per_step * horizon;
    if (out.k_max >= static_cast<double>(out.total)) return out;
    out.k_max = static_cast<double>(out.total);
  }
  throw std::runtime_error("resolve_k_max: no fixed point; lower k_scale or set k_cap");
}

ExplorationDataset rflin_explore(Simulator& sim, const PlanConfig& config, Rng& rng) {
  const LinearMDP& mdp = sim.mdp();
  const KMaxResult k = resolve_k_max(mdp.dim(), mdp.horizon(), config);

  ExplorationDataset out;
  out.d = mdp.dim();
  out.horizon = mdp.horizon();
  out.num_states = mdp.num_states();
  out.num_actions = mdp.num_actions();
  out.features = mdp.features();
  out.beta = k.beta;
  out.delta = config.delta;
  out.bonus_scale = config.bonus_scale;
  out.k_max = k.k_max;
  out.iota = k.schedule.iota;
  out.gamma_sq = k.schedule.gamma_sq;

  ToleranceSchedule schedule{k.schedule.gamma_sq, config.k_scale, config.k_cap, config.lambda};
  for (int h = 0; h < mdp.horizon(); ++h) {
    Rng child = rng.split(static_cast<std::uint64_t>(h));
    out.partitions.push_back(cover_traj(sim, h, config.delta / mdp.horizon(), schedule, config.regmin, child));
    out.total_episodes += out.partitions.back().episodes();
  }
  return out;
}

RewardTable tabulate_reward(int horizon, int num_states, int num_actions, const RewardFn& fn) {
  RewardTable out;
  for (int h = 0; h < horizon; ++h) {
    Vector r(num_states * num_actions);
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_actions; ++a) r(s * num_actions + a) = fn(h, s, a);
    out.push_back(std::move(r));
  }
  return out;
}

PlanResult rflin_plan(const ExplorationDataset& dataset, const RewardTable& reward, double bonus_scale) {
  const int horizon = dataset.horizon, n_s = dataset.num_states, n_a = dataset.num_actions;
  const int n_pairs = n_s * n_a, d = dataset.d;
  if (static_cast<int>(reward.size()) != horizon) throw std::invalid_argument("rflin_plan: reward has wrong horizon");
  for (int h = 0; h < horizon; ++h) {
    if (reward[h].size() != n_pairs) throw std::invalid_argument("rflin_plan: reward has wrong size");
    for (int p = 0; p < n_pairs; ++p) {
      const double r = reward[h](p);
      if (!(r >= -1e-9 && r <= 1.0 + 1e-9))
        throw ContractViolation("rflin_plan: reward " + std::to_string(r) + " at step " + std::to_string(h) +
                                ", pair " + std::to_string(p) + " outside [0,1]");
    }
  }
  if (static_cast<int>(dataset.partitions.size()) != horizon)
    throw std::invalid_argument("rflin_plan: dataset needs one partition per step");

  QEstimate est;
  est.horizon = horizon;
  est.beta = bonus_scale < 0.0 ? dataset.beta
                               : beta(d, horizon, std::max(dataset.k_max, 1.0), dataset.delta, bonus_scale);
  est.w.assign(horizon, Vector::Zero(d));
  est.q.assign(horizon, Vector::Zero(n_pairs));
  est.v.assign(horizon + 1, Vector::Zero(n_s));
  PolicyTable policy(horizon, n_s, n_a);
  std::vector<std::vector<int>> actions(horizon, std::vector<int>(n_s, 0));

  std::vector<PrecisionMatrix> covs;
  for (int h = 0; h < horizon; ++h) covs.emplace_back(d, 1.0);

  for (int h = horizon - 1; h >= 0; --h) {
    Matrix counts = Matrix::Zero(n_pairs, n_s);
    for (const auto& level : dataset.partitions[h].levels)
      for (const auto& rec : level.data) counts(rec.s * n_a + rec.a, rec.s_next) += 1.0;
    const Vector visits = counts.rowwise().sum();
    const Vector next_value = counts * est.v[h + 1];

    Matrix gram = Matrix::Zero(d, d);
    Vector b = Vector::Zero(d);
    long n = 0;
    for (int p = 0; p < n_pairs; ++p) {
      if (visits(p) == 0.0) continue;
      const Vector phi = dataset.features.row(p).transpose();
      gram.noalias() += visits(p) * phi * phi.transpose();
      b += (visits(p) * reward[h](p) + next_value(p)) * phi;
      n += static_cast<long>(visits(p));
    }
    covs[h].add_gram(gram, n);
    est.w[h] = covs[h].mat().llt().solve(b);

    const Vector lin = dataset.features * est.w[h];
    const Matrix proj = dataset.features * covs[h].inv();
    for (int p = 0; p < n_pairs; ++p) {
      const double quad = std::max(0.0, proj.row(p).dot(dataset.features.row(p)));
      est.q[h](p) = std::clamp(lin(p) + est.beta * std::sqrt(quad), 0.0, static_cast<double>(horizon));
    }
    for (int s = 0; s < n_s; ++s) {
      int best = 0;
      for (int a = 1; a < n_a; ++a)
        if (est.q[h](s * n_a + a) > est.q[h](s * n_a + best)) best = a;
      actions[h][s] = best;
      est.v[h](s) = est.q[h](s * n_a + best);
    }
  }
  est.cov = std::move(covs);
  return PlanResult{PolicyTable::deterministic(n_a, actions), std::move(est)};
}

double suboptimality(const LinearMDP& mdp, const PolicyTable& policy, const RewardTable& reward) {
  return value_iteration_exact(mdp, reward).value() - evaluate_policy(mdp, policy, reward);
}

double optimism_fraction(const LinearMDP& mdp, const QEstimate& estimate, const RewardTable& reward) {
  const ValueTables star = value_iteration_exact(mdp, reward);
  const int n_s = mdp.num_states(), n_a = mdp.num_actions();
  long ok = 0, total = 0;
  for (int h = 0; h < mdp.horizon(); ++h)
    for (int s = 0; s < n_s; ++s)
      for (int a = 0; a < n_a; ++a) {
        ++total;
        if (estimate.q[h](mdp.pair_index(s, a)) >= star.Q[h](s, a) - 1e-9) ++ok;
      }
  return total ? static_cast<double>(ok) / static_cast<double>(total) : 1.0;
}

double chain_bound(const LinearMDP& mdp, const PolicyTable& policy, const QEstimate& estimate) {
  RewardTable norms;
  for (int h = 0; h < mdp.horizon(); ++h) {
    const Matrix proj = mdp.features() * estimate.cov[h].inv();
    Vector r(mdp.num_pairs());
    for (int p = 0; p < mdp.num_pairs(); ++p)
      r(p) = std::sqrt(std::max(0.0, proj.row(p).dot(mdp.features().row(p))));
    norms.push_back(std::move(r));
  }
  return 2.0 * estimate.beta * evaluate_policy(mdp, policy, norms);
}

std::vector<Vector> random_reward_thetas(const LinearMDP& mdp, Rng& rng) {
  std::vector<Vector> out;
  for (int h = 0; h < mdp.horizon(); ++h) {
    Vector theta(mdp.dim());
    for (int j = 0; j < mdp.dim(); ++j) theta(j) = rng.uniform();
    const Vector r = mdp.features() * theta;
    if (r.minCoeff() < -1e-12)
      throw ContractViolation("random_reward_thetas: feature map yields negative rewards");
    const double top = r.maxCoeff();
    if (top > 1.0) theta /= top;
    out.push_back(std::move(theta));
  }
  return out;
}

}  // namespace rflin
