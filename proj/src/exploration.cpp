#include "rflin/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "rflin/errors.hpp"
#include "rflin/planner.hpp"

namespace rflin {

int GoalSetChain::level_of(const Vector& phi) const {
  for (std::size_t i = 0; i < levels_.size(); ++i)
    if (quad_form(levels_[i].inv, phi) <= levels_[i].gamma_sq) return static_cast<int>(i) + 1;
  return num_levels() + 1;
}

double exploration_reward_from_quad(double quad, double gamma_sq, bool in_set) {
  if (!in_set) return 0.0;
  if (quad > gamma_sq) return 1.0;
  return quad / gamma_sq;
}

double exploration_reward(const Vector& phi, const PrecisionMatrix& pm, double gamma_sq, bool in_set) {
  if (!in_set) return 0.0;
  return exploration_reward_from_quad(pm.quad_form(phi), gamma_sq, true);
}

RegMinSpec RegMinSpec::force(int d, int horizon, double gamma_sq) {
  const double base = static_cast<double>(d) * d * d * d * horizon * horizon * horizon;
  const double lg = std::log(std::exp(1.0) + std::sqrt(static_cast<double>(d)) / gamma_sq);
  RegMinSpec spec;
  spec.name = "force";
  spec.C1 = base * lg;
  spec.p1 = 3.0;
  spec.C2 = base * std::pow(lg, 1.5);
  spec.p2 = 3.5;
  return spec;
}

RegMinSpec RegMinSpec::lsvi_standin() { return RegMinSpec{}; }

void RegMinSpec::check() const {
  if (!(C1 > 0 && C2 > 0 && p1 > 0 && p2 > 0))
    throw std::invalid_argument("RegMinSpec: constants must be positive");
}

// ---------------------------------------------------------------------------

OptimisticLsvi::OptimisticLsvi(const LinearMDP& mdp, int target, double beta, bool rare_switching)
    : mdp_(&mdp), target_(target), beta_(beta), rare_switching_(rare_switching) {
  if (target < 0 || target >= mdp.horizon()) throw std::out_of_range("OptimisticLsvi: bad target step");
  for (int t = 0; t < target; ++t) cov_.emplace_back(mdp.dim(), 1.0);
  next_counts_.assign(target, std::vector<std::vector<std::pair<int, int>>>(mdp.num_pairs()));
  logdet_at_plan_.assign(target, 0.0);
  q_.assign(target + 1, Vector::Zero(mdp.num_pairs()));
  greedy_.assign(static_cast<std::size_t>(target + 1) * mdp.num_states(), 0);
  last_reward_.assign(mdp.num_pairs(), 0.0);
  seen_reward_.assign(mdp.num_pairs(), 0);
}

void OptimisticLsvi::check_reward(int pair, double r) {
  if (!(r >= -1e-9 && r <= 1.0 + 1e-9))
    throw ContractViolation("regmin: reward " + std::to_string(r) + " outside [0,1]");
  if (seen_reward_[pair] && r > last_reward_[pair] + 1e-9) {
    if (warnings_ == 0)
      std::cerr << "warning: regmin reward increased across episodes (pair " << pair << ": "
                << last_reward_[pair] << " -> " << r << ")\n";
    ++warnings_;
  }
  seen_reward_[pair] = 1;
  last_reward_[pair] = r;
}

void OptimisticLsvi::replan(const PairReward& reward) {
  const LinearMDP& mdp = *mdp_;
  const int n_s = mdp.num_states(), n_a = mdp.num_actions();
  const auto& uniq = mdp.unique_features();

  auto set_greedy = [&](int t, Vector& v_next) {
    v_next.resize(n_s);
    for (int s = 0; s < n_s; ++s) {
      int best = 0;
      for (int a = 1; a < n_a; ++a)
        if (q_[t](s * n_a + a) > q_[t](s * n_a + best)) best = a;
      greedy_[static_cast<std::size_t>(t) * n_s + s] = best;
      v_next(s) = q_[t](s * n_a + best);
    }
  };

  for (int p = 0; p < mdp.num_pairs(); ++p) {
    const double r = reward(p);
    check_reward(p, r);
    q_[target_](p) = std::clamp(r, 0.0, 1.0);
  }
  Vector v_next;
  set_greedy(target_, v_next);

  for (int t = target_ - 1; t >= 0; --t) {
    Vector b = Vector::Zero(mdp.dim());
    for (int p = 0; p < mdp.num_pairs(); ++p) {
      const auto& counts = next_counts_[t][p];
      if (counts.empty()) continue;
      double y = 0.0;
      for (const auto& [s_next, n] : counts) y += n * v_next(s_next);
      b += y * mdp.features().row(p).transpose();
    }
    const Matrix& inv = cov_[t].inv();
    const Vector w = inv * b;
    const Vector lin = uniq * w;
    const Matrix proj = uniq * inv;
    Vector val(uniq.rows());
    for (Eigen::Index u = 0; u < uniq.rows(); ++u) {
      const double quad = std::max(0.0, proj.row(u).dot(uniq.row(u)));
      val(u) = std::clamp(lin(u) + beta_ * std::sqrt(quad), 0.0, 1.0);
    }
    for (int p = 0; p < mdp.num_pairs(); ++p) q_[t](p) = val(mdp.feature_id(p));
    set_greedy(t, v_next);
  }

  for (int t = 0; t < target_; ++t) logdet_at_plan_[t] = cov_[t].logdet();
  reward_logdet_at_plan_ = reward_logdet_;
  planned_ = true;
  ++replans_;
}

Trajectory OptimisticLsvi::episode(Simulator& sim, const PairReward& reward, Rng& rng) {
  if (&sim.mdp() != mdp_) throw std::invalid_argument("OptimisticLsvi: simulator wraps a different MDP");
  bool stale = !planned_ || !rare_switching_;
  const double log2 = std::log(2.0);
  if (!stale) {
    stale = reward_logdet_ - reward_logdet_at_plan_ >= log2;
    for (int t = 0; t < target_ && !stale; ++t) stale = cov_[t].logdet() - logdet_at_plan_[t] >= log2;
  }
  if (stale) replan(reward);

  const int n_s = mdp_->num_states();
  Trajectory traj = sim.episode(
      [&](int t, int s) { return t <= target_ ? greedy_[static_cast<std::size_t>(t) * n_s + s] : 0; },
      rng);

  const Step& at = traj.steps[target_];
  const int pair = mdp_->pair_index(at.s, at.a);
  if (!stale) check_reward(pair, reward(pair));

  for (int t = 0; t < target_; ++t) {
    const Step& st = traj.steps[t];
    const int p = mdp_->pair_index(st.s, st.a);
    cov_[t].update(mdp_->features().row(p).transpose());
    auto& counts = next_counts_[t][p];
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == st.s_next; });
    if (it == counts.end())
      counts.emplace_back(st.s_next, 1);
    else
      ++it->second;
  }
  return traj;
}

std::unique_ptr<RegMin> make_regmin(const LinearMDP& mdp, int target, std::int64_t episodes,
                                    double delta, const RegMinConfig& config) {
  config.spec.check();
  const double b = beta(mdp.dim(), mdp.horizon(), static_cast<double>(std::max<std::int64_t>(episodes, 1)),
                        delta, config.bonus_scale);
  return std::make_unique<OptimisticLsvi>(mdp, target, b, config.rare_switching);
}

// ---------------------------------------------------------------------------

EgsResult egs(Simulator& sim, const GoalSetChain& chain, int h, std::int64_t K, double gamma_sq,
              double lambda, double delta, const RegMinConfig& regmin, Rng& rng) {
  const LinearMDP& mdp = sim.mdp();
  if (h < 0 || h >= mdp.horizon()) throw std::out_of_range("egs: step out of range");
  if (K < 0) throw std::invalid_argument("egs: K must be >= 0");
  if (!(gamma_sq > 0.0 && gamma_sq <= 1.0)) throw std::invalid_argument("egs: gamma_sq must lie in (0,1]");

  EgsResult out{GoalLevel{}, {}, PrecisionMatrix(mdp.dim(), lambda), 0};
  const auto& uniq = mdp.unique_features();
  std::vector<signed char> member(uniq.rows(), -1);
  auto reward = [&](int pair) {
    const int f = mdp.feature_id(pair);
    if (member[f] < 0) member[f] = chain.in_remainder(uniq.row(f).transpose()) ? 1 : 0;
    if (!member[f]) return 0.0;
    return exploration_reward_from_quad(quad_form(out.pm.inv(), uniq.row(f).transpose()), gamma_sq, true);
  };

  if (K > 0) {
    auto learner = make_regmin(mdp, h, K, delta, regmin);
    out.data.reserve(static_cast<std::size_t>(K));
    for (std::int64_t k = 0; k < K; ++k) {
      learner->observe_reward_logdet(out.pm.logdet());
      const Trajectory traj = learner->episode(sim, reward, rng);
      const Step& st = traj.steps[h];
      TransitionRecord rec{h, st.s, st.a, st.s_next, mdp.feature(st.s, st.a)};
      out.pm.update(rec.feature);
      out.data.push_back(std::move(rec));
    }
    out.increasing_reward_warnings = learner->increasing_reward_warnings();
  }
  out.level = GoalLevel{out.pm.inv(), gamma_sq};
  return out;
}

// ---------------------------------------------------------------------------

void ToleranceSchedule::check() const {
  if (gamma_sq.empty()) throw std::invalid_argument("ToleranceSchedule: need at least one epoch");
  for (double g : gamma_sq)
    if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("ToleranceSchedule: gamma_sq must lie in (0,1]");
  if (!(k_scale > 0.0)) throw std::invalid_argument("ToleranceSchedule: k_scale must be > 0");
  if (k_cap < 0) throw std::invalid_argument("ToleranceSchedule: k_cap must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("ToleranceSchedule: lambda must be > 0");
}

namespace {
double log_pow(double x, double p) {
  const double l = std::log(x);
  return l <= 0.0 ? 0.0 : std::pow(l, p);
}
}  // namespace

double k_schedule_raw(int i, double gamma_sq, const RegMinSpec& spec, int m, double delta, int d,
                      int horizon, double lambda) {
  if (i < 1 || m < 1 || d < 1 || horizon < 1) throw std::invalid_argument("k_schedule: bad sizes");
  if (!(gamma_sq > 0.0) || !(delta > 0.0) || !(lambda > 0.0))
    throw std::invalid_argument("k_schedule: gamma_sq, delta and lambda must be positive");
  spec.check();
  const double two_i = std::ldexp(1.0, i);
  const double t1 = std::ldexp(1.0, 10) * std::pow(2.0, spec.p1) * spec.C1 * std::pow(spec.p1, spec.p1) *
                    log_pow(std::ldexp(1.0, i + 12) * spec.p1 * m * spec.C1 * horizon / delta, spec.p1);
  const double t2 = std::ldexp(1.0, 4) * std::pow(2.0, spec.p2) * spec.C2 * std::pow(spec.p2, spec.p2) *
                    log_pow(std::ldexp(1.0, i + 6) * spec.p2 * m * spec.C2 * horizon / delta, spec.p2);
  const double t3 = (24.0 * d / gamma_sq) * std::max(0.0, std::log(48.0 * two_i * d / lambda / gamma_sq));
  return two_i * std::max({t1, t2, t3});
}

std::int64_t k_schedule(int i, double gamma_sq, const RegMinSpec& spec, int m, double delta, int d,
                        int horizon, double k_scale, double lambda, std::int64_t k_cap) {
  if (!(k_scale > 0.0)) throw std::invalid_argument("k_schedule: k_scale must be > 0");
  if (k_cap < 0) throw std::invalid_argument("k_schedule: k_cap must be >= 0");
  const double theoretical = std::ceil(k_schedule_raw(i, gamma_sq, spec, m, delta, d, horizon, lambda));
  const double scaled = std::ceil(k_scale * theoretical);
  if (scaled >= static_cast<double>(k_cap)) return k_cap;
  return static_cast<std::int64_t>(scaled);
}

std::int64_t CoveringPartition::episodes() const {
  std::int64_t n = 0;
  for (const auto& l : levels) n += l.K;
  return n;
}

CoveringPartition cover_traj(Simulator& sim, int h, double delta, const ToleranceSchedule& schedule,
                             const RegMinConfig& regmin, Rng& rng) {
  schedule.check();
  const LinearMDP& mdp = sim.mdp();
  CoveringPartition out;
  out.h = h;
  out.lambda = schedule.lambda;
  const int m = schedule.m();
  for (int i = 1; i <= m; ++i) {
    const double g = schedule.gamma_sq[i - 1];
    const std::int64_t K = k_schedule(i, g, regmin.spec, m, delta, mdp.dim(), mdp.horizon(),
                                      schedule.k_scale, schedule.lambda, schedule.k_cap);
    EgsResult res = egs(sim, out.chain, h, K, g, schedule.lambda, delta, regmin, rng);
    out.chain.push(res.level);
    out.increasing_reward_warnings += res.increasing_reward_warnings;
    out.levels.push_back(CoverLevel{g, K, std::move(res.data), std::move(res.pm)});
  }
  return out;
}

}  // namespace rflin
