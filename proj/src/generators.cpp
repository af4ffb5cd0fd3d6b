#include "rflin/generators.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace rflin {
namespace {

std::vector<std::string> names(const char* prefix, int n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(fmt::format("{}{}", prefix, i));
  return out;
}

// Random point of the probability simplex; `sparsity` sharpens the draw.
Vector random_simplex(int n, double sparsity, Rng& rng) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = std::pow(rng.exponential(), sparsity);
  const double total = x.sum();
  if (total <= 0.0) {
    x.setZero();
    x(static_cast<Eigen::Index>(rng.below(n))) = 1.0;
    return x;
  }
  return x / total;
}

Vector unit(int n, int i) {
  Vector e = Vector::Zero(n);
  e(i) = 1.0;
  return e;
}

}  // namespace

LinearMDP random_linear_mdp(const RandomMdpSpec& spec, Rng& rng) {
  const int d = spec.dim;
  if (d < 1 || spec.horizon < 1 || spec.num_states < 1 || spec.num_actions < 1)
    throw std::invalid_argument("random_linear_mdp: sizes must be positive");
  RowMatrix phi(spec.num_states * spec.num_actions, d);
  for (int i = 0; i < phi.rows(); ++i)
    phi.row(i) = random_simplex(d, spec.sparsity, rng).transpose();
  std::vector<Matrix> mu;
  std::vector<Vector> theta;
  for (int h = 0; h < spec.horizon; ++h) {
    Matrix m(spec.num_states, d);
    for (int j = 0; j < d; ++j) m.col(j) = random_simplex(spec.num_states, spec.sparsity, rng);
    mu.push_back(std::move(m));
    Vector t(d);
    for (int j = 0; j < d; ++j) t(j) = rng.uniform();
    theta.push_back(std::move(t));
  }
  return LinearMDP(d, spec.horizon, names("s", spec.num_states), names("a", spec.num_actions),
                   std::move(phi), std::move(mu), std::move(theta), 0);
}

LinearMDP tabular_embed(int num_states, int num_actions, const std::vector<Matrix>& transitions,
                        const std::vector<Vector>& rewards, int initial_state) {
  const int n_pairs = num_states * num_actions;
  const int horizon = static_cast<int>(transitions.size());
  if (num_states < 1 || num_actions < 1 || horizon < 1)
    throw std::invalid_argument("tabular_embed: sizes must be positive");
  if (static_cast<int>(rewards.size()) != horizon)
    throw std::invalid_argument("tabular_embed: need one reward table per step");
  for (int h = 0; h < horizon; ++h) {
    const Matrix& p = transitions[h];
    if (p.rows() != n_pairs || p.cols() != num_states)
      throw std::invalid_argument(fmt::format("tabular_embed: P[{}] must be {}x{}", h, n_pairs,
                                              num_states));
    if (rewards[h].size() != n_pairs)
      throw std::invalid_argument(fmt::format("tabular_embed: r[{}] must have {} entries", h,
                                              n_pairs));
    for (int i = 0; i < n_pairs; ++i) {
      if (p.row(i).minCoeff() < 0.0)
        throw std::invalid_argument(fmt::format("tabular_embed: P[{}] row {} is negative", h, i));
      if (std::abs(p.row(i).sum() - 1.0) > 1e-9)
        throw std::invalid_argument(
            fmt::format("tabular_embed: P[{}] row {} sums to {}", h, i, p.row(i).sum()));
      if (rewards[h](i) < 0.0 || rewards[h](i) > 1.0)
        throw std::invalid_argument(fmt::format("tabular_embed: r[{}][{}] outside [0,1]", h, i));
    }
  }
  RowMatrix phi = RowMatrix::Identity(n_pairs, n_pairs);
  std::vector<Matrix> mu;
  std::vector<Vector> theta;
  for (int h = 0; h < horizon; ++h) {
    mu.push_back(transitions[h].transpose());
    theta.push_back(rewards[h]);
  }
  return LinearMDP(n_pairs, horizon, names("s", num_states), names("a", num_actions),
                   std::move(phi), std::move(mu), std::move(theta), initial_state);
}

LinearMDP random_tabular_mdp(const RandomTabularSpec& spec, Rng& rng) {
  const int n_pairs = spec.num_states * spec.num_actions;
  std::vector<Matrix> p;
  std::vector<Vector> r;
  for (int h = 0; h < spec.horizon; ++h) {
    Matrix ph(n_pairs, spec.num_states);
    for (int i = 0; i < n_pairs; ++i)
      ph.row(i) = random_simplex(spec.num_states, spec.sparsity, rng).transpose();
    p.push_back(std::move(ph));
    Vector rh(n_pairs);
    for (int i = 0; i < n_pairs; ++i) rh(i) = rng.uniform();
    r.push_back(std::move(rh));
  }
  return tabular_embed(spec.num_states, spec.num_actions, p, r);
}

std::vector<int> group_states(const GroupReachSpec& spec, int group) {
  if (group < 1 || group > spec.num_actions) throw std::out_of_range("group index out of range");
  std::vector<int> out;
  for (int k = 0; k < spec.states_per_group; ++k)
    out.push_back(1 + (group - 1) * spec.states_per_group + k);
  return out;
}

LinearMDP group_reach_instance(const GroupReachSpec& spec) {
  const int n_actions = spec.num_actions;
  const int per_group = spec.states_per_group;
  if (n_actions < 1 || per_group < 1)
    throw std::invalid_argument("group_reach_instance: sizes must be positive");
  const int n_states = 1 + n_actions * per_group;
  const int n_pairs = n_states * n_actions;

  Matrix p0 = Matrix::Zero(n_pairs, n_states);
  Matrix p1 = Matrix::Zero(n_pairs, n_states);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const int i = s * n_actions + a;
      p1(i, s) = 1.0;
      if (s == 0) {
        const double reach = std::ldexp(1.0, -(a + 1));
        for (int t : group_states(spec, a + 1)) p0(i, t) = reach / per_group;
        p0(i, 0) = 1.0 - reach;
      } else {
        p0(i, s) = 1.0;
      }
    }
  }
  Vector r0 = Vector::Zero(n_pairs);
  Vector r1 = Vector::Zero(n_pairs);
  for (int t : group_states(spec, 1))
    for (int a = 0; a < n_actions; ++a) r1(t * n_actions + a) = 1.0;
  return tabular_embed(n_states, n_actions, {p0, p1}, {r0, r1});
}

double lower_bound_magnitude(int d, double K) { return std::sqrt(d / (700.0 * K)); }

double lower_bound_optimal_value(const LowerBoundSpec& spec) {
  return spec.reward_steps *
         (std::sqrt(static_cast<double>(spec.d)) * lower_bound_magnitude(spec.d, spec.K) + 0.5);
}

LinearMDP lower_bound_instance(const LowerBoundSpec& spec) {
  const int d = spec.d;
  if (d < 2) throw std::invalid_argument("lower_bound_instance: d must be >= 2");
  if (spec.K < static_cast<double>(d) * d)
    throw std::invalid_argument(
        fmt::format("lower_bound_instance: K = {} < d^2 = {}; transition probabilities are not "
                    "guaranteed nonnegative",
                    spec.K, d * d));
  if (spec.reward_steps < 1) throw std::invalid_argument("lower_bound_instance: reward_steps >= 1");
  std::vector<int> signs = spec.signs.empty() ? std::vector<int>(d, 1) : spec.signs;
  if (static_cast<int>(signs.size()) != d)
    throw std::invalid_argument("lower_bound_instance: need one sign per dimension");
  for (int s : signs)
    if (s != 1 && s != -1) throw std::invalid_argument("lower_bound_instance: signs must be +-1");

  const int D = d + 1;
  const double magnitude = lower_bound_magnitude(d, spec.K);
  Vector theta(d);
  for (int j = 0; j < d; ++j) theta(j) = signs[j] * magnitude;
  const double scale = std::sqrt(2.0);

  // Action net on the unit sphere of R^d.
  std::vector<Vector> directions;
  std::vector<std::string> action_names;
  for (int j = 0; j < d; ++j) {
    for (int sgn : {1, -1}) {
      directions.push_back(sgn * unit(d, j));
      action_names.push_back(fmt::format("axis{}{}", sgn > 0 ? '+' : '-', j));
    }
  }
  if (spec.include_diagonals) {
    if (d > 16) throw std::invalid_argument("lower_bound_instance: too many diagonals for d > 16");
    for (long mask = 0; mask < (1L << d); ++mask) {
      Vector v(d);
      std::string label = "diag";
      for (int j = 0; j < d; ++j) {
        const bool neg = (mask >> j) & 1L;
        v(j) = neg ? -1.0 : 1.0;
        label += neg ? '-' : '+';
      }
      directions.push_back(v / std::sqrt(static_cast<double>(d)));
      action_names.push_back(std::move(label));
    }
  }
  Rng net_rng(spec.net_seed, 0x6e6574);
  for (int k = 0; k < spec.extra_directions; ++k) {
    Vector v(d);
    do {
      for (int j = 0; j < d; ++j) v(j) = net_rng.normal();
    } while (v.norm() < 1e-8);
    directions.push_back(v / v.norm());
    action_names.push_back(fmt::format("rand{}", k));
  }
  action_names.push_back("null");
  const int n_actions = static_cast<int>(action_names.size());

  // States: 0 = s0, 1 = s1, i = sbar_i for i = 2..d+1.
  const int n_states = d + 2;
  std::vector<std::string> state_names{"s0", "s1"};
  for (int i = 2; i <= d + 1; ++i) state_names.push_back(fmt::format("sbar{}", i));

  RowMatrix phi = RowMatrix::Zero(n_states * n_actions, D);
  for (int a = 0; a < n_actions; ++a) {
    auto row = phi.row(a);  // s0
    if (a + 1 < n_actions) {
      row.head(d) = directions[a].transpose() / 2.0;
      row(d) = scale / 2.0;
    } else {
      row(d) = scale / 2.0;
    }
    for (int s = 1; s < n_states; ++s) phi(s * n_actions + a, s - 1) = 1.0;
  }

  const int horizon = spec.reward_steps + 1;
  std::vector<Matrix> mu;
  std::vector<Vector> thetas;
  Matrix mu0 = Matrix::Zero(n_states, D);
  mu0.row(1).head(d) = 2.0 * theta.transpose();
  mu0(1, d) = 1.0 / scale;
  for (int s = 2; s < n_states; ++s) {
    mu0.row(s).head(d) = -2.0 * theta.transpose() / d;
    mu0(s, d) = 1.0 / (scale * d);
  }
  mu.push_back(std::move(mu0));
  thetas.push_back(Vector::Zero(D));
  Matrix stay = Matrix::Zero(n_states, D);
  for (int s = 1; s < n_states; ++s) stay(s, s - 1) = 1.0;
  for (int h = 1; h < horizon; ++h) {
    mu.push_back(stay);
    thetas.push_back(unit(D, 0));
  }
  return LinearMDP(D, horizon, std::move(state_names), std::move(action_names), std::move(phi),
                   std::move(mu), std::move(thetas), 0);
}

LinearMDP axis_reach_instance(const AxisReachSpec& spec, Rng& rng) {
  const int d = spec.d;
  const int n_mid = spec.intermediate_states;
  if (d < 1 || n_mid < 1 || spec.distractors < 0)
    throw std::invalid_argument("axis_reach_instance: bad sizes");
  const int n_actions = d + spec.distractors;
  const int n_states = 1 + n_mid;
  RowMatrix phi(n_states * n_actions, d);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const int i = s * n_actions + a;
      phi.row(i) = a < d ? unit(d, a).transpose() : random_simplex(d, 1.0, rng).transpose();
    }
  }
  // Step 0: coordinate j routes mostly to one intermediate state.
  Matrix mu0 = Matrix::Zero(n_states, d);
  for (int j = 0; j < d; ++j) {
    const int target = 1 + static_cast<int>(rng.below(n_mid));
    const double keep = 0.6 + 0.4 * rng.uniform();
    Vector spill = random_simplex(n_mid, 1.0, rng);
    for (int m = 0; m < n_mid; ++m) mu0(1 + m, j) = (1.0 - keep) * spill(m);
    mu0(target, j) += keep;
  }
  Matrix mu1(n_states, d);
  for (int j = 0; j < d; ++j) mu1.col(j) = random_simplex(n_states, 1.0, rng);
  std::vector<Vector> theta;
  for (int h = 0; h < 2; ++h) {
    Vector t(d);
    for (int j = 0; j < d; ++j) t(j) = rng.uniform();
    theta.push_back(std::move(t));
  }
  return LinearMDP(d, 2, names("s", n_states), names("a", n_actions), std::move(phi),
                   {std::move(mu0), std::move(mu1)}, std::move(theta), 0);
}

}  // namespace rflin
