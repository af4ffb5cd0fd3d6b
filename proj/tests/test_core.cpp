#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "rflin/errors.hpp"
#include "rflin/generators.hpp"
#include "rflin/instance_io.hpp"
#include "rflin/linear_mdp.hpp"
#include "rflin/oracle.hpp"

using namespace rflin;

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(7, 1), b(7, 1), c(7, 2);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng a2(7, 1);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a2.next_u64() == c.next_u64();
  CHECK(same < 3);
  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.below(5) < 5u);
  }
  CHECK(Rng(3).split(4).next_u64() == Rng(3).split(4).next_u64());
}

TEST_CASE("validate: one state, one action") {
  RowMatrix phi(1, 1);
  phi << 1.0;
  Matrix mu(1, 1);
  mu << 1.0;
  LinearMDP mdp(1, 1, {"s"}, {"a"}, phi, {mu}, {Vector::Zero(1)}, 0);
  const auto rep = validate(mdp);
  CHECK(rep.pass);
  CHECK(rep.failures.empty());
}

TEST_CASE("validate: lower-bound instance d=3, K=9") {
  LowerBoundSpec spec;
  spec.d = 3;
  spec.K = 9;
  const auto mdp = lower_bound_instance(spec);
  const auto rep = validate(mdp);
  CHECK(rep.pass);
  CHECK(rep.min_probability >= -1e-12);
  CHECK(rep.row_sum_error <= 1e-9);
  CHECK(rep.mu_norm_excess == 0.0);
  CHECK(rep.theta_norm_excess == 0.0);
}

TEST_CASE("validate: lower-bound instance with theta scaled x50 fails") {
  LowerBoundSpec spec;
  spec.d = 3;
  spec.K = 9;
  const auto base = lower_bound_instance(spec);
  std::vector<Matrix> mu = base.mu();
  // theta enters mu_0 through the s1 and sbar rows; scale those coordinates.
  mu[0].leftCols(3) *= 50.0;
  LinearMDP scaled(base.dim(), base.horizon(), base.states(), base.actions(), base.features(), mu, base.theta(),
                   base.initial_state());
  const auto rep = validate(scaled);
  CHECK_FALSE(rep.pass);
  // <theta, u> + 1/2 at u = -theta/|theta| with |theta| = 50 sqrt(3) mu.
  const double m = lower_bound_magnitude(3, 9);
  CHECK(0.5 - 50.0 * std::sqrt(3.0) * m < 0.0);
  CHECK(rep.min_probability < -1e-12);
}

TEST_CASE("step: deterministic row, binomial frequency, lower-bound reward") {
  auto mdp = group_reach_instance({2, 2});
  Rng rng(0);
  // Group states self-loop at step 0.
  for (int i = 0; i < 100; ++i) CHECK(step(mdp, 0, 1, 0, rng).second == 1);

  std::vector<Matrix> p{(Matrix(2, 2) << 0.5, 0.5, 0.5, 0.5).finished()};
  auto coin = tabular_embed(2, 1, p, {Vector::Zero(2)});
  Rng r0(0);
  int hits = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) hits += step(coin, 0, 0, 0, r0).second == 1;
  CHECK(std::abs(hits - n * 0.5) <= 3.0 * std::sqrt(n * 0.25));

  LowerBoundSpec spec;
  spec.d = 2;
  spec.K = 4;
  const auto lb = lower_bound_instance(spec);
  const int null_action = lb.num_actions() - 1;
  CHECK(lb.actions()[null_action] == "null");
  CHECK(step(lb, 0, 0, null_action, rng).first == 0.0);

  CHECK_THROWS_AS(step(mdp, 5, 0, 0, rng), std::out_of_range);
  CHECK_THROWS_AS(step(mdp, 0, 99, 0, rng), std::out_of_range);
  CHECK_THROWS_AS(step(mdp, 0, 0, -1, rng), std::out_of_range);
}

TEST_CASE("rollout: constant reward, group reach frequency, deterministic chain") {
  auto flat = testing::one_state(3, 2, 1.0);
  Rng rng(1);
  PolicyTable uniform(3, 1, 2);
  const auto traj = rollout(flat, uniform, rng);
  CHECK(traj.steps.size() == 3);
  CHECK(traj.total_reward() == 3.0);

  auto ex = group_reach_instance({2, 2});
  const auto s1 = group_states({2, 2}, 1);
  PolicyTable always0 = PolicyTable::deterministic(2, std::vector<std::vector<int>>(2, std::vector<int>(ex.num_states(), 0)));
  int in_s1 = 0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    Rng r(static_cast<std::uint64_t>(seed));
    const auto t = rollout(ex, always0, r);
    CHECK(t.steps[0].s == ex.initial_state());
    in_s1 += std::count(s1.begin(), s1.end(), t.steps[1].s) > 0;
  }
  CHECK(std::abs(in_s1 - n * 0.5) <= 3.0 * std::sqrt(n * 0.25));

  // Chain 0 -> 1 -> 2 -> 3.
  const int H = 3, S = 4;
  std::vector<Matrix> P;
  std::vector<Vector> R;
  for (int h = 0; h < H; ++h) {
    Matrix p = Matrix::Zero(S, S);
    for (int s = 0; s < S; ++s) p(s, std::min(s + 1, S - 1)) = 1.0;
    P.push_back(p);
    R.push_back(Vector::Zero(S));
  }
  auto chain = tabular_embed(S, 1, P, R);
  Rng rc(2);
  const auto tc = rollout(chain, PolicyTable(H, S, 1), rc);
  for (int h = 0; h < H; ++h) {
    CHECK(tc.steps[h].s == h);
    CHECK(tc.steps[h].s_next == h + 1);
  }
}

TEST_CASE("rollout reward is reproducible for a fixed seed") {
  Rng g(11, 1);
  auto mdp = random_linear_mdp({}, g);
  PolicyTable pi(mdp.horizon(), mdp.num_states(), mdp.num_actions());
  Rng a(5), b(5);
  CHECK(rollout(mdp, pi, a).total_reward() == rollout(mdp, pi, b).total_reward());
}

TEST_CASE("simulator counts episodes and transitions") {
  auto mdp = testing::one_state(4, 2, 0.5);
  Simulator sim(mdp);
  Rng rng(0);
  PolicyTable pi(4, 1, 2);
  for (int i = 0; i < 3; ++i) sim.rollout(pi, rng);
  CHECK(sim.episodes() == 3);
  CHECK(sim.transitions() == 12);
}

TEST_CASE("tabular_embed") {
  SUBCASE("one state, one action") {
    auto mdp = tabular_embed(1, 1, {Matrix::Ones(1, 1)}, {Vector::Zero(1)});
    CHECK(mdp.dim() == 1);
    CHECK(mdp.features()(0, 0) == 1.0);
    CHECK(mdp.mu(0)(0, 0) == 1.0);
  }
  SUBCASE("kernel is exact") {
    Rng rng(3, 1);
    auto mdp = random_tabular_mdp({3, 2, 2, 2.0}, rng);
    CHECK(mdp.dim() == 6);
    CHECK(validate(mdp).pass);
    for (int h = 0; h < 2; ++h) {
      const Matrix raw = mdp.raw_kernel(h);
      for (int p = 0; p < 6; ++p)
        for (int s = 0; s < 3; ++s) CHECK(raw(p, s) == mdp.mu(h)(s, p));
    }
  }
  SUBCASE("value matches a tabular value-iteration oracle") {
    Rng rng(4, 1);
    std::vector<Matrix> P;
    std::vector<Vector> R;
    for (int h = 0; h < 3; ++h) {
      Matrix p(6, 3);
      for (int i = 0; i < 6; ++i) {
        Vector row(3);
        for (int j = 0; j < 3; ++j) row(j) = rng.uniform() + 0.01;
        p.row(i) = row.transpose() / row.sum();
      }
      P.push_back(p);
      Vector r(6);
      for (int i = 0; i < 6; ++i) r(i) = rng.uniform();
      R.push_back(r);
    }
    auto mdp = tabular_embed(3, 2, P, R);
    const auto ours = value_iteration_exact(mdp);
    const auto ref = testing::tabular_vi(3, 2, P, R);
    for (int h = 0; h <= 3; ++h)
      for (int s = 0; s < 3; ++s) CHECK(std::abs(ours.V[h](s) - ref.V[h][s]) <= 1e-10);
  }
  SUBCASE("rejects bad tables") {
    CHECK_THROWS_AS(tabular_embed(1, 1, {Matrix::Constant(1, 1, 0.9)}, {Vector::Zero(1)}), std::invalid_argument);
    CHECK_THROWS_AS(tabular_embed(2, 1, {(Matrix(2, 2) << 1.2, -0.2, 0, 1).finished()}, {Vector::Zero(2)}),
                    std::invalid_argument);
  }
}

TEST_CASE("group reach visitation is 2^-i") {
  GroupReachSpec spec{3, 2};
  auto mdp = group_reach_instance(spec);
  CHECK(validate(mdp).pass);
  for (int i = 1; i <= 3; ++i) {
    const auto states = group_states(spec, i);
    std::vector<char> mask(mdp.num_pairs(), 0);
    for (int s : states)
      for (int a = 0; a < mdp.num_actions(); ++a) mask[mdp.pair_index(s, a)] = 1;
    CHECK(max_visitation_pairs(mdp, 1, mask) == doctest::Approx(std::ldexp(1.0, -i)).epsilon(1e-12));
  }
}

TEST_CASE("lower-bound instance") {
  SUBCASE("d=2, K=4 transition to s1") {
    LowerBoundSpec spec;
    spec.d = 2;
    spec.K = 4;
    const auto mdp = lower_bound_instance(spec);
    const double m = lower_bound_magnitude(2, 4);
    CHECK(m == doctest::Approx(std::sqrt(2.0 / 2800.0)).epsilon(1e-15));
    CHECK(m == doctest::Approx(0.02673).epsilon(1e-3));
    const int diag = mdp.action_index("diag++");
    const Matrix K0 = mdp.raw_kernel(0);
    CHECK(K0(mdp.pair_index(0, diag), 1) == doctest::Approx(std::sqrt(2.0) * m + 0.5).epsilon(1e-14));
  }
  SUBCASE("null action reaches s1 with probability 1/2") {
    for (int d : {2, 3, 5}) {
      for (int flip = 0; flip < 2; ++flip) {
        LowerBoundSpec spec;
        spec.d = d;
        spec.K = d * d;
        spec.signs.assign(d, flip ? -1 : 1);
        const auto mdp = lower_bound_instance(spec);
        const int null_action = mdp.action_index("null");
        CHECK(mdp.raw_kernel(0)(mdp.pair_index(0, null_action), 1) == doctest::Approx(0.5).epsilon(1e-15));
      }
    }
  }
  SUBCASE("optimal value") {
    for (int d : {2, 3, 5}) {
      LowerBoundSpec spec;
      spec.d = d;
      spec.K = d * d;
      Rng rng(static_cast<std::uint64_t>(d));
      for (int j = 0; j < d; ++j) spec.signs.push_back(rng.below(2) ? 1 : -1);
      const auto mdp = lower_bound_instance(spec);
      CHECK(validate(mdp).pass);
      const double expected = spec.reward_steps * (std::sqrt(d) * lower_bound_magnitude(d, d * d) + 0.5);
      CHECK(std::abs(value_iteration_exact(mdp).value() - expected) <= 1e-9);
      CHECK(lower_bound_optimal_value(spec) == doctest::Approx(expected).epsilon(1e-15));
    }
  }
  SUBCASE("norm bound on sum |mu| holds in d+1 dimensions") {
    for (int d = 2; d <= 8; ++d) {
      LowerBoundSpec spec;
      spec.d = d;
      spec.K = d * d;
      const auto mdp = lower_bound_instance(spec);
      for (int h = 0; h < mdp.horizon(); ++h)
        CHECK(mdp.mu(h).cwiseAbs().colwise().sum().norm() <= std::sqrt(d + 1.0) + 1e-12);
    }
  }
  SUBCASE("K < d^2 is rejected") {
    LowerBoundSpec spec;
    spec.d = 3;
    spec.K = 8;
    CHECK_THROWS_AS(lower_bound_instance(spec), std::invalid_argument);
  }
}

TEST_CASE("every generator validates across 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng r1(seed, 1), r2(seed, 2), r3(seed, 3);
    CHECK(validate(random_linear_mdp({}, r1)).pass);
    CHECK(validate(random_tabular_mdp({}, r2)).pass);
    CHECK(validate(axis_reach_instance({3, 2, 3}, r3)).pass);
    LowerBoundSpec spec;
    spec.d = 2 + static_cast<int>(seed % 5);
    spec.K = spec.d * spec.d;
    Rng rs(seed, 4);
    for (int j = 0; j < spec.d; ++j) spec.signs.push_back(rs.below(2) ? 1 : -1);
    spec.net_seed = seed;
    CHECK(validate(lower_bound_instance(spec)).pass);
  }
  CHECK(validate(group_reach_instance({4, 3})).pass);
}

TEST_CASE("serialize round-trip") {
  Rng rng(9, 1);
  const auto mdp = random_linear_mdp({}, rng);
  const auto back = deserialize(serialize(mdp));
  CHECK(back.dim() == mdp.dim());
  CHECK(back.horizon() == mdp.horizon());
  CHECK(back.states() == mdp.states());
  CHECK(back.actions() == mdp.actions());
  CHECK(back.initial_state() == mdp.initial_state());
  CHECK((back.features().array() == mdp.features().array()).all());
  for (int h = 0; h < mdp.horizon(); ++h) {
    CHECK((back.mu(h).array() == mdp.mu(h).array()).all());
    CHECK((back.theta(h).array() == mdp.theta(h).array()).all());
  }
  CHECK(serialize(back) == serialize(mdp));
}

TEST_CASE("deserialize diagnostics") {
  const std::string good = R"({
  "d": 1, "H": 1, "states": ["only"], "actions": ["stay"],
  "phi": [[[1.0]]],
  "mu": [[[1.0]]],
  "theta": [[0.5]],
  "initial_state": "only"
})";
  const auto mdp = deserialize(good);
  CHECK(validate(mdp).pass);
  CHECK(mdp.reward(0, 0, 0) == 0.5);

  std::string missing = good;
  missing.replace(missing.find("\"theta\": [[0.5]],"), std::string("\"theta\": [[0.5]],").size(), "");
  try {
    deserialize(missing);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("theta") != std::string::npos);
  }

  try {
    deserialize("{\n  \"d\": 1,\n  \"H\": [\n}");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }

  std::string unknown = good;
  unknown.insert(1, "\"extra\": 1,");
  CHECK_THROWS_AS(deserialize(unknown), ParseError);

  std::string short_phi = good;
  short_phi.replace(short_phi.find("[[[1.0]]]"), 9, "[[[1.0, 2.0]]]");
  try {
    deserialize(short_phi);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("phi[0][0]") != std::string::npos);
  }
}

TEST_CASE("policy table rows") {
  PolicyTable pi(2, 2, 3);
  CHECK(pi.max_row_error() <= 1e-12);
  pi.set_action(0, 1, 2);
  CHECK(pi.deterministic_action(0, 1) == 2);
  CHECK_FALSE(pi.deterministic_action(0, 0).has_value());
  const double bad[3] = {0.5, 0.6, 0.0};
  CHECK_THROWS_AS(pi.set_row(1, 0, bad), ContractViolation);
}
