#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "rflin/errors.hpp"
#include "rflin/exploration.hpp"
#include "rflin/generators.hpp"
#include "rflin/oracle.hpp"
#include "rflin/planner.hpp"

using namespace rflin;

namespace {

Vector e(int d, int j) {
  Vector v = Vector::Zero(d);
  v(j) = 1.0;
  return v;
}

std::vector<char> level_mask(const LinearMDP& mdp, const GoalSetChain& chain, int level) {
  std::vector<char> mask(mdp.num_pairs(), 0);
  for (int p = 0; p < mdp.num_pairs(); ++p)
    mask[p] = chain.level_of(mdp.features().row(p).transpose()) == level;
  return mask;
}

}  // namespace

TEST_CASE("exploration_reward examples") {
  PrecisionMatrix id(2, 1.0);
  CHECK(exploration_reward(e(2, 0), id, 1.0, false) == 0.0);
  CHECK(exploration_reward(e(2, 0), id, 1.0, true) == 1.0);
  PrecisionMatrix pm(2, 1.0);
  pm.add_gram((Matrix(2, 2) << 3.0, 0.0, 0.0, 0.0).finished(), 3);
  CHECK(pm.quad_form(e(2, 0)) == doctest::Approx(0.25));
  CHECK(exploration_reward(e(2, 0), pm, 0.1, true) == 1.0);
  CHECK(exploration_reward(e(2, 0), pm, 0.5, true) == doctest::Approx(0.5));
  CHECK(exploration_reward_from_quad(0.0, 0.3, true) == 0.0);
}

TEST_CASE("goal set chain levels") {
  GoalSetChain chain;
  CHECK(chain.level_of(e(2, 0)) == 1);
  CHECK(chain.in_remainder(e(2, 0)));
  Matrix inv1 = Matrix::Identity(2, 2);
  inv1(0, 0) = 0.1;
  chain.push({inv1, 0.2});
  chain.push({(Matrix(2, 2) << 1.0, 0.0, 0.0, 0.2).finished(), 0.3});
  CHECK(chain.level_of(e(2, 0)) == 1);
  CHECK(chain.level_of(e(2, 1)) == 2);
  CHECK(chain.level_of(Vector::Constant(2, 0.0)) == 1);
  chain.push({Matrix::Identity(2, 2), 0.01});
  CHECK(chain.level_of(Vector::Constant(2, 1.0 / std::sqrt(2.0))) == 4);
  CHECK(chain.level_of((Vector(2) << 0.1, 0.99).finished()) == 2);
  CHECK(chain.level_of((Vector(2) << 0.05, 0.0).finished()) == 1);
}

TEST_CASE("k_schedule") {
  RegMinSpec tiny;
  tiny.C1 = tiny.C2 = 1e-12;
  const auto K1 = k_schedule(1, 0.5, tiny, 1, 0.1, 2, 1, 1.0, 1.0);
  CHECK(K1 == 1143);
  const double raw = k_schedule_raw(1, 0.5, tiny, 1, 0.1, 2, 1, 1.0);
  CHECK(raw == doctest::Approx(192.0 * std::log(384.0)).epsilon(1e-12));

  CHECK_THROWS_AS(k_schedule(1, 0.5, tiny, 1, 0.1, 2, 1, 0.0, 1.0), std::invalid_argument);

  const auto force = RegMinSpec::force(3, 2, 0.1);
  CHECK(force.C1 == doctest::Approx(81.0 * 8.0 * std::log(std::exp(1.0) + std::sqrt(3.0) / 0.1)));
  CHECK(force.C2 == doctest::Approx(81.0 * 8.0 * std::pow(std::log(std::exp(1.0) + std::sqrt(3.0) / 0.1), 1.5)));
  CHECK(force.p1 == 3.0);
  CHECK(force.p2 == 3.5);

  for (const RegMinSpec& spec : {tiny, RegMinSpec::lsvi_standin(), force}) {
    std::int64_t last = 0;
    double last_raw = 0.0;
    for (int i = 1; i <= 8; ++i) {
      const auto k = k_schedule(i, 0.05, spec, 8, 0.05, 4, 3, 1.0, 1.0);
      const double r = k_schedule_raw(i, 0.05, spec, 8, 0.05, 4, 3, 1.0);
      CHECK(k >= last);
      CHECK(r >= last_raw);
      last = k;
      last_raw = r;
    }
  }
  CHECK(k_schedule(3, 0.05, force, 4, 0.1, 4, 3, 0.01, 1.0, 2000) == 2000);
  CHECK(k_schedule(3, 0.05, force, 4, 0.1, 4, 3, 0.01, 1.0, 0) == 0);
}

TEST_CASE("egs with K = 0 returns the lambda gamma_sq ball") {
  auto mdp = testing::one_state(1, 2, 0.0);
  Simulator sim(mdp);
  Rng rng(0);
  const double lambda = 2.0, g = 0.3;
  auto res = egs(sim, GoalSetChain{}, 0, 0, g, lambda, 0.1, RegMinConfig{}, rng);
  CHECK(res.data.empty());
  CHECK(sim.episodes() == 0);
  GoalSetChain chain;
  chain.push(res.level);
  const double r = std::sqrt(lambda * g);
  CHECK(chain.level_of(e(2, 0) * (r - 1e-9)) == 1);
  CHECK(chain.level_of(e(2, 1) * (r + 1e-6)) == 2);
  CHECK(chain.level_of((Vector(2) << 0.6, 0.5).finished() * (r / std::sqrt(0.61)) * 0.999) == 1);
}

TEST_CASE("e1 enters the level after 1/gamma_sq - 1 visits") {
  auto mdp = testing::one_state(1, 1, 0.0);
  const double g = 0.25;  // needs K >= 3
  for (std::int64_t K : {1, 2, 3, 4, 10}) {
    Simulator sim(mdp);
    Rng rng(1);
    auto res = egs(sim, GoalSetChain{}, 0, K, g, 1.0, 0.1, RegMinConfig{}, rng);
    GoalSetChain chain;
    chain.push(res.level);
    CHECK((chain.level_of(e(1, 0)) == 1) == (K >= 3));
    CHECK(res.data.size() == static_cast<std::size_t>(K));
    CHECK(sim.episodes() == K);
  }
}

TEST_CASE("egs dataset has K records at step h") {
  Rng g(5, 1);
  const auto mdp = random_linear_mdp({}, g);
  Simulator sim(mdp);
  Rng rng(5, 2);
  auto res = egs(sim, GoalSetChain{}, 2, 77, 0.1, 1.0, 0.1, RegMinConfig{}, rng);
  CHECK(res.data.size() == 77);
  CHECK(sim.episodes() == 77);
  PrecisionMatrix replay(mdp.dim(), 1.0);
  for (const auto& rec : res.data) {
    CHECK(rec.h == 2);
    CHECK((rec.feature.array() == mdp.feature(rec.s, rec.a).array()).all());
    replay.update(rec.feature);
  }
  CHECK((replay.inv() - res.pm.inv()).norm() <= 1e-10);
  CHECK(res.increasing_reward_warnings == 0);
}

TEST_CASE("optimistic LSVI examples") {
  SUBCASE("zero reward: bonus-greedy with ties to the lowest action") {
    auto mdp = testing::one_state(2, 3, 0.0);
    Simulator sim(mdp);
    OptimisticLsvi learner(mdp, 1, 0.5, false);
    Rng rng(0);
    const auto t0 = learner.episode(sim, [](int) { return 0.0; }, rng);
    CHECK(t0.steps[0].a == 0);
    CHECK(t0.steps[1].a == 0);
    // After one visit to action 0 its bonus shrinks; the next episode tries action 1.
    const auto t1 = learner.episode(sim, [](int) { return 0.0; }, rng);
    CHECK(t1.steps[0].a == 1);
  }
  SUBCASE("single state, reward 1 for one action") {
    auto mdp = testing::one_state(3, 3, 0.0);
    Simulator sim(mdp);
    OptimisticLsvi learner(mdp, 2, 0.1, true);
    Rng rng(1);
    for (int k = 0; k < 30; ++k) {
      const auto t = learner.episode(sim, [](int p) { return p == 2 ? 1.0 : 0.0; }, rng);
      if (k >= 2) CHECK(t.steps[2].a == 2);
    }
    CHECK(learner.replans() < 30);
  }
  SUBCASE("reward outside [0,1]") {
    auto mdp = testing::one_state(1, 2, 0.0);
    Simulator sim(mdp);
    OptimisticLsvi learner(mdp, 0, 0.1);
    Rng rng(2);
    CHECK_THROWS_AS(learner.episode(sim, [](int) { return 1.5; }, rng), ContractViolation);
    OptimisticLsvi other(mdp, 0, 0.1);
    CHECK_THROWS_AS(other.episode(sim, [](int) { return -0.01; }, rng), ContractViolation);
    OptimisticLsvi edge(mdp, 0, 0.1);
    CHECK_NOTHROW(edge.episode(sim, [](int) { return 1.0 + 5e-10; }, rng));
  }
  SUBCASE("non-increasing rewards are accepted, increasing ones are counted") {
    auto mdp = testing::one_state(1, 2, 0.0);
    Simulator sim(mdp);
    Rng rng(3);
    OptimisticLsvi down(mdp, 0, 0.1, false);
    for (int k = 0; k < 10; ++k) down.episode(sim, [k](int) { return 1.0 / (1 + k); }, rng);
    CHECK(down.increasing_reward_warnings() == 0);
    OptimisticLsvi up(mdp, 0, 0.1, false);
    for (int k = 0; k < 10; ++k) up.episode(sim, [k](int) { return k / 10.0; }, rng);
    CHECK(up.increasing_reward_warnings() > 0);
  }
  SUBCASE("optimistic values stay in [0,1]") {
    Rng g(8, 1);
    const auto mdp = random_linear_mdp({}, g);
    Simulator sim(mdp);
    OptimisticLsvi learner(mdp, 2, 2.0, false);
    Rng rng(8, 2);
    for (int k = 0; k < 50; ++k) learner.episode(sim, [](int p) { return (p % 3) / 2.0; }, rng);
    for (int t = 0; t <= 2; ++t) {
      CHECK(learner.q(t).minCoeff() >= 0.0);
      CHECK(learner.q(t).maxCoeff() <= 1.0);
    }
  }
}

TEST_CASE("cover_traj on a single-state MDP") {
  auto mdp = testing::one_state(1, 1, 0.0);
  Simulator sim(mdp);
  Rng rng(0);
  ToleranceSchedule sched;
  sched.gamma_sq = {0.9};
  sched.k_scale = 0.01;
  sched.k_cap = 5;
  const auto part = cover_traj(sim, 0, 0.1, sched, RegMinConfig{}, rng);
  REQUIRE(part.levels.size() == 1);
  CHECK(part.levels[0].K == 5);
  CHECK(part.level_of(e(1, 0)) == 1);
  CHECK(quad_form(part.chain.level(1).inv, e(1, 0)) == doctest::Approx(1.0 / 6.0));
  CHECK(part.episodes() == sim.episodes());
}

TEST_CASE("cover_traj partition properties") {
  Rng g(12, 1);
  const auto mdp = random_tabular_mdp({}, g);
  Simulator sim(mdp);
  Rng rng(12, 2);
  ToleranceSchedule sched;
  sched.gamma_sq.assign(3, 0.1);
  sched.k_scale = 0.01;
  sched.k_cap = 300;
  const auto part = cover_traj(sim, 1, 0.1, sched, RegMinConfig{}, rng);
  CHECK(part.episodes() == sim.episodes());
  for (std::size_t i = 0; i < part.levels.size(); ++i) {
    CHECK(part.levels[i].data.size() == static_cast<std::size_t>(part.levels[i].K));
    CHECK(part.levels[i].pm.lambda() == 1.0);
  }
  for (int p = 0; p < mdp.num_pairs(); ++p) {
    const Vector phi = mdp.features().row(p).transpose();
    const int lvl = part.level_of(phi);
    CHECK(lvl >= 1);
    CHECK(lvl <= 4);
    if (lvl <= 3) CHECK(quad_form(part.chain.level(lvl).inv, phi) <= part.chain.level(lvl).gamma_sq);
    for (int j = 1; j < lvl; ++j) CHECK(quad_form(part.chain.level(j).inv, phi) > part.chain.level(j).gamma_sq);
  }
  CHECK(part.increasing_reward_warnings == 0);
}

TEST_CASE("cover_traj visitation bounds on the group-reach instance") {
  GroupReachSpec spec{3, 2};
  const auto mdp = group_reach_instance(spec);
  const int m = 3;
  int good = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Simulator sim(mdp);
    Rng rng(seed, 2);
    ToleranceSchedule sched;
    sched.gamma_sq.assign(m, 0.05);
    sched.k_scale = 0.01;
    sched.k_cap = 2000;
    const auto part = cover_traj(sim, 1, 0.1, sched, RegMinConfig{}, rng);
    bool ok = true;
    for (int i = 1; i <= m; ++i)
      ok = ok && max_visitation_pairs(mdp, 1, level_mask(mdp, part.chain, i)) <= std::ldexp(1.0, -i + 1);
    ok = ok && max_visitation_pairs(mdp, 1, level_mask(mdp, part.chain, m + 1)) <= std::ldexp(1.0, -m);
    good += ok;
  }
  CHECK(good >= 18);
}
