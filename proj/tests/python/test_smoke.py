import math

import numpy as np
import pytest

import rflin


def test_random_instance_is_valid():
    mdp = rflin.random_linear_mdp(dim=4, horizon=3, num_states=6, num_actions=3, seed=1)
    assert mdp.dim == 4
    assert rflin.validate(mdp).passed
    k = mdp.kernel(0)
    assert k.shape == (18, 6)
    assert np.allclose(k.sum(axis=1), 1.0)


def test_serialize_round_trip():
    mdp = rflin.random_tabular_mdp(seed=2)
    back = rflin.deserialize(rflin.serialize(mdp))
    assert np.allclose(back.features, mdp.features)
    assert np.allclose(back.mu(1), mdp.mu(1))


def test_bad_document_raises():
    with pytest.raises(rflin.ParseError):
        rflin.deserialize("{}")


def test_beta_closed_form():
    expected = 1.0 * math.sqrt(math.log(2) + math.log(10))
    assert rflin.beta(1, 1, 1, 0.1, 1.0) == pytest.approx(expected, rel=1e-12)


def test_precision_matrix_matches_dense_inverse():
    pm = rflin.PrecisionMatrix(3, 1.0)
    rng = np.random.default_rng(0)
    lam = np.eye(3)
    for _ in range(20):
        v = rng.normal(size=3)
        v /= 2.0 * np.linalg.norm(v)
        pm.update(v)
        lam += np.outer(v, v)
    assert np.allclose(pm.inv, np.linalg.inv(lam), atol=1e-10)
    x = rng.normal(size=3)
    assert pm.quad_form(x) == pytest.approx(x @ np.linalg.solve(lam, x), rel=1e-10)


def test_explore_then_plan():
    mdp = rflin.random_linear_mdp(seed=3)
    ds = rflin.explore(mdp, rflin.PlanConfig(), 0)
    assert ds.total_episodes > 0
    reward = rflin.random_reward(mdp, 0)
    result = rflin.plan(ds, reward)
    gap = rflin.suboptimality(mdp, result.policy, reward)
    assert 0.0 <= gap <= mdp.horizon
    assert 0.0 <= rflin.optimism_fraction(mdp, result, reward) <= 1.0


def test_group_reach_uniform_value():
    mdp = rflin.group_reach_instance(2, 2)
    v, _, _ = rflin.value_iteration(mdp)
    assert v >= 0.0


def test_run_experiment_csv():
    cfg = '{"version": 1, "instance": {"generator": "tabular", "num_states": 3, "num_actions": 2, "horizon": 2}, "seeds": [0], "num_reward_functions": 2}'
    text = rflin.run_experiment(cfg)
    lines = text.strip().splitlines()
    assert len(lines) == 2


def test_config_error():
    with pytest.raises(rflin.ConfigError):
        rflin.run_experiment('{"version": 1, "epsilom": 0.1}')
