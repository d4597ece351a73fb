import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opinion_mf.dynamics import OpinionConfig
from opinion_mf.meanfield import (
    MeanFieldSystem,
    expected_influence,
    expected_influence_oracle,
    isolation_probability,
    meanfield_stable,
    neg_binomial_moment,
    neg_binomial_moment_bruteforce,
)
from opinion_mf.rand_graph import ErModel


def test_two_node_expected_influence():
    E = expected_influence(ErModel(2, 0.5), OpinionConfig.constant(2, 0.5))
    assert np.allclose(E, 0.25)


def test_three_node_row():
    cfg = OpinionConfig(np.array([0.8, 0.1, 0.1]), 0.8, np.full(3, 0.5))
    E = expected_influence(ErModel(3, 0.5), cfg)
    assert E[0, 0] == pytest.approx(0.2)
    assert E[0, 1] == pytest.approx(0.3) and E[0, 2] == pytest.approx(0.3)


def test_complete_graph_limit():
    cfg = OpinionConfig.random(5, 0.9, 1)
    E = expected_influence(ErModel(5, 1.0), cfg)
    assert np.allclose(np.diag(E), 0)
    assert np.allclose(E[0, 1:], cfg.alpha[0] / 4)


@pytest.mark.parametrize("n,directed", [(2, False), (3, False), (3, True)])
def test_oracle_matches_closed_form(n, directed):
    for seed in range(3):
        cfg = OpinionConfig.random(n, 0.9, seed)
        model = ErModel(n, 0.37, directed)
        assert np.abs(expected_influence(model, cfg) - expected_influence_oracle(model, cfg)).max() <= 1e-12


@given(st.integers(2, 200), st.floats(0, 1), st.booleans(), st.integers(0, 1000))
def test_row_sums_are_alpha(n, p, directed, seed):
    cfg = OpinionConfig.random(n, 0.9, seed)
    E = expected_influence(ErModel(n, p, directed), cfg)
    assert np.allclose(E.sum(axis=1), cfg.alpha, atol=1e-14)
    assert np.allclose(np.diag(E), cfg.alpha * isolation_probability(n, p))


def test_meanfield_stable_examples():
    cfg = OpinionConfig.constant(2, 0.5, [0.0, 1.0])
    assert np.allclose(meanfield_stable(ErModel(2, 0.5), cfg), [0.25, 0.75], atol=1e-15)
    cfg = OpinionConfig.random(6, 0.9, 3)
    assert np.allclose(meanfield_stable(ErModel(6, 0.3), cfg.with_x0(np.ones(6))), 1.0, atol=1e-12)
    assert np.allclose(meanfield_stable(ErModel(6, 0.0), cfg), cfg.x0, atol=1e-12)


def test_trajectory_reaches_stable():
    system = MeanFieldSystem.from_model(ErModel(8, 0.3), OpinionConfig.random(8, 0.8, 4))
    assert np.allclose(system.trajectory(0), system.cfg.x0)
    assert np.allclose(system.trajectory(300), system.stable(), atol=1e-13)
    T = system.operator()
    assert np.allclose(T @ system.cfg.x0, system.stable())


def test_expected_influence_rejects_single_node():
    with pytest.raises(ValueError):
        expected_influence(ErModel(1, 0.5), OpinionConfig.constant(1, 0.5))


def test_neg_binomial_examples():
    assert neg_binomial_moment(2, 0.5, 1) == pytest.approx(7 / 12, rel=1e-12)
    assert neg_binomial_moment(1, 0.5, 2) == pytest.approx(5 / 12, rel=1e-12)
    assert neg_binomial_moment(0, 0.3, 4) == pytest.approx(0.25, rel=1e-12)
    assert neg_binomial_moment_bruteforce(1, 0.9, 1) == pytest.approx(0.55)
    assert neg_binomial_moment(7, 0.0, 3) == pytest.approx(1 / 3)
    assert neg_binomial_moment(7, 1.0, 3) == pytest.approx(1 / 10)
    with pytest.raises(ValueError):
        neg_binomial_moment(3, 0.5, 0)


def test_neg_binomial_against_bruteforce_grid():
    worst = 0.0
    for n_trials in range(26):
        for k in range(1, 7):
            for p in np.arange(1, 10) / 10:
                a = neg_binomial_moment(n_trials, float(p), k)
                b = neg_binomial_moment_bruteforce(n_trials, float(p), k)
                worst = max(worst, abs(a - b) / b)
    assert worst <= 1e-9


def test_neg_binomial_monotone():
    for p in (0.2, 0.5, 0.8):
        for n_trials in range(0, 20):
            vals = [neg_binomial_moment(n_trials, p, k) for k in range(1, 7)]
            assert all(b < a for a, b in zip(vals, vals[1:]))
        for k in range(1, 5):
            vals = [neg_binomial_moment(m, p, k) for m in range(0, 20)]
            assert all(b < a for a, b in zip(vals, vals[1:]))


def test_inverse_degree_given_edge_is_k1_moment():
    for n in (3, 10, 57):
        p = 0.3
        expected = (1 - (1 - p) ** (n - 1)) / ((n - 1) * p)
        assert neg_binomial_moment(n - 2, p, 1) == pytest.approx(expected, rel=1e-12)


def test_sandwich_on_closed_form():
    for n in (10, 100, 1000):
        for p in (2 * math.log(n) / n, 3 * math.log(n) / n, 0.9):
            value = neg_binomial_moment(n - 2, p, 1)
            assert 1 / (n * p) <= value <= 1 / ((n - 1) * p)
