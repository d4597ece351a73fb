import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opinion_mf.dynamics import (
    OpinionConfig,
    SingularSystemError,
    build_influence,
    influence_sparse,
    iterate,
    iteration_cap,
    stable_iterate,
    stable_solve,
    step,
)
from opinion_mf.matfun import norm_star
from opinion_mf.rand_graph import ErModel, Graph, sample, sample_edges

EDGE = Graph(np.array([[0, 1], [1, 0]], dtype=bool))
NO_EDGE = Graph(np.zeros((2, 2), dtype=bool))
HALF = OpinionConfig.constant(2, 0.5, [0.0, 1.0])


def test_influence_examples():
    assert np.array_equal(np.asarray(build_influence(EDGE, HALF)), [[0, 0.5], [0.5, 0]])
    assert np.array_equal(np.asarray(build_influence(NO_EDGE, HALF)), 0.5 * np.eye(2))
    k3 = Graph(~np.eye(3, dtype=bool))
    H = np.asarray(build_influence(k3, OpinionConfig.constant(3, 0.5)))
    assert np.allclose(H, 0.25 * (1 - np.eye(3)))


def test_step_examples():
    H = build_influence(EDGE, HALF)
    assert np.allclose(step(H, HALF, HALF.x0), [0.5, 0.5])
    x_inf = stable_solve(H, HALF)
    assert np.allclose(step(H, HALF, x_inf), x_inf, atol=1e-15)
    cfg = OpinionConfig.constant(2, 0.7, [0.2, 0.9])
    assert np.allclose(step(build_influence(NO_EDGE, cfg), cfg, cfg.x0), cfg.x0)


def test_iterate_examples():
    H = build_influence(EDGE, HALF)
    assert np.array_equal(iterate(H, HALF, 0), HALF.x0)
    assert np.array_equal(iterate(H, HALF, 1), step(H, HALF, HALF.x0))
    assert np.allclose(iterate(H, HALF, 200), [1 / 3, 2 / 3], atol=1e-14)
    with pytest.raises(ValueError):
        iterate(H, HALF, -1)


def test_stable_solve_examples():
    assert np.allclose(stable_solve(build_influence(EDGE, HALF), HALF), [1 / 3, 2 / 3], atol=1e-15)
    cfg = OpinionConfig.constant(2, 0.6, [0.3, 0.8])
    assert np.allclose(stable_solve(build_influence(NO_EDGE, cfg), cfg), cfg.x0)
    k3 = Graph(~np.eye(3, dtype=bool))
    cfg3 = OpinionConfig.constant(3, 0.5, [0, 0, 1])
    assert np.allclose(stable_solve(build_influence(k3, cfg3), cfg3), [0.2, 0.2, 0.6], atol=1e-15)


def test_stable_iterate_examples():
    x, it = stable_iterate(build_influence(EDGE, HALF), HALF, tol=1e-10)
    assert np.allclose(x, [1 / 3, 2 / 3], atol=1e-10)
    cfg = OpinionConfig.constant(2, 0.5, [0.3, 0.8])
    x, it = stable_iterate(build_influence(NO_EDGE, cfg), cfg, tol=1e-10)
    assert np.allclose(x, cfg.x0, atol=1e-10)
    assert it <= math.ceil(math.log(1e-10 * 0.5) / math.log(0.5))


def test_iteration_cap_respected():
    for seed in range(100):
        model = ErModel(50, 0.1)
        cfg = OpinionConfig.random(50, 0.8, seed)
        H = build_influence(sample(model, seed), cfg)
        x, it = stable_iterate(H, cfg, tol=1e-10)
        assert it <= iteration_cap(0.8, 1e-10)
        assert np.abs(x - stable_solve(H, cfg)).max() <= 1e-9


def test_single_node():
    cfg = OpinionConfig.constant(1, 0.4, [0.7])
    g = Graph(np.zeros((1, 1), dtype=bool))
    assert np.allclose(stable_solve(build_influence(g, cfg), cfg), [0.7])


def test_zero_alpha_agent_is_fixed():
    cfg = OpinionConfig(np.array([0.0, 0.8, 0.8]), 0.8, np.array([0.1, 0.5, 0.9]))
    k3 = Graph(~np.eye(3, dtype=bool))
    assert stable_solve(build_influence(k3, cfg), cfg)[0] == pytest.approx(0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        OpinionConfig(np.array([0.5]), 1.0, np.array([0.5]))
    with pytest.raises(ValueError):
        OpinionConfig(np.array([0.9]), 0.8, np.array([0.5]))
    with pytest.raises(ValueError):
        OpinionConfig(np.array([0.5]), 0.8, np.array([1.5]))
    with pytest.raises(ValueError):
        OpinionConfig(np.array([0.5, 0.5]), 0.8, np.array([0.5]))
    with pytest.raises(ValueError):
        stable_solve(build_influence(EDGE, HALF), OpinionConfig.constant(3, 0.5))


def test_corrupted_matrix_is_reported_singular():
    with pytest.raises(SingularSystemError):
        stable_solve(np.eye(2), HALF)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 25), st.floats(0, 1), st.booleans(), st.floats(0.05, 0.95), st.integers(0, 10**6))
def test_influence_invariants(n, p, directed, alpha_bar, seed):
    g = sample(ErModel(n, p, directed), seed)
    cfg = OpinionConfig.random(n, alpha_bar, seed)
    H = np.asarray(build_influence(g, cfg))
    assert np.all(H >= 0)
    assert np.allclose(H.sum(axis=1), cfg.alpha, atol=1e-15)
    assert norm_star(H) <= alpha_bar
    deg = g.degrees()
    for i in range(n):
        if deg[i] == 0:
            assert H[i, i] == cfg.alpha[i]
        else:
            assert np.count_nonzero(H[i]) == (deg[i] if cfg.alpha[i] > 0 else 0)
    x1 = step(H, cfg, cfg.x0)
    assert np.all((x1 >= 0) & (x1 <= 1))
    assert np.allclose(iterate(H, cfg.with_x0(np.ones(n)), 3), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.booleans(), st.integers(0, 10**6))
def test_sparse_influence_matches_dense(n, directed, seed):
    model = ErModel(n, 0.2, directed)
    cfg = OpinionConfig.random(n, 0.9, seed)
    rows, cols = sample_edges(model, seed)
    S = influence_sparse(n, rows, cols, cfg.alpha, directed)
    D = np.asarray(build_influence(sample(model, seed), cfg))
    assert np.allclose(S.toarray(), D, atol=1e-16)
    x, _ = stable_iterate(S, cfg, tol=1e-12)
    assert np.abs(x - stable_solve(D, cfg)).max() <= 1e-11


def test_row_stochastic_solution_operator():
    for seed in range(20):
        n = 30
        cfg = OpinionConfig.random(n, 0.9, seed)
        H = np.asarray(build_influence(sample(ErModel(n, 0.15), seed), cfg))
        T = np.linalg.solve(np.eye(n) - H, np.diag(cfg.stubbornness))
        assert np.all(T >= -1e-15)
        assert np.allclose(T.sum(axis=1), 1.0, atol=1e-10)
