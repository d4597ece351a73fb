import math

import pytest

from opinion_mf.dynamics import OpinionConfig
from opinion_mf.montecarlo import Exact
from opinion_mf.rand_graph import ErModel, RegimeRule
from opinion_mf.verify import (
    TrailSpec,
    check_inverse_degree,
    check_trails,
    cond_expect_f_given_edge,
    directed_factorization_errors,
    directed_power_gap_exact,
    distinct_path_lower_bound,
    exact_conditional_trail_expectations,
    grid_failures,
    loglog_slope,
    power_gap_trend,
    repeated_departure_bound,
    run_lemma_grid,
    successor_path_bound,
)


def _bruteforce_inverse_degree(n, p):
    return math.fsum(math.comb(n - 2, t) * p**t * (1 - p) ** (n - 2 - t) / (t + 1) for t in range(n - 1))


def test_inverse_degree_examples():
    assert cond_expect_f_given_edge(2, 0.5) == pytest.approx(1.0)
    assert cond_expect_f_given_edge(3, 0.5) == pytest.approx(0.75)
    assert cond_expect_f_given_edge(3, 0.9) == pytest.approx(0.55)
    for n in (2, 5, 17):
        for p in (0.1, 0.6):
            assert cond_expect_f_given_edge(n, p) == pytest.approx(_bruteforce_inverse_degree(n, p), rel=1e-12)


@pytest.mark.parametrize("n,p,bounds", [(2, 0.5, (1.0, 2.0)), (100, 0.1, (0.1, 1 / 9.9)), (3, 0.5, (2 / 3, 1.0))])
def test_inverse_degree_sandwich(n, p, bounds):
    upper, lower = check_inverse_degree(n, p)
    assert upper.status == "pass"
    assert lower.bound == pytest.approx(bounds[0])
    assert upper.bound == pytest.approx(bounds[1])
    assert lower.lhs >= lower.bound  # holds here even where it is only recorded


def test_repeated_departure_examples():
    prod_b, coarse = repeated_departure_bound(10, 0.5, 2, [2])
    assert prod_b == pytest.approx(0.125) and coarse == pytest.approx(0.125)
    assert repeated_departure_bound(7, 0.3, 1, [1])[0] == pytest.approx(1 / (0.3 * 6))
    for split in ([1, 1, 1], [2, 1], [3]):
        a, b = repeated_departure_bound(9, 0.4, 3, split)
        assert a <= b
    with pytest.raises(ValueError):
        repeated_departure_bound(5, 0.5, 2, [1])
    with pytest.raises(ValueError):
        repeated_departure_bound(3, 0.5, 3, [3])


def test_path_bound_examples():
    assert distinct_path_lower_bound(20, 0.5, 1) == pytest.approx((1 - 1 / math.log(20)) / (19 * 0.5))
    assert successor_path_bound(10, 0.5, 3, 3) == pytest.approx(1 / (0.125 * 343))
    assert successor_path_bound(10, 0.5, 3, 2) == pytest.approx(3 / (0.125 * 343), rel=1e-12)
    assert successor_path_bound(10, 0.5, 3, 2) == pytest.approx(0.06997, abs=1e-5)


def test_trail_spec():
    t = TrailSpec((0, 1, 0, 2))
    assert t.k == 3 and not t.has_loop_step
    assert sorted(t.departure_multiplicities()) == [1, 2]
    assert t.distinct_edges(directed=False) == 2
    assert t.distinct_edges(directed=True) == 3
    assert not t.first_k_distinct()
    assert TrailSpec((1, 1)).has_loop_step
    with pytest.raises(ValueError):
        TrailSpec((3,))


def test_conditional_trail_examples():
    cfg = OpinionConfig.constant(3, 0.5)
    und = ErModel(3, 0.5)
    r = exact_conditional_trail_expectations(und, cfg, (0, 1, 2))
    alpha_free = r.conditional / 0.25
    assert alpha_free <= repeated_departure_bound(3, 0.5, 2, [1, 1])[0]
    back = exact_conditional_trail_expectations(und, cfg, (0, 1, 0))
    assert abs(back.joint - back.meanfield) > 1e-3
    d = exact_conditional_trail_expectations(ErModel(3, 0.5, True), cfg, (0, 1, 2))
    assert d.joint == pytest.approx(d.meanfield, abs=1e-15)
    loop = exact_conditional_trail_expectations(und, cfg, (0, 0, 1))
    assert loop.conditional is None
    with pytest.raises(ValueError):
        exact_conditional_trail_expectations(und, cfg, (0, 5))


def test_undirected_backtrack_within_product_bound():
    for p in (0.3, 0.5, 0.7):
        rows = [r for r in check_trails(ErModel(4, p), 2) if r.params.endswith("trail=0-1-0")]
        assert rows and all(r.status != "fail" for r in rows)
        assert any(r.status == "pass" for r in rows if r.lemma == "repeated_departure")


def test_directed_factorization():
    for n in (2, 3, 4):
        for k in (1, 2, 3):
            errs = directed_factorization_errors(n, 0.45, k, OpinionConfig.random(n, 0.9, n + k))
            if errs.size:
                assert errs.max() <= 1e-14


def test_grid_has_no_failures():
    rows = run_lemma_grid()
    assert not grid_failures(rows)
    statuses = {r.status for r in rows}
    assert "pass" in statuses and "undefined" in statuses
    # the large-n sandwich is asserted on both sides
    big = [r for r in rows if r.params.startswith("n=1000;")]
    assert {r.status for r in big} == {"pass"}


def test_power_gap_trend_examples():
    two = power_gap_trend([2], False, RegimeRule(1.0, 0.0), lambda n: OpinionConfig.constant(n, 0.5), 2)
    assert two.rows[0][2] == pytest.approx(0.25)
    zero = power_gap_trend([3, 4], True, RegimeRule(1.0, 0.0), lambda n: OpinionConfig.constant(n, 0.5), 0)
    assert [r[2] for r in zero.rows] == [0.0, 0.0]
    with pytest.raises(ValueError):
        power_gap_trend([4, 3], True, RegimeRule(1.0), lambda n: OpinionConfig.constant(n, 0.5), 1)


def test_directed_power_gap_closed_form():
    for n, p in ((2, 0.3), (3, 0.5), (4, 0.4)):
        cfg = OpinionConfig.random(n, 0.8, n)
        trend = power_gap_trend([n], True, RegimeRule(p * n, 0.0), lambda m: cfg, 2, Exact())
        assert trend.rows[0][2] == pytest.approx(directed_power_gap_exact(n, p, cfg.alpha.max()), rel=1e-12)


def test_loglog_slope():
    ns = [10, 20, 40]
    assert loglog_slope(ns, [1 / n for n in ns]) == pytest.approx(-1.0)
    assert loglog_slope(ns, [0.0, 1.0, 2.0]) is None
