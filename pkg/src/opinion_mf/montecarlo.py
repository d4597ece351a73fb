"""Monte Carlo and exact expectations over random graphs, and mean-field gaps.

Sample ``i`` of a run with master seed ``S`` is the graph drawn with seed
``mix_seed(S, i)``. Samples are reduced in fixed-size chunks whose partial
sums are combined in chunk order, so results are bit-identical for any
worker count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from ._utils import mix_seed, ordered_fold
from .dynamics import OpinionConfig, influence_entries, influence_sparse, stable_iterate, stable_solve
from .matfun import PowerSeries, apply_series, norm_star, truncation_order, vec_norm_inf, vec_norm_rho
from .meanfield import expected_influence, meanfield_stable
from .rand_graph import ErModel, iter_enumeration, sample_edges

DENSE_LIMIT = 256
CHUNK = 32
ITERATIVE_TOL = 1e-13


@dataclass(frozen=True)
class MonteCarlo:
    samples: int
    delta: float = 1e-4
    master_seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class Exact:
    """Sum over every graph of an enumerable model."""


Estimator = Union[MonteCarlo, Exact]


@dataclass(frozen=True)
class NormSpec:
    """``rho = inf`` selects the sup-norm, any finite ``rho > 1`` the entrywise rho-norm."""

    rho: float = math.inf

    def __post_init__(self):
        if not self.rho > 1.0:
            raise ValueError(f"rho must be > 1 (or inf), got {self.rho}")

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.rho)

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        t = str(text).strip().lower()
        if t in ("inf", "linf", "infinity"):
            return cls()
        if t.startswith("rho="):
            return cls(float(t[4:]))
        raise ValueError(f"norm must be 'inf' or 'rho=R', got {text!r}")

    def label(self) -> str:
        return "inf" if self.is_inf else "rho"

    def vector(self, v) -> float:
        return vec_norm_inf(v) if self.is_inf else vec_norm_rho(v, self.rho)


def hoeffding_halfwidth(samples: int, delta: float, width: float = 1.0) -> float:
    """Two-sided Hoeffding halfwidth for the mean of ``samples`` draws in a range of ``width``."""
    return width * math.sqrt(math.log(2.0 / delta) / (2.0 * samples))


@dataclass(frozen=True, eq=False)
class EstimateResult:
    mean: np.ndarray
    samples: int
    delta: float
    ci_halfwidth: float
    master_seed: int
    wall_ms: float
    value_range: tuple = (0.0, 1.0)
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------- per-sample kernels

def _use_dense(n: int, solver: str) -> bool:
    if solver not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown solver {solver!r}")
    return solver == "dense" or (solver == "auto" and n <= DENSE_LIMIT)


def _sample_influence(model: ErModel, cfg: OpinionConfig, seed: int, dense: bool):
    rows, cols = sample_edges(model, seed)
    if dense:
        adj = np.zeros((model.n, model.n), dtype=bool)
        adj[rows, cols] = True
        if not model.directed:
            adj[cols, rows] = True
        return influence_entries(adj, cfg.alpha)
    return influence_sparse(model.n, rows, cols, cfg.alpha, model.directed)


def _stable_kernel(model, cfg, solver):
    dense = _use_dense(model.n, solver)

    def kernel(seed):
        H = _sample_influence(model, cfg, seed, dense)
        if dense:
            return stable_solve(H, cfg)
        return stable_iterate(H, cfg, ITERATIVE_TOL)[0]

    return kernel


def _power_kernel(model, cfg, k, solver):
    dense = _use_dense(model.n, solver)

    def kernel(seed):
        H = _sample_influence(model, cfg, seed, dense)
        if k == 0:
            return np.eye(model.n)
        P = H
        for _ in range(k - 1):
            P = P @ H
        return P

    return kernel


def _phi_kernel(model, cfg, series, eps, solver):
    dense = _use_dense(model.n, solver)

    def kernel(seed):
        H = _sample_influence(model, cfg, seed, dense)
        if series.closed_form is not None:
            return series.closed_form(H)
        return apply_series(series, H, eps)

    return kernel


def _accumulate(acc, v):
    """``acc + v`` in place, with ``acc`` dense and ``v`` dense or sparse."""
    if sp.issparse(v):
        v = sp.csr_matrix(v)
        v.sum_duplicates()  # cheap when already canonical, which matmul output is
        rows = np.repeat(np.arange(v.shape[0]), np.diff(v.indptr))
        acc.reshape(-1)[rows * v.shape[1] + v.indices] += v.data
    else:
        acc += v
    return acc


def _mc_reduce(kernel: Callable[[int], np.ndarray], est: MonteCarlo) -> np.ndarray:
    N = est.samples

    def chunk_sum(start):
        acc = None
        for i in range(start, min(N, start + CHUNK)):
            v = kernel(mix_seed(est.master_seed, i))
            if acc is None:
                acc = np.zeros(v.shape)
            acc = _accumulate(acc, v)
        return acc

    total = ordered_fold(chunk_sum, range(0, N, CHUNK), _accumulate)
    return total / N


def _result(mean, est: MonteCarlo, t0, value_range, **extra) -> EstimateResult:
    width = value_range[1] - value_range[0]
    return EstimateResult(
        mean=mean,
        samples=est.samples,
        delta=est.delta,
        ci_halfwidth=hoeffding_halfwidth(est.samples, est.delta, width),
        master_seed=est.master_seed,
        wall_ms=(time.perf_counter() - t0) * 1e3,
        value_range=value_range,
        extra=extra,
    )


# ---------------------------------------------------------------- stable opinions

def estimate_stable_mean(model, cfg, samples, delta=1e-4, master_seed=0, solver="auto") -> EstimateResult:
    """Monte Carlo mean of the stable opinion over ``samples`` graphs."""
    est = MonteCarlo(samples, delta, master_seed)
    t0 = time.perf_counter()
    mean = _mc_reduce(_stable_kernel(model, cfg, solver), est)
    return _result(mean, est, t0, (0.0, 1.0))


def exact_stable_mean(model: ErModel, cfg: OpinionConfig) -> np.ndarray:
    n = model.n
    total = np.zeros(n)
    b = cfg.drive
    for adj, probs in iter_enumeration(model):
        H = influence_entries(adj, cfg.alpha)
        X = np.linalg.solve(np.eye(n) - H, np.broadcast_to(b, (len(probs), n))[..., None])[..., 0]
        total += probs @ X
    return total


# ---------------------------------------------------------------- powers and series

def estimate_power_mean(model, cfg, k, samples, delta=1e-4, master_seed=0, solver="auto") -> EstimateResult:
    """Monte Carlo mean of ``H(G)**k``; entries lie in ``[0, alpha_bar**k]``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    est = MonteCarlo(samples, delta, master_seed)
    t0 = time.perf_counter()
    if k == 0:
        mean = np.eye(model.n)
    else:
        mean = _mc_reduce(_power_kernel(model, cfg, k, solver), est)
    return _result(mean, est, t0, (0.0, cfg.alpha_bar**k))


def exact_power_mean(model: ErModel, cfg: OpinionConfig, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError("k must be >= 0")
    total = np.zeros((model.n, model.n))
    for adj, probs in iter_enumeration(model):
        P = np.linalg.matrix_power(influence_entries(adj, cfg.alpha), k)
        total += np.einsum("g,gij->ij", probs, P)
    return total


def series_range(series: PowerSeries, alpha_bar: float, eps: float) -> tuple:
    """A-priori entry range of ``phi(H)`` for any influence matrix with star norm <= alpha_bar."""
    m0 = truncation_order(series, alpha_bar, eps)
    coeffs = [series.coeff(k) for k in range(m0 + 1)]
    bound = math.fsum(abs(c) * alpha_bar**k for k, c in enumerate(coeffs)) + series.tail_bound(m0, alpha_bar)
    return (0.0 if series.nonnegative else -bound, bound)


def _check_radius(series: PowerSeries, cfg: OpinionConfig):
    if not cfg.alpha_bar < series.radius:
        raise ValueError(f"alpha_bar={cfg.alpha_bar} must be below the series radius {series.radius}")


def estimate_phi_mean(model, cfg, series, eps, samples, delta=1e-4, master_seed=0, solver="auto") -> EstimateResult:
    _check_radius(series, cfg)
    est = MonteCarlo(samples, delta, master_seed)
    t0 = time.perf_counter()
    mean = _mc_reduce(_phi_kernel(model, cfg, series, eps, solver), est)
    return _result(mean, est, t0, series_range(series, cfg.alpha_bar, eps))


def exact_phi_mean(model: ErModel, cfg: OpinionConfig, series: PowerSeries, eps: float) -> np.ndarray:
    _check_radius(series, cfg)
    total = np.zeros((model.n, model.n))
    for adj, probs in iter_enumeration(model):
        total += np.einsum("g,gij->ij", probs, apply_series(series, influence_entries(adj, cfg.alpha), eps))
    return total


# ---------------------------------------------------------------- gaps

def simultaneous_halfwidth(samples, delta, entries, width=1.0) -> float:
    """Halfwidth holding for ``entries`` estimates at once (union bound)."""
    return hoeffding_halfwidth(samples, delta / entries, width)


def gap_stable(model: ErModel, cfg: OpinionConfig, norm: NormSpec = NormSpec(), estimator: Estimator = Exact(),
               solver="auto") -> tuple[float, float]:
    """``||E x(G, inf) - xbar(inf)||`` and a confidence radius for it.

    The radius comes from a union bound over the ``n`` coordinates, so with
    probability at least ``1 - delta`` the true gap lies within it. It is
    ``0`` for the exact estimator.
    """
    if isinstance(norm, str):
        norm = NormSpec.parse(norm)
    xbar = meanfield_stable(model, cfg)
    if isinstance(estimator, Exact):
        return norm.vector(exact_stable_mean(model, cfg) - xbar), 0.0
    res = estimate_stable_mean(model, cfg, estimator.samples, estimator.delta, estimator.master_seed, solver)
    hw = simultaneous_halfwidth(estimator.samples, estimator.delta, model.n)
    scale = 1.0 if norm.is_inf else model.n ** (1.0 / norm.rho)
    return norm.vector(res.mean - xbar), scale * hw


def gap_phi(model: ErModel, cfg: OpinionConfig, series: PowerSeries, eps: float = 1e-10,
            estimator: Estimator = Exact(), solver="auto") -> tuple[float, float]:
    """``||E phi(H) - phi(E H)||_*`` with a union-bound confidence radius (plus ``2 eps`` truncation)."""
    _check_radius(series, cfg)
    mf = apply_series(series, expected_influence(model, cfg), eps)
    if isinstance(estimator, Exact):
        return norm_star(exact_phi_mean(model, cfg, series, eps) - mf), 2.0 * eps
    res = estimate_phi_mean(model, cfg, series, eps, estimator.samples, estimator.delta,
                            estimator.master_seed, solver)
    lo, hi = res.value_range
    n = model.n
    hw = simultaneous_halfwidth(estimator.samples, estimator.delta, n * n, hi - lo)
    return norm_star(res.mean - mf), n * hw + 2.0 * eps


def gap_power(model: ErModel, cfg: OpinionConfig, k: int, estimator: Estimator = Exact(),
              solver="auto") -> tuple[float, float]:
    """``||E(H**k) - E(H)**k||_*`` with a union-bound confidence radius."""
    mf = np.linalg.matrix_power(expected_influence(model, cfg), k)
    if isinstance(estimator, Exact):
        return norm_star(exact_power_mean(model, cfg, k) - mf), 0.0
    res = estimate_power_mean(model, cfg, k, estimator.samples, estimator.delta, estimator.master_seed, solver)
    n = model.n
    hw = simultaneous_halfwidth(estimator.samples, estimator.delta, n * n, cfg.alpha_bar**k)
    return norm_star(res.mean - mf), n * hw
