"""Matrix norms and power-series matrix functions with certified truncation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from ._utils import check_square


def norm_star(M) -> float:
    """Operator norm induced by the sup-norm: the largest absolute row sum."""
    if sp.issparse(M):
        if M.shape[0] != M.shape[1]:
            raise ValueError(f"M must be square, got shape {M.shape}")
        return float(np.abs(M).sum(axis=1).max()) if M.shape[0] else 0.0
    M = check_square(M)
    return float(np.abs(M).sum(axis=1).max()) if M.shape[0] else 0.0


def _check_rho(rho):
    rho = float(rho)
    if not rho > 1.0:
        raise ValueError(f"rho must be > 1, got {rho}")
    return rho


def vec_norm_inf(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.abs(v).max()) if v.size else 0.0


def vec_norm_rho(v, rho) -> float:
    rho = _check_rho(rho)
    if math.isinf(rho):
        return vec_norm_inf(v)
    v = np.abs(np.asarray(v, dtype=float))
    scale = v.max() if v.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(scale * np.sum((v / scale) ** rho) ** (1.0 / rho))


def mat_norm_rho(M, rho) -> float:
    """Entrywise norm ``(sum_ij |m_ij|**rho)**(1/rho)`` (not the induced rho-norm)."""
    return vec_norm_rho(np.asarray(M, dtype=float).ravel(), rho)


@dataclass(frozen=True)
class PowerSeries:
    """``phi(X) = sum_k coeff(k) X**k`` with radius of convergence ``radius``.

    ``coeff_abs_bound(k)`` dominates ``|coeff(k)|`` and is used for tail
    certificates. ``tail(m, r)``, when given, returns the exact value of
    ``sum_{k>m} coeff_abs_bound(k) r**k``; otherwise the tail is summed
    numerically, which assumes the bound's term ratios are eventually
    non-increasing (true for geometric and factorial-type bounds).
    ``degree`` marks polynomials, whose coefficients vanish beyond it.
    ``nonnegative`` declares every coefficient >= 0, so ``phi`` maps
    nonnegative matrices to nonnegative matrices. ``closed_form``, when
    given, evaluates ``phi`` exactly and lets samplers skip the series.
    """

    coeff: Callable[[int], float]
    radius: float
    coeff_abs_bound: Callable[[int], float]
    tail: Optional[Callable[[int, float], float]] = None
    degree: Optional[int] = None
    name: str = "series"
    nonnegative: bool = False
    closed_form: Optional[Callable] = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def tail_bound(self, m: int, r: float) -> float:
        """Upper bound on ``sum_{k>m} |coeff(k)| r**k``."""
        if r == 0.0:
            return 0.0
        if self.degree is not None and m >= self.degree:
            return 0.0
        if self.tail is not None:
            return self.tail(m, r)
        if self.degree is not None:
            return math.fsum(self.coeff_abs_bound(k) * r**k for k in range(m + 1, self.degree + 1))
        return _numeric_tail(self.coeff_abs_bound, m, r)


def _numeric_tail(bound, m, r, max_terms=100_000):
    terms = []
    k = m + 1
    prev = bound(k) * r**k
    terms.append(prev)
    for _ in range(max_terms):
        k += 1
        cur = bound(k) * r**k
        terms.append(cur)
        if prev > 0:
            ratio = cur / prev
            if ratio <= 0.5:
                # remaining terms shrink at least geometrically by `ratio`
                terms.append(cur * ratio / (1.0 - ratio))
                return math.fsum(terms)
        elif cur == 0.0:
            return math.fsum(terms)
        prev = cur
    raise ArithmeticError("tail of the coefficient bound did not settle; is r inside the radius?")


def resolvent_series() -> PowerSeries:
    """``(I - X)^{-1} = sum_k X**k``."""
    return PowerSeries(
        coeff=lambda k: 1.0,
        radius=1.0,
        coeff_abs_bound=lambda k: 1.0,
        tail=lambda m, r: r ** (m + 1) / (1.0 - r),
        name="resolvent",
        nonnegative=True,
        closed_form=lambda M: resolvent(M),
    )


def exp_series() -> PowerSeries:
    """``exp(X) = sum_k X**k / k!``."""
    return PowerSeries(
        coeff=lambda k: 1.0 / math.factorial(k),
        radius=math.inf,
        coeff_abs_bound=lambda k: 1.0 / math.factorial(k),
        name="exp",
        nonnegative=True,
    )


def monomial_series(power: int, scale: float = 1.0) -> PowerSeries:
    """``scale * X**power``."""
    if power < 0:
        raise ValueError("power must be >= 0")
    return PowerSeries(
        coeff=lambda k: scale if k == power else 0.0,
        radius=math.inf,
        coeff_abs_bound=lambda k: abs(scale) if k == power else 0.0,
        degree=power,
        name=f"monomial{power}",
        nonnegative=scale >= 0,
    )


def truncation_order(series: PowerSeries, alpha_bar: float, eps: float) -> int:
    """Smallest ``m0`` whose certified tail at ``alpha_bar`` is at most ``eps / 2``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if alpha_bar < 0:
        raise ValueError("alpha_bar must be >= 0")
    if alpha_bar >= series.radius:
        raise ValueError(f"alpha_bar={alpha_bar} is not inside the radius {series.radius}")
    if alpha_bar == 0.0:
        return 0
    if series.tail is not None and series.degree is None:
        # closed-form tails are monotone in m; bisect over a doubling bracket
        hi = 1
        while series.tail_bound(hi, alpha_bar) > eps / 2:
            hi *= 2
        lo = 0
        while lo < hi:
            mid = (lo + hi) // 2
            if series.tail_bound(mid, alpha_bar) <= eps / 2:
                hi = mid
            else:
                lo = mid + 1
        return lo
    m = 0
    while series.tail_bound(m, alpha_bar) > eps / 2:
        m += 1
    return m


def apply_series(series: PowerSeries, M, eps: float = 1e-10) -> np.ndarray:
    """Horner evaluation of ``phi(M)`` truncated so the error is at most ``eps`` in the star norm.

    ``M`` may be dense, scipy-sparse, or a dense stack ``(..., n, n)``.
    """
    if sp.issparse(M):
        r = norm_star(M)
        n = M.shape[0]
    else:
        M = np.asarray(M, dtype=float)
        if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
            raise ValueError(f"M must be square, got shape {M.shape}")
        n = M.shape[-1]
        r = float(np.abs(M).sum(axis=-1).max()) if M.size else 0.0
    if r >= series.radius:
        raise ValueError(f"norm_star(M)={r} is not inside the radius {series.radius}")
    m0 = truncation_order(series, r, eps)
    eye = np.eye(n)
    shape = (n, n) if sp.issparse(M) else M.shape
    out = np.broadcast_to(series.coeff(m0) * eye, shape).copy()
    for k in range(m0 - 1, -1, -1):
        out = (M.T @ out.T).T if sp.issparse(M) else out @ M
        out += series.coeff(k) * eye
    return out


def resolvent(M) -> np.ndarray:
    """``(I - M)^{-1}`` by a dense solve; requires ``norm_star(M) < 1``."""
    if sp.issparse(M):
        M = M.toarray()
    M = check_square(M)
    if norm_star(M) >= 1.0:
        raise ValueError("resolvent needs norm_star(M) < 1")
    n = M.shape[0]
    return np.linalg.solve(np.eye(n) - M, np.eye(n))
