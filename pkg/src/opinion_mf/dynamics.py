"""Opinion recursion ``x(t+1) = H x(t) + B x(0)`` on a fixed graph.

Row ``i`` of the influence matrix ``H`` spreads ``alpha_i`` uniformly over the
(out-)neighbours of ``i``; an isolated node keeps ``alpha_i`` on its diagonal.
``B = diag(1 - alpha)`` weights each agent's intrinsic opinion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ._utils import check_in_unit_interval, check_vector, make_rng
from .rand_graph import Graph


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when ``I - H`` is numerically singular (corrupted input)."""


@dataclass(frozen=True, eq=False)
class OpinionConfig:
    """Condescendence values ``alpha`` bounded by ``alpha_bar`` and initial opinions ``x0``."""

    alpha: np.ndarray
    alpha_bar: float
    x0: np.ndarray

    def __post_init__(self):
        alpha = check_vector(self.alpha, name="alpha").copy()
        x0 = check_vector(self.x0, n=alpha.shape[0], name="x0").copy()
        alpha_bar = float(self.alpha_bar)
        if not 0.0 < alpha_bar < 1.0:
            raise ValueError(f"alpha_bar must lie in (0, 1), got {alpha_bar}")
        if np.any(alpha < 0.0) or np.any(alpha > alpha_bar):
            raise ValueError("alpha entries must lie in [0, alpha_bar]")
        check_in_unit_interval(x0, "x0")
        alpha.setflags(write=False)
        x0.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "alpha_bar", alpha_bar)

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def stubbornness(self) -> np.ndarray:
        """Diagonal of ``B``."""
        return 1.0 - self.alpha

    @property
    def drive(self) -> np.ndarray:
        """The constant input ``B x(0)``."""
        return (1.0 - self.alpha) * self.x0

    def with_x0(self, x0) -> "OpinionConfig":
        return OpinionConfig(self.alpha, self.alpha_bar, x0)

    @classmethod
    def constant(cls, n, alpha, x0=None, alpha_bar=None) -> "OpinionConfig":
        """Every agent gets the same ``alpha``; ``alpha_bar`` defaults to ``alpha``."""
        x0 = np.full(n, 0.5) if x0 is None else x0
        return cls(np.full(n, float(alpha)), alpha if alpha_bar is None else alpha_bar, x0)

    @classmethod
    def random(cls, n, alpha_bar, seed, alpha=None) -> "OpinionConfig":
        """``x0`` i.i.d. uniform on [0, 1]; ``alpha`` i.i.d. uniform on [0, alpha_bar] unless given."""
        rng = make_rng(seed)
        x0 = rng.random(n)
        if alpha is None:
            a = alpha_bar * rng.random(n)
        else:
            a = np.full(n, float(alpha))
        return cls(a, alpha_bar, x0)


@dataclass(frozen=True, eq=False)
class InfluenceMatrix:
    entries: np.ndarray
    alpha_bar: float

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __matmul__(self, other):
        return self.entries @ other


def influence_entries(adj, alpha) -> np.ndarray:
    """Dense ``H`` for one adjacency ``(n, n)`` or a stack ``(..., n, n)``.

    Works row-wise, so it covers both undirected and directed adjacency.
    """
    adj = np.asarray(adj, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    deg = adj.sum(axis=-1)
    isolated = deg == 0
    scale = np.divide(alpha, deg, out=np.zeros(np.broadcast(alpha, deg).shape), where=~isolated)
    H = adj * scale[..., :, None]
    n = adj.shape[-1]
    idx = np.arange(n)
    H[..., idx, idx] += np.where(isolated, alpha, 0.0)
    return H


def _check_dims(cfg: OpinionConfig, n: int):
    if cfg.n != n:
        raise ValueError(f"config has dimension {cfg.n} but the graph has {n} nodes")


def build_influence(g: Graph, cfg: OpinionConfig) -> InfluenceMatrix:
    _check_dims(cfg, g.n)
    H = influence_entries(g.adj, cfg.alpha)
    H.setflags(write=False)
    return InfluenceMatrix(H, cfg.alpha_bar)


def influence_sparse(n, rows, cols, alpha, directed) -> sp.csr_matrix:
    """Sparse ``H`` straight from an edge list (undirected edges listed once)."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if not directed:
        rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
    alpha = np.asarray(alpha, dtype=float)
    deg = np.bincount(rows, minlength=n)
    isolated = np.flatnonzero(deg == 0)
    data = alpha[rows] / deg[rows]
    rows = np.concatenate([rows, isolated])
    cols = np.concatenate([cols, isolated])
    data = np.concatenate([data, alpha[isolated]])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def _as_operator(H):
    return H.entries if isinstance(H, InfluenceMatrix) else H


def step(H, cfg: OpinionConfig, x) -> np.ndarray:
    M = _as_operator(H)
    _check_dims(cfg, M.shape[0])
    x = check_vector(x, n=cfg.n, name="x")
    return M @ x + cfg.drive


def iterate(H, cfg: OpinionConfig, t: int) -> np.ndarray:
    """``x(t)`` by ``t`` applications of :func:`step`."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    M = _as_operator(H)
    _check_dims(cfg, M.shape[0])
    x = np.array(cfg.x0, dtype=float)
    b = cfg.drive
    for _ in range(t):
        x = M @ x + b
    return x


def stable_solve(H, cfg: OpinionConfig) -> np.ndarray:
    """Solve ``(I - H) x = B x(0)`` by partial-pivot LU."""
    M = np.asarray(_as_operator(H), dtype=float)
    n = M.shape[0]
    _check_dims(cfg, n)
    A = np.eye(n) - M
    b = cfg.drive
    try:
        with warnings.catch_warnings():
            # a zero pivot is reported below as SingularSystemError
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    except ValueError as exc:
        raise SingularSystemError(str(exc)) from exc
    if np.any(np.abs(np.diag(lu)) <= np.finfo(float).eps * max(1.0, np.abs(A).max())):
        raise SingularSystemError("I - H is numerically singular")
    x = scipy.linalg.lu_solve((lu, piv), b)
    if np.abs(A @ x - b).max() > 1e-12 * n:
        raise SingularSystemError("residual of the stable solve exceeds 1e-12 * n")
    return x


def iteration_cap(alpha_bar: float, tol: float) -> int:
    """Steps after which the fixed-point iteration is certain to have stopped."""
    return math.ceil(math.log(tol * (1.0 - alpha_bar)) / math.log(alpha_bar)) + 1


def stable_iterate(H, cfg: OpinionConfig, tol: float = 1e-10) -> tuple[np.ndarray, int]:
    """Fixed-point iteration stopped once ``|x(t+1) - x(t)|_inf <= tol (1 - alpha_bar)``.

    Accepts a dense or scipy-sparse ``H``. The stopping rule leaves the
    iterate within ``tol * alpha_bar`` of the fixed point.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    M = _as_operator(H)
    _check_dims(cfg, M.shape[0])
    threshold = tol * (1.0 - cfg.alpha_bar)
    cap = iteration_cap(cfg.alpha_bar, tol)
    b = cfg.drive
    x = np.array(cfg.x0, dtype=float)
    for it in range(1, cap + 1):
        nxt = M @ x + b
        done = np.abs(nxt - x).max() <= threshold
        x = nxt
        if done:
            return x, it
    return x, cap
