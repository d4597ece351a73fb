"""Executable checks of the degree and trail bounds behind the mean-field gap.

Conditional expectations are computed exactly by summing over every graph of a
tiny model. The checks that only hold for large ``n`` are asserted above a
threshold ``n0`` (and inside their edge-probability regime) and merely
recorded below it.

Bound names used in reports:

``inverse_degree_upper`` / ``inverse_degree_lower``
    ``1/(n p) <= E(1/deg(i) | i~j) <= 1/((n-1) p)``.
``repeated_departure``
    ``E(prod_r 1/deg(c_r) | c is a path) <= prod_r m_r! / (p (n-k))**k``
    where ``m_r`` counts how often a node departs along the trail.
``distinct_path_lower``
    ``E(prod_r 1/deg(c_r) | c is a path) >= (1 - 1/log n)**k / ((n-k) p)**k``
    for trails whose first ``k`` nodes are distinct.
``successor_path``
    ``k**(k - |c|) / (p (n-k))**k`` as an upper bound in the directed model,
    ``|c|`` being the number of distinct arcs of the trail.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import OpinionConfig, influence_entries
from .meanfield import expected_influence
from .montecarlo import Estimator, Exact, gap_power
from .rand_graph import ErModel, RegimeRule, iter_enumeration

DEFAULT_N0 = 10


@dataclass(frozen=True)
class TrailSpec:
    """An ordered node sequence ``c_1 .. c_{k+1}``; repeats are allowed."""

    nodes: tuple

    def __post_init__(self):
        nodes = tuple(int(v) for v in self.nodes)
        if len(nodes) < 2:
            raise ValueError("a trail needs at least two nodes")
        if min(nodes) < 0:
            raise ValueError("trail nodes must be non-negative")
        object.__setattr__(self, "nodes", nodes)

    @property
    def k(self) -> int:
        return len(self.nodes) - 1

    @property
    def steps(self) -> list:
        return list(zip(self.nodes[:-1], self.nodes[1:]))

    @property
    def has_loop_step(self) -> bool:
        """True when two consecutive nodes coincide; such a trail is never a path."""
        return any(a == b for a, b in self.steps)

    @property
    def departures(self) -> tuple:
        return self.nodes[:-1]

    def departure_multiplicities(self) -> list:
        counts = {}
        for v in self.departures:
            counts[v] = counts.get(v, 0) + 1
        return list(counts.values())

    def first_k_distinct(self) -> bool:
        return len(set(self.departures)) == self.k

    def distinct_edges(self, directed: bool) -> int:
        if directed:
            return len(set(self.steps))
        return len({(min(a, b), max(a, b)) for a, b in self.steps})

    def visited(self) -> frozenset:
        return frozenset(self.nodes)


@dataclass(frozen=True)
class LemmaCheck:
    lemma: str
    params: str
    lhs: float
    bound: float
    margin: float
    status: str  # pass | fail | recorded | undefined

    def as_row(self) -> dict:
        return {
            "lemma": self.lemma,
            "params": self.params,
            "lhs": self.lhs,
            "bound": self.bound,
            "margin": self.margin,
            "status": self.status,
        }


def _check(name, params, lhs, bound, upper: bool, asserted: bool, tol=1e-12) -> LemmaCheck:
    margin = bound - lhs if upper else lhs - bound
    if not asserted:
        status = "recorded"
    else:
        status = "pass" if margin >= -tol * max(1.0, abs(bound)) else "fail"
    return LemmaCheck(name, params, float(lhs), float(bound), float(margin), status)


# ------------------------------------------------------------------ closed forms

def cond_expect_f_given_edge(n: int, p: float) -> float:
    """``E(1/deg(i) | i ~ j)``, i.e. ``E(1 / (1 + Bin(n-2, p)))``."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return -math.expm1((n - 1) * math.log1p(-p)) / ((n - 1) * p)


def check_inverse_degree(n: int, p: float, n0: int = DEFAULT_N0) -> list:
    """The sandwich ``1/(np) <= E(1/deg(i) | i~j) <= 1/((n-1)p)``.

    The upper side is always asserted. The lower side needs the
    connectivity regime, so it is asserted only for ``n >= n0`` and
    ``p >= 2 log(n) / n``.
    """
    value = cond_expect_f_given_edge(n, p)
    params = f"n={n};p={p:.6g}"
    in_regime = n >= n0 and p >= 2.0 * math.log(n) / n
    return [
        _check("inverse_degree_upper", params, value, 1.0 / ((n - 1) * p), True, True),
        _check("inverse_degree_lower", params, value, 1.0 / (n * p), False, in_regime),
    ]


def _check_k(n, k):
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")


def repeated_departure_bound(n: int, p: float, k: int, multiplicities) -> tuple[float, float]:
    """``(product bound, coarse bound)`` for ``E(prod 1/deg | path)``.

    The product bound is ``prod m_r! / (p (n-k))**k``; the coarse one
    replaces the product of factorials with ``k!``.
    """
    _check_k(n, k)
    m = [int(v) for v in multiplicities]
    if sum(m) != k or min(m) < 1:
        raise ValueError(f"multiplicities {m} must be positive and sum to k={k}")
    scale = (p * (n - k)) ** k
    return math.prod(math.factorial(v) for v in m) / scale, math.factorial(k) / scale


def distinct_path_lower_bound(n: int, p: float, k: int) -> float:
    _check_k(n, k)
    if n < 3:
        raise ValueError("the lower bound uses log(n) - 1 > 0 and needs n >= 3")
    return (1.0 - 1.0 / math.log(n)) ** k / ((n - k) * p) ** k


def successor_path_bound(n: int, p: float, k: int, path_len: int) -> float:
    _check_k(n, k)
    if not 1 <= path_len <= k:
        raise ValueError(f"path_len must lie in [1, k], got {path_len}")
    return float(k) ** (k - path_len) / (p ** k * (n - k) ** k)


def lower_bound_applies(n: int, p: float, k: int, n0: int = DEFAULT_N0) -> bool:
    """Regime in which :func:`distinct_path_lower_bound` is asserted."""
    return n >= n0 and p >= math.factorial(k) * math.log(n) / (n - k)


# ------------------------------------------------------------------ enumeration

@dataclass(frozen=True, eq=False)
class _GraphSpace:
    adj: np.ndarray
    probs: np.ndarray
    inv_deg: np.ndarray
    directed: bool

    @classmethod
    def of(cls, model: ErModel) -> "_GraphSpace":
        adjs, probs = [], []
        for adj, pr in iter_enumeration(model):
            adjs.append(adj)
            probs.append(pr)
        adj = np.concatenate(adjs)
        deg = adj.sum(axis=-1)
        inv = np.divide(1.0, deg, out=np.zeros(deg.shape), where=deg > 0)
        return cls(adj, np.concatenate(probs), inv, model.directed)

    def path_mask(self, trail: TrailSpec) -> np.ndarray:
        mask = np.ones(len(self.probs), dtype=bool)
        for a, b in trail.steps:
            mask &= self.adj[:, a, b]
        return mask

    def conditional_inverse_degree(self, trail: TrailSpec) -> Optional[float]:
        """``E(prod_r 1/deg(c_r) | c is a path)``, or ``None`` when the event is null."""
        mask = self.path_mask(trail)
        mass = self.probs[mask].sum()
        if mass == 0.0:
            return None
        prod = np.prod(self.inv_deg[mask][:, list(trail.departures)], axis=1)
        return float(self.probs[mask] @ prod / mass)


def _check_trail(model: ErModel, trail: TrailSpec):
    if max(trail.nodes) >= model.n:
        raise ValueError(f"trail {trail.nodes} has nodes outside [0, {model.n})")


@dataclass(frozen=True)
class TrailExpectations:
    conditional: Optional[float]  # E(H_c | c is a path); None when undefined
    joint: float  # E(H_c)
    meanfield: float  # prod_r E(H)_{c_r c_{r+1}}


def exact_conditional_trail_expectations(model: ErModel, cfg: OpinionConfig, trail) -> TrailExpectations:
    """``E(H_c | c is a path)``, ``E(H_c)`` and ``E(H)_c`` by full enumeration.

    ``H_c`` is the product of the influence entries along the trail.
    """
    trail = trail if isinstance(trail, TrailSpec) else TrailSpec(tuple(trail))
    _check_trail(model, trail)
    if cfg.n != model.n:
        raise ValueError(f"config has dimension {cfg.n}, model has n={model.n}")
    space = _GraphSpace.of(model)
    H = influence_entries(space.adj, cfg.alpha)
    hc = np.ones(len(space.probs))
    for a, b in trail.steps:
        hc = hc * H[:, a, b]
    EH = expected_influence(model, cfg)
    mf = math.prod(EH[a, b] for a, b in trail.steps)
    mask = space.path_mask(trail)
    mass = space.probs[mask].sum()
    cond = float(space.probs[mask] @ hc[mask] / mass) if mass > 0 else None
    return TrailExpectations(cond, float(space.probs @ hc), float(mf))


def all_trails(n: int, k: int):
    for nodes in itertools.product(range(n), repeat=k + 1):
        yield TrailSpec(nodes)


def directed_factorization_errors(n: int, p: float, k: int, cfg: OpinionConfig) -> np.ndarray:
    """``|E(H_c) - E(H)_c|`` for every directed trail of size ``k`` with distinct departures."""
    model = ErModel(n, p, directed=True)
    space = _GraphSpace.of(model)
    H = influence_entries(space.adj, cfg.alpha)
    EH = space.probs @ H.reshape(len(space.probs), -1)
    EH = EH.reshape(n, n)
    errs = []
    for trail in all_trails(n, k):
        if not trail.first_k_distinct():
            continue
        hc = np.ones(len(space.probs))
        mf = 1.0
        for a, b in trail.steps:
            hc = hc * H[:, a, b]
            mf *= EH[a, b]
        errs.append(abs(float(space.probs @ hc) - mf))
    return np.array(errs)


def check_trails(model: ErModel, k: int, n0: int = DEFAULT_N0) -> list:
    """Every trail bound on every trail of size ``k`` in an enumerable model."""
    n, p = model.n, model.p
    _check_k(n, k)
    space = _GraphSpace.of(model)
    lower_on = n >= 3 and lower_bound_applies(n, p, k, n0)
    out = []
    for trail in all_trails(n, k):
        params = f"model={model.kind};n={n};p={p:.6g};k={k};trail={'-'.join(map(str, trail.nodes))}"
        value = None if trail.has_loop_step else space.conditional_inverse_degree(trail)
        if value is None:
            out.append(LemmaCheck("repeated_departure", params, math.nan, math.nan, math.nan, "undefined"))
            continue
        prod_b, coarse_b = repeated_departure_bound(n, p, k, trail.departure_multiplicities())
        out.append(_check("repeated_departure", params, value, prod_b, True, True))
        out.append(_check("repeated_departure_coarse", params, prod_b, coarse_b, True, True))
        if trail.first_k_distinct() and n >= 3:
            out.append(_check("distinct_path_lower", params, value, distinct_path_lower_bound(n, p, k),
                              False, lower_on))
        if model.directed:
            bound = successor_path_bound(n, p, k, trail.distinct_edges(True))
            out.append(_check("successor_path", params, value, bound, True, True))
    return out


# ------------------------------------------------------------------ grids

TINY_UNDIRECTED = (3, 4, 5)
TINY_DIRECTED = (3, 4)
TINY_P = (0.3, 0.5, 0.7)
TINY_K = (1, 2, 3)
SANDWICH_N = (10, 100, 1000)


def run_lemma_grid(n0: int = DEFAULT_N0) -> list:
    """The full grid: every tiny-model trail plus the closed-form degree sandwich."""
    rows = []
    for directed, ns in ((False, TINY_UNDIRECTED), (True, TINY_DIRECTED)):
        for n in ns:
            for p in TINY_P:
                model = ErModel(n, p, directed)
                rows += check_inverse_degree(n, p, n0)
                for k in TINY_K:
                    if k < n:
                        rows += check_trails(model, k, n0)
    for n in SANDWICH_N:
        rows += check_inverse_degree(n, 3.0 * math.log(n) / n, n0)
    return rows


def grid_failures(rows) -> list:
    return [r for r in rows if r.status == "fail"]


# ------------------------------------------------------------------ power-gap trend

@dataclass(frozen=True)
class PowerGapTrend:
    rows: list  # (n, p, gap, ci)
    slope: Optional[float]


def loglog_slope(ns, values) -> Optional[float]:
    """Least-squares slope of ``log(values)`` against ``log(ns)``; None if any value is 0."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(ns) < 2 or np.any(values <= 0):
        return None
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])


def power_gap_trend(ns, directed: bool, regime: RegimeRule, cfg_for_n, k: int,
                    estimator: Estimator = Exact()) -> PowerGapTrend:
    """``||E(H**k) - E(H)**k||_*`` along an increasing ladder of ``n``.

    ``cfg_for_n(n)`` returns the :class:`OpinionConfig` used at each rung.
    """
    ns = [int(v) for v in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n ladder must be strictly increasing")
    rows = []
    for n in ns:
        model = ErModel(n, regime(n), directed)
        if k == 0:
            rows.append((n, model.p, 0.0, 0.0))
            continue
        g, ci = gap_power(model, cfg_for_n(n), k, estimator)
        rows.append((n, model.p, g, ci))
    return PowerGapTrend(rows, loglog_slope([r[0] for r in rows], [r[2] for r in rows]))


def directed_power_gap_exact(n: int, p: float, alpha_max: float) -> float:
    """Closed form of the directed ``k=2`` power gap: ``2 max_i alpha_i**2 q (1 - q)``.

    In the directed model only walks that leave the same node twice in a row
    break the factorisation. With ``q`` the isolation probability, row ``i``
    is off by ``alpha_i**2 q (1-q)`` on the diagonal and by the same total
    spread over its off-diagonal entries.
    """
    q = (1.0 - p) ** (n - 1)
    return 2.0 * alpha_max**2 * q * (1.0 - q)
