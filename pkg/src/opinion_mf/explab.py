"""Concentration sweeps over ladders of ``n`` and the affine optimisation demo."""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from dataclasses import asdict, dataclass, fields
from typing import Callable, Optional

import numpy as np

from ._utils import make_rng, mix_seed
from .dynamics import OpinionConfig, influence_entries
from .matfun import exp_series, monomial_series, resolvent_series
from .meanfield import meanfield_stable
from .montecarlo import Exact, MonteCarlo, NormSpec, exact_stable_mean, gap_phi, gap_power, gap_stable
from .rand_graph import ErModel, RegimeRule, iter_enumeration

CSV_COLUMNS = ("model", "n", "p", "norm", "rho", "samples", "master_seed", "gap", "ci", "wall_ms")
QUANTITIES = ("stable", "phi:exp", "phi:resolvent")
RHO_UNDIRECTED_MSG = (
    "rho-norm gaps are only supported for the directed model: whether the "
    "undirected gap vanishes in rho-norms is an open question"
)


# ------------------------------------------------------------------ per-rung data

def parse_alpha_rule(rule: str, alpha_bar: Optional[float]) -> tuple[str, float, float]:
    """``'const:x'`` or ``'random'`` -> ``(kind, value, alpha_bar)``."""
    rule = str(rule).strip().lower()
    if rule.startswith("const:"):
        value = float(rule[6:])
        bar = value if alpha_bar is None else float(alpha_bar)
        return "const", value, bar
    if rule == "random":
        if alpha_bar is None:
            raise ValueError("alpha rule 'random' needs alpha_bar")
        return "random", math.nan, float(alpha_bar)
    raise ValueError(f"alpha rule must be 'const:x' or 'random', got {rule!r}")


def read_vector(path: str) -> np.ndarray:
    """Numbers separated by commas, whitespace or newlines."""
    with open(path) as fh:
        text = fh.read()
    tokens = text.replace(",", " ").split()
    if not tokens:
        raise ValueError(f"{path}: no values")
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def rung_config(n: int, alpha_rule: str, alpha_bar: Optional[float], x0_rule: str, data_seed: int) -> OpinionConfig:
    """``alpha`` and ``x0`` for one rung, drawn once from a seed dedicated to ``n``.

    ``x0_rule`` is ``random`` (i.i.d. uniform), ``ones`` or ``file:PATH``.
    """
    kind, value, bar = parse_alpha_rule(alpha_rule, alpha_bar)
    rng = make_rng(mix_seed(data_seed, n))
    rule = str(x0_rule).strip()
    if rule == "random":
        x0 = rng.random(n)
    elif rule == "ones":
        x0 = np.ones(n)
    elif rule.startswith("file:"):
        x0 = read_vector(rule[5:])
        if x0.shape[0] != n:
            raise ValueError(f"x0 file has {x0.shape[0]} values, expected n={n}")
    else:
        raise ValueError(f"x0 rule must be 'random', 'ones' or 'file:PATH', got {x0_rule!r}")
    alpha = np.full(n, value) if kind == "const" else bar * rng.random(n)
    return OpinionConfig(alpha, bar, x0)


# ------------------------------------------------------------------ sweeps

@dataclass(frozen=True)
class SweepConfig:
    model: str = "und"
    n_ladder: tuple = (64, 128, 256)
    regime: RegimeRule = RegimeRule(3.0, 1.0)
    alpha_rule: str = "const:0.9"
    alpha_bar: Optional[float] = None
    x0_rule: str = "random"
    data_seed: int = 0
    norm: str = "inf"
    quantity: str = "stable"
    eps: float = 1e-8
    samples: int = 2000
    delta: float = 1e-4
    master_seeds: tuple = (0,)
    exact: bool = False
    solver: str = "auto"
    output: Optional[str] = None

    def __post_init__(self):
        if self.model not in ("und", "dir"):
            raise ValueError(f"model must be 'und' or 'dir', got {self.model!r}")
        ladder = tuple(int(v) for v in self.n_ladder)
        if not ladder:
            raise ValueError("n_ladder is empty")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("n_ladder must be strictly increasing")
        if ladder[0] < 2:
            raise ValueError("every rung needs n >= 2")
        seeds = tuple(int(s) for s in self.master_seeds)
        if not seeds:
            raise ValueError("master_seeds is empty")
        regime = self.regime
        if isinstance(regime, dict):
            regime = RegimeRule(**regime)
        elif isinstance(regime, (list, tuple)):
            regime = RegimeRule(*regime)
        elif isinstance(regime, str):
            regime = RegimeRule(*(float(v) for v in regime.split(",")))
        norm = NormSpec.parse(self.norm)
        if self.model == "und" and not norm.is_inf:
            raise ValueError(RHO_UNDIRECTED_MSG)
        if self.quantity not in QUANTITIES and not self.quantity.startswith("power:"):
            raise ValueError(f"quantity must be one of {QUANTITIES} or 'power:K', got {self.quantity!r}")
        if self.quantity != "stable" and not norm.is_inf:
            raise ValueError("matrix gaps use the star norm; set norm='inf'")
        if not self.exact and self.samples < 1:
            raise ValueError("samples must be >= 1")
        parse_alpha_rule(self.alpha_rule, self.alpha_bar)
        object.__setattr__(self, "n_ladder", ladder)
        object.__setattr__(self, "master_seeds", seeds)
        object.__setattr__(self, "regime", regime)

    @property
    def directed(self) -> bool:
        return self.model == "dir"

    @classmethod
    def from_mapping(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str) -> "SweepConfig":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        return cls.from_mapping(data)

    def to_mapping(self) -> dict:
        d = asdict(self)
        d["regime"] = {"c": self.regime.c, "a": self.regime.a}
        d["n_ladder"] = list(self.n_ladder)
        d["master_seeds"] = list(self.master_seeds)
        return d


@dataclass(frozen=True)
class SweepRow:
    model: str
    n: int
    p: float
    norm: str
    rho: Optional[float]
    samples: int
    master_seed: int
    gap: float
    ci: float
    wall_ms: float

    def as_row(self) -> dict:
        d = asdict(self)
        d["rho"] = "" if self.rho is None else self.rho
        return d


def _series_for(quantity: str):
    if quantity == "phi:exp":
        return exp_series()
    if quantity == "phi:resolvent":
        return resolvent_series()
    k = int(quantity.split(":", 1)[1])
    return monomial_series(k)


def sweep_point(cfg: SweepConfig, n: int, master_seed: int) -> SweepRow:
    """One row: the gap at rung ``n`` for one master seed."""
    model = ErModel(n, cfg.regime(n), cfg.directed)
    ocfg = rung_config(n, cfg.alpha_rule, cfg.alpha_bar, cfg.x0_rule, cfg.data_seed)
    est = Exact() if cfg.exact else MonteCarlo(cfg.samples, cfg.delta, master_seed)
    norm = NormSpec.parse(cfg.norm)
    t0 = time.perf_counter()
    if cfg.quantity == "stable":
        g, ci = gap_stable(model, ocfg, norm, est, cfg.solver)
        label = norm.label()
    elif cfg.quantity.startswith("power:"):
        g, ci = gap_power(model, ocfg, int(cfg.quantity[6:]), est, cfg.solver)
        label = "star"
    else:
        g, ci = gap_phi(model, ocfg, _series_for(cfg.quantity), cfg.eps, est, cfg.solver)
        label = "star"
    wall = (time.perf_counter() - t0) * 1e3
    return SweepRow(
        model=cfg.model,
        n=n,
        p=model.p,
        norm=label,
        rho=None if norm.is_inf else norm.rho,
        samples=0 if cfg.exact else cfg.samples,
        master_seed=master_seed,
        gap=float(g),
        ci=float(ci),
        wall_ms=wall,
    )


def run_sweep(cfg: SweepConfig, progress: Optional[Callable[[SweepRow], None]] = None) -> list:
    """Rows for every ``(n, master_seed)``; exact sweeps produce one row per rung.

    Rungs run one after another; the samples inside each rung use the
    worker pool.
    """
    seeds = cfg.master_seeds[:1] if cfg.exact else cfg.master_seeds
    rows = []
    for n in cfg.n_ladder:
        for s in seeds:
            row = sweep_point(cfg, n, s)
            rows.append(row)
            if progress is not None:
                progress(row)
    if cfg.output:
        write_csv(rows, cfg.output)
    return rows


def write_csv(rows, path_or_file):
    def _write(fh):
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r.as_row())

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


@dataclass(frozen=True)
class TrendReport:
    ns: tuple
    medians: tuple
    strictly_decreasing: bool
    endpoint_ratio: float
    max_ratio: float = 0.5

    @property
    def passed(self) -> bool:
        return self.strictly_decreasing and self.endpoint_ratio <= self.max_ratio


def median_by_rung(rows) -> dict:
    by_n = {}
    for r in rows:
        by_n.setdefault(r.n, []).append(r.gap)
    return {n: statistics.median(v) for n, v in sorted(by_n.items())}


def trend_check(rows, max_ratio: float = 0.5) -> TrendReport:
    """Median gaps strictly decreasing along the ladder and last/first <= ``max_ratio``."""
    med = median_by_rung(rows)
    ns = tuple(med)
    vals = tuple(med[n] for n in ns)
    if len(vals) < 2:
        raise ValueError("a trend needs at least two rungs")
    dec = all(b < a for a, b in zip(vals, vals[1:]))
    ratio = vals[-1] / vals[0] if vals[0] > 0 else math.inf
    return TrendReport(ns, vals, dec, ratio, max_ratio)


# ------------------------------------------------------------------ optimisation demo

TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OptDemoSpec:
    """Affine objectives ``f(x, theta) = <a(theta), x> + b(theta)`` over a finite set.

    ``lipschitz`` is the constant of the plug-in objective in the sup-norm;
    it defaults to ``max_theta ||a(theta)||_1``, the constant of the affine
    family itself.
    """

    theta_ids: tuple
    a: np.ndarray
    b: np.ndarray
    lipschitz: Optional[float] = None

    def __post_init__(self):
        ids = tuple(self.theta_ids)
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if len(ids) < 2:
            raise ValueError("need at least two parameters")
        if len(set(ids)) != len(ids):
            raise ValueError("theta ids must be unique")
        if a.shape[0] != len(ids) or b.shape[0] != len(ids):
            raise ValueError("a and b need one entry per theta")
        if self.lipschitz is not None and self.lipschitz < 0:
            raise ValueError("lipschitz constant must be >= 0")
        object.__setattr__(self, "theta_ids", ids)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def L(self) -> float:
        if self.lipschitz is not None:
            return float(self.lipschitz)
        return float(np.abs(self.a).sum(axis=1).max())

    def values(self, x) -> np.ndarray:
        """``f(x, theta)`` for every theta."""
        return self.a @ np.asarray(x, dtype=float) + self.b

    @classmethod
    def random(cls, n_theta: int, n: int, seed: int) -> "OptDemoSpec":
        rng = make_rng(seed)
        return cls(tuple(range(n_theta)), rng.normal(size=(n_theta, n)), rng.normal(size=n_theta))


def argmin_tiebreak(values, ids, tol: float = TIE_TOL):
    """Smallest id among the entries within ``tol`` of the minimum."""
    values = np.asarray(values, dtype=float)
    best = values.min()
    return min(i for i, v in zip(ids, values) if v <= best + tol)


@dataclass(frozen=True)
class OptDemoReport:
    theta_expected_objective: object
    theta_mean_value: object
    theta_meanfield: object
    coincide: bool
    opt_mean_value: float
    opt_meanfield: float
    suboptimality: float
    gap: float
    lipschitz: float
    certificate: float
    certificate_holds: bool
    value_difference: float
    theta_deviation: float


def opt_demo_affine(model: ErModel, cfg: OpinionConfig, spec: OptDemoSpec) -> OptDemoReport:
    """Compare three ways of picking theta on an enumerable model.

    1. minimise ``E f(x(G), theta)`` by summing over every graph;
    2. minimise ``f(E x(G), theta)``;
    3. minimise ``f(xbar, theta)`` with the mean-field stable opinion.

    For affine ``f`` the first two coincide. The report gives the
    suboptimality of choice 3 under objective 2 together with the
    certificate ``L * ||E x(G) - xbar||_inf``.
    """
    if spec.a.shape[1] != model.n:
        raise ValueError(f"objective dimension {spec.a.shape[1]} does not match n={model.n}")
    ids = spec.theta_ids
    expected_obj = np.zeros(len(ids))
    b_vec = cfg.drive
    for adj, probs in iter_enumeration(model):
        H = influence_entries(adj, cfg.alpha)
        X = np.linalg.solve(np.eye(model.n) - H, np.broadcast_to(b_vec, (len(probs), model.n))[..., None])[..., 0]
        expected_obj += probs @ (X @ spec.a.T + spec.b)
    ex = exact_stable_mean(model, cfg)
    xbar = meanfield_stable(model, cfg)
    v2 = spec.values(ex)
    v3 = spec.values(xbar)
    t1 = argmin_tiebreak(expected_obj, ids)
    t2 = argmin_tiebreak(v2, ids)
    t3 = argmin_tiebreak(v3, ids)
    i3 = ids.index(t3)
    opt2 = float(v2.min())
    opt3 = float(v3.min())
    gap = float(np.abs(ex - xbar).max())
    L = spec.L
    subopt = float(v2[i3] - opt2)
    cert = L * gap
    return OptDemoReport(
        theta_expected_objective=t1,
        theta_mean_value=t2,
        theta_meanfield=t3,
        coincide=t1 == t2,
        opt_mean_value=opt2,
        opt_meanfield=opt3,
        suboptimality=subopt,
        gap=gap,
        lipschitz=L,
        certificate=cert,
        certificate_holds=subopt <= cert + TIE_TOL,
        value_difference=abs(opt2 - opt3),
        theta_deviation=float(abs(v2[i3] - v3[i3])),
    )
