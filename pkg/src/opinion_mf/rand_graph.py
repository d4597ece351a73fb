"""Homogeneous Erdos-Renyi graphs: sampling, exact enumeration, degrees.

Edge slots are enumerated row-major. For undirected graphs slot ``s`` is the
``s``-th pair ``(i, j)`` with ``i < j``; for directed graphs it is the ``s``-th
ordered pair with ``i != j``. Everything that consumes randomness or
enumerates graphs walks the slots in this order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ._utils import check_probability, make_rng

MAX_ENUMERATION_SLOTS = 30


@dataclass(frozen=True)
class ErModel:
    """G(n, p) when ``directed`` is false, D(n, p) otherwise."""

    n: int
    p: float
    directed: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", check_probability(self.p))
        object.__setattr__(self, "directed", bool(self.directed))

    @property
    def slots(self) -> int:
        n = self.n
        return n * (n - 1) if self.directed else n * (n - 1) // 2

    @property
    def kind(self) -> str:
        return "dir" if self.directed else "und"


@dataclass(frozen=True)
class RegimeRule:
    """The edge-probability family ``p(n) = min(1, c * log(n)**a / n)``."""

    c: float
    a: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"regime scale c must be positive, got {self.c}")
        if not self.a >= 0:
            raise ValueError(f"regime exponent a must be >= 0, got {self.a}")

    def __call__(self, n: int) -> float:
        return regime_p(self, n)


def regime_p(rule: RegimeRule, n: int) -> float:
    if n < 2:
        raise ValueError(f"regime_p needs n >= 2, got {n}")
    return min(1.0, rule.c * math.log(n) ** rule.a / n)


@dataclass(frozen=True, eq=False)
class Graph:
    """A simple graph on nodes ``0..n-1`` stored as a dense boolean adjacency."""

    adj: np.ndarray
    directed: bool = False
    n: int = field(init=False)

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
            raise ValueError(f"adjacency must be a non-empty square matrix, got {adj.shape}")
        if adj.diagonal().any():
            raise ValueError("self-loops are not allowed")
        if not self.directed and not np.array_equal(adj, adj.T):
            raise ValueError("undirected adjacency must be symmetric")
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)
        object.__setattr__(self, "directed", bool(self.directed))
        object.__setattr__(self, "n", adj.shape[0])

    @classmethod
    def from_edges(cls, n, rows, cols, directed=False) -> "Graph":
        adj = np.zeros((n, n), dtype=bool)
        adj[np.asarray(rows, dtype=np.intp), np.asarray(cols, dtype=np.intp)] = True
        if not directed:
            adj |= adj.T
        return cls(adj, directed)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.directed == other.directed and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash((self.directed, self.adj.tobytes()))

    def degrees(self) -> np.ndarray:
        """Degree of every node (out-degree for directed graphs)."""
        return self.adj.sum(axis=1)

    def degree(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"node {i} out of range for n={self.n}")
        return int(self.adj[i].sum())

    out_degree = degree

    def neighbours(self, i: int) -> np.ndarray:
        if not 0 <= i < self.n:
            raise IndexError(f"node {i} out of range for n={self.n}")
        return np.flatnonzero(self.adj[i])

    def edge_count(self) -> int:
        m = int(self.adj.sum())
        return m if self.directed else m // 2

    def has_isolated_node(self) -> bool:
        return bool((self.degrees() == 0).any())

    def to_text(self) -> str:
        lines = [f"{self.n} {int(self.directed)}"]
        lines += ["".join("1" if b else "0" for b in row) for row in self.adj]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty graph document")
        header = lines[0].split()
        if len(header) != 2:
            raise ValueError(f"graph header must be 'n directed', got {lines[0]!r}")
        n = int(header[0])
        flag = header[1].lower()
        if flag not in ("0", "1", "true", "false"):
            raise ValueError(f"directed flag must be 0/1/true/false, got {header[1]!r}")
        rows = lines[1:]
        if len(rows) != n or any(len(r) != n or set(r) - {"0", "1"} for r in rows):
            raise ValueError(f"expected {n} rows of {n} characters in {{0,1}}")
        adj = np.array([[c == "1" for c in r] for r in rows], dtype=bool)
        return cls(adj, flag in ("1", "true"))


def degree(g: Graph, i: int) -> int:
    return g.degree(i)


def out_degree(g: Graph, i: int) -> int:
    return g.out_degree(i)


def slot_pairs(n: int, directed: bool, slots=None) -> tuple[np.ndarray, np.ndarray]:
    """Map slot indices (all of them by default) to ``(rows, cols)`` node pairs."""
    total = n * (n - 1) if directed else n * (n - 1) // 2
    s = np.arange(total, dtype=np.int64) if slots is None else np.asarray(slots, dtype=np.int64)
    if n == 1:
        return s.copy(), s.copy()
    if directed:
        i = s // (n - 1)
        r = s % (n - 1)
        return i, r + (r >= i)
    i_all = np.arange(n, dtype=np.int64)
    starts = i_all * (2 * n - i_all - 1) // 2
    i = np.searchsorted(starts, s, side="right") - 1
    return i, s - starts[i] + i + 1


def sample_slots(model: ErModel, seed: int) -> np.ndarray:
    """Sorted indices of the slots present in one draw of ``model``.

    Slots are visited in order and the run of absent slots before each
    present one is drawn as a Geometric(p) variate. This is distributionally
    identical to one Bernoulli(p) trial per slot but costs O(edges) draws.
    """
    total = model.slots
    p = model.p
    if total == 0 or p == 0.0:
        return np.empty(0, dtype=np.int64)
    if p == 1.0:
        return np.arange(total, dtype=np.int64)
    rng = make_rng(seed)
    mean = total * p
    batch = int(mean + 6.0 * math.sqrt(mean * (1.0 - p)) + 16)
    pieces = []
    last = -1
    while True:
        # skips past the last slot are all equivalent; clipping keeps cumsum from overflowing
        skips = np.minimum(rng.geometric(p, size=batch), total + 1)
        pos = last + np.cumsum(skips, dtype=np.int64)
        if pos[-1] >= total:
            pieces.append(pos[pos < total])
            break
        pieces.append(pos)
        last = int(pos[-1])
    return np.concatenate(pieces)


def sample_edges(model: ErModel, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Edge list of one draw; undirected edges are reported once with ``i < j``."""
    return slot_pairs(model.n, model.directed, sample_slots(model, seed))


def sample(model: ErModel, seed: int) -> Graph:
    rows, cols = sample_edges(model, seed)
    return Graph.from_edges(model.n, rows, cols, model.directed)


def _check_enumerable(model: ErModel, max_slots: int):
    if model.slots > max_slots:
        raise ValueError(
            f"model has {model.slots} edge slots; exact enumeration is capped at {max_slots}"
        )


def iter_enumeration(model: ErModel, batch_size: int = 1 << 14, max_slots: int = MAX_ENUMERATION_SLOTS):
    """Yield ``(adjacency_stack, probabilities)`` chunks covering every graph once.

    Graph ``m`` (``0 <= m < 2**slots``) contains slot ``s`` when bit
    ``slots - 1 - s`` of ``m`` is set, so the first slot is the most
    significant bit and the order is lexicographic in the slot indicators.
    """
    _check_enumerable(model, max_slots)
    n, s = model.n, model.slots
    rows, cols = slot_pairs(n, model.directed)
    shifts = np.arange(s - 1, -1, -1, dtype=np.int64)
    p, q = model.p, 1.0 - model.p
    total = 1 << s
    for start in range(0, total, batch_size):
        masks = np.arange(start, min(total, start + batch_size), dtype=np.int64)
        bits = ((masks[:, None] >> shifts[None, :]) & 1).astype(bool)
        adj = np.zeros((masks.size, n, n), dtype=bool)
        adj[:, rows, cols] = bits
        if not model.directed:
            adj |= np.swapaxes(adj, 1, 2)
        e = bits.sum(axis=1)
        probs = np.power(p, e) * np.power(q, s - e)
        yield adj, probs


def enumerate_weighted(model: ErModel, max_slots: int = MAX_ENUMERATION_SLOTS) -> Iterator[tuple[Graph, float]]:
    """Every graph of ``model`` with its probability, in lexicographic slot order."""
    for adj, probs in iter_enumeration(model, max_slots=max_slots):
        for a, pr in zip(adj, probs):
            yield Graph(a, model.directed), float(pr)


def isolated_node_frequency(model: ErModel, seeds) -> float:
    """Fraction of sampled graphs that contain at least one isolated node."""
    hits = 0
    seeds = list(seeds)
    for seed in seeds:
        rows, cols = sample_edges(model, seed)
        touched = np.zeros(model.n, dtype=bool)
        touched[rows] = True
        if not model.directed:
            touched[cols] = True
        hits += not touched.all()
    return hits / len(seeds)
