"""Seeding and input validation helpers shared across the package."""

from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 finalizer (a bijective avalanche mixer)."""
    z = (x + GOLDEN_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, index: int) -> int:
    """Derive the 64-bit seed of sample ``index`` from ``master_seed``.

    The result depends only on the pair, so samples can be generated in any
    order (or in parallel) and still reproduce the sequential run.
    """
    return splitmix64(splitmix64(int(master_seed) & _MASK64) ^ (int(index) & _MASK64))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


RNG_DESCRIPTION = "numpy.PCG64 seeded by splitmix64(splitmix64(master) ^ index)"


def check_probability(p, name="p"):
    p = float(p)
    if not 0.0 <= p <= 1.0 or np.isnan(p):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def check_square(M, name="M"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    return M


def check_vector(v, n=None, name="vector"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def check_in_unit_interval(v, name):
    if np.any(v < 0.0) or np.any(v > 1.0):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return v


def n_threads() -> int:
    """Worker count from ``OPINION_MF_THREADS`` (unset or 0 means one per CPU)."""
    raw = os.environ.get("OPINION_MF_THREADS", "0").strip() or "0"
    try:
        k = int(raw)
    except ValueError as exc:
        raise ValueError(f"OPINION_MF_THREADS must be an integer, got {raw!r}") from exc
    if k < 0:
        raise ValueError("OPINION_MF_THREADS must be >= 0")
    return k if k > 0 else (os.cpu_count() or 1)


def ordered_fold(fn, items, combine):
    """Fold ``fn(item)`` results left to right with ``combine`` while ``fn`` runs on the pool.

    At most ``2 * workers`` results are pending at once, and the fold order is
    the input order, so the result does not depend on the worker count.
    """
    items = list(items)
    if not items:
        raise ValueError("nothing to fold")
    workers = min(n_threads(), len(items))
    acc = None
    if workers <= 1:
        for it in items:
            r = fn(it)
            acc = r if acc is None else combine(acc, r)
        return acc
    with ThreadPoolExecutor(max_workers=workers) as pool:
        it = iter(items)
        pending = deque(pool.submit(fn, x) for _, x in zip(range(2 * workers), it))
        while pending:
            r = pending.popleft().result()
            acc = r if acc is None else combine(acc, r)
            nxt = next(it, None)
            if nxt is not None:
                pending.append(pool.submit(fn, nxt))
    return acc
