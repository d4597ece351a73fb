"""Mean-field surrogate: the expected influence matrix and its stable opinion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import OpinionConfig, SingularSystemError, influence_entries
from .rand_graph import ErModel, iter_enumeration


def isolation_probability(n: int, p: float) -> float:
    """``(1 - p)**(n - 1)``, the chance that a given node has no (out-)neighbour."""
    return math.exp((n - 1) * math.log1p(-p)) if p < 1.0 else 0.0


def expected_influence(model: ErModel, cfg: OpinionConfig) -> np.ndarray:
    """Closed-form ``E(H)``; identical for the undirected and the directed model.

    Conditioned on the edge ``(i, j)``, ``1/deg(i)`` averages to
    ``(1 - (1-p)**(n-1)) / ((n-1) p)``; multiplying by ``p`` gives the
    off-diagonal entry, and the isolated-node rule gives the diagonal.
    """
    n = model.n
    if n < 2:
        raise ValueError("expected_influence needs n >= 2")
    if cfg.n != n:
        raise ValueError(f"config has dimension {cfg.n}, model has n={n}")
    q_iso = isolation_probability(n, model.p)
    off = (1.0 - q_iso) / (n - 1)
    E = np.repeat((cfg.alpha * off)[:, None], n, axis=1)
    np.fill_diagonal(E, cfg.alpha * q_iso)
    return E


def expected_influence_oracle(model: ErModel, cfg: OpinionConfig) -> np.ndarray:
    """``sum_G P(G) H(G)`` over every graph of an enumerable model."""
    if cfg.n != model.n:
        raise ValueError(f"config has dimension {cfg.n}, model has n={model.n}")
    total = np.zeros((model.n, model.n))
    for adj, probs in iter_enumeration(model):
        total += np.einsum("g,gij->ij", probs, influence_entries(adj, cfg.alpha))
    return total


@dataclass(frozen=True, eq=False)
class MeanFieldSystem:
    expected_influence: np.ndarray
    cfg: OpinionConfig
    model: ErModel

    @classmethod
    def from_model(cls, model: ErModel, cfg: OpinionConfig) -> "MeanFieldSystem":
        return cls(expected_influence(model, cfg), cfg, model)

    def operator(self) -> np.ndarray:
        """``(I - E(H))^{-1} B``: maps initial opinions to the mean-field stable opinion."""
        n = self.cfg.n
        return np.linalg.solve(np.eye(n) - self.expected_influence, np.diag(self.cfg.stubbornness))

    def stable(self) -> np.ndarray:
        n = self.cfg.n
        A = np.eye(n) - self.expected_influence
        b = self.cfg.drive
        x = np.linalg.solve(A, b)
        if np.abs(A @ x - b).max() > 1e-12 * n:
            raise SingularSystemError("mean-field residual exceeds 1e-12 * n")
        return x

    def trajectory(self, t: int) -> np.ndarray:
        """Mean-field opinions after ``t`` steps."""
        x = np.array(self.cfg.x0, dtype=float)
        for _ in range(t):
            x = self.expected_influence @ x + self.cfg.drive
        return x


def meanfield_stable(model: ErModel, cfg: OpinionConfig) -> np.ndarray:
    return MeanFieldSystem.from_model(model, cfg).stable()


def neg_binomial_moment(n_trials: int, p: float, k: int) -> float:
    """``E(1 / (X + k))`` for ``X ~ Binomial(n_trials, p)`` via the finite alternating identity.

    With ``N = n_trials`` the identity reads

        sum_{s=1}^{k-1} (-1)^{s+1} (k-1)!/(k-s)! / ((N+1)...(N+s)) p^{-s}
        + (-1)^{k-1} (k-1)! / ((N+1)...(N+k)) (1 - (1-p)^{N+k}) p^{-k}.

    Each coefficient is obtained from the previous one by a single
    multiply/divide and the terms are summed with ``math.fsum``.
    """
    if n_trials < 0 or k < 1:
        raise ValueError("need n_trials >= 0 and k >= 1")
    if p == 0.0:
        return 1.0 / k
    if p == 1.0:
        return 1.0 / (n_trials + k)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    terms = []
    coef = 1.0 / k  # (k-1)!/(k-s)! / ((N+1)...(N+s)) / p**s after step s
    for s in range(1, k + 1):
        coef *= (k - s + 1) / ((n_trials + s) * p)
        if s == k:
            coef *= -math.expm1((n_trials + k) * math.log1p(-p))
        terms.append(coef if s % 2 == 1 else -coef)
    return math.fsum(terms)


def neg_binomial_moment_bruteforce(n_trials: int, p: float, k: int) -> float:
    """Direct sum ``sum_t C(N, t) p^t (1-p)^(N-t) / (t + k)``."""
    total = []
    for t in range(n_trials + 1):
        w = math.comb(n_trials, t) * p**t * (1.0 - p) ** (n_trials - t)
        total.append(w / (t + k))
    return math.fsum(total)
