"""Restricted isometry and restricted orthogonality constants by enumeration.

Exact values are exponential in the order, so they are only available at desk
scale (the default budget admits N <= 24, s <= 4); the sampled mode returns a
lower bound over randomly drawn supports and is flagged as such.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

DEFAULT_BUDGET = 500_000
_CHUNK = 65536


class BudgetExceeded(RuntimeError):
    """Exact enumeration would exceed the support budget."""


@dataclass(frozen=True)
class RipEstimate:
    order: int
    delta: float
    exact: bool


@dataclass(frozen=True)
class RocEstimate:
    orders: tuple[int, int]
    theta: float
    exact: bool


def _support_array(N: int, s: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(N), s)), dtype=np.intp)


def _delta_over_supports(G: np.ndarray, supports: np.ndarray) -> float:
    delta = 0.0
    for lo in range(0, supports.shape[0], _CHUNK):
        idx = supports[lo:lo + _CHUNK]
        blocks = G[idx[:, :, None], idx[:, None, :]]
        eigs = np.linalg.eigvalsh(blocks)
        delta = max(delta, float(np.max(eigs[:, -1] - 1.0)),
                    float(np.max(1.0 - eigs[:, 0])))
    return delta


def estimate_ric(A: np.ndarray, s: int, mode: str = "exact",
                 budget: int = DEFAULT_BUDGET, seed=None) -> RipEstimate:
    """delta_s = max over supports S, |S| = s, of the Gram deviation of A_S.

    Exact mode enumerates every support; sampled mode draws ``budget`` random
    supports and reports a lower bound (exact=False).
    """
    A = np.asarray(A, dtype=float)
    N = A.shape[1]
    if not (1 <= s <= N):
        raise ValueError(f"need 1 <= s <= {N}, got {s}")
    G = A.T @ A
    if mode == "exact":
        total = comb(N, s)
        if total > budget:
            raise BudgetExceeded(
                f"C({N},{s}) = {total} supports exceed budget {budget}")
        supports = _support_array(N, s)
        return RipEstimate(s, _delta_over_supports(G, supports), exact=True)
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        supports = np.array(
            [rng.choice(N, size=s, replace=False) for _ in range(budget)],
            dtype=np.intp)
        return RipEstimate(s, _delta_over_supports(G, supports), exact=False)
    raise ValueError(f"unknown mode {mode!r}")


def _disjoint_pairs(N: int, s: int, s2: int):
    """All (S, S') with |S| = s, |S'| = s2, S and S' disjoint."""
    for S in itertools.combinations(range(N), s):
        rest = [i for i in range(N) if i not in S]
        for S2 in itertools.combinations(rest, s2):
            yield S, S2


def estimate_roc(A: np.ndarray, s: int, s2: int, mode: str = "exact",
                 budget: int = DEFAULT_BUDGET, seed=None) -> RocEstimate:
    """theta_{s,s2} = max over disjoint (S, S') of the cross-Gram spectral norm.

    The supremum of |<Ax, Ax'>| over unit-norm vectors supported on disjoint
    S, S' equals sigma_max(A_S^T A_{S'}).
    """
    A = np.asarray(A, dtype=float)
    N = A.shape[1]
    if s < 1 or s2 < 1 or s + s2 > N:
        raise ValueError(f"need s, s' >= 1 and s + s' <= {N}")
    G = A.T @ A
    if mode == "exact":
        total = comb(N, s) * comb(N - s, s2)
        if total > budget:
            raise BudgetExceeded(
                f"{total} disjoint support pairs exceed budget {budget}")
        theta = 0.0
        rows = np.empty((_CHUNK, s), dtype=np.intp)
        cols = np.empty((_CHUNK, s2), dtype=np.intp)
        n = 0
        for S, S2 in _disjoint_pairs(N, s, s2):
            rows[n] = S
            cols[n] = S2
            n += 1
            if n == _CHUNK:
                theta = max(theta, _theta_chunk(G, rows, cols, n))
                n = 0
        if n:
            theta = max(theta, _theta_chunk(G, rows, cols, n))
        return RocEstimate((s, s2), theta, exact=True)
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        theta = 0.0
        for lo in range(0, budget, _CHUNK):
            m = min(_CHUNK, budget - lo)
            picks = np.array([rng.choice(N, size=s + s2, replace=False)
                              for _ in range(m)], dtype=np.intp)
            theta = max(theta, _theta_chunk(G, picks[:, :s], picks[:, s:], m))
        return RocEstimate((s, s2), theta, exact=False)
    raise ValueError(f"unknown mode {mode!r}")


def _theta_chunk(G, rows, cols, n) -> float:
    blocks = G[rows[:n, :, None], cols[:n, None, :]]
    return float(np.linalg.svd(blocks, compute_uv=False)[:, 0].max())
