"""Performance metrics over Monte Carlo trials.

mSENR averages, per node, the ratio of trial-averaged signal energy to
trial-averaged error energy (the sampling-average-inside-the-ratio order),
then averages the per-node ratios and reports decibels. The alternative
expectation-of-ratios order is emitted alongside for diagnostics only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .solver import supp


def _msenr_from_energies(signal_energy: np.ndarray, err_sq: np.ndarray) -> float:
    """signal_energy: (T,); err_sq: (T, L) squared errors at one iteration."""
    num = float(signal_energy.mean())
    den = err_sq.mean(axis=0)  # (L,)
    with np.errstate(divide="ignore"):
        ratios = np.where(den > 0, num / np.maximum(den, 1e-300), np.inf)
    mean_ratio = float(np.mean(ratios))
    if not math.isfinite(mean_ratio):
        return math.inf
    return 10.0 * math.log10(mean_ratio)


def msenr(traces, x_trues, k: int) -> float:
    """mSENR in dB at iteration k across trials; +inf flags exact recovery."""
    if not traces:
        raise ValueError("need at least one trial")
    energy = np.array([float(x @ x) for x in x_trues])
    err_sq = np.array([t.errors[k] ** 2 for t in traces])
    return _msenr_from_energies(energy, err_sq)


def msenr_ratio_first(traces, x_trues, k: int) -> float:
    """Diagnostic variant: expectation of per-trial per-node ratios, in dB."""
    energy = np.array([float(x @ x) for x in x_trues])
    err_sq = np.array([t.errors[k] ** 2 for t in traces])
    with np.errstate(divide="ignore"):
        ratios = np.where(err_sq > 0, energy[:, None] / np.maximum(err_sq, 1e-300), np.inf)
    mean_ratio = float(ratios.mean())
    return 10.0 * math.log10(mean_ratio) if math.isfinite(mean_ratio) else math.inf


def support_match_matrix(trace, x_true: np.ndarray, s: int) -> np.ndarray:
    """(K+1, L) booleans: supp(estimate, s) == supp(x_true, s)."""
    true_supp = supp(x_true, s)
    K1, L, _ = trace.estimates.shape
    out = np.zeros((K1, L), dtype=bool)
    for k in range(K1):
        for l in range(L):
            out[k, l] = np.array_equal(supp(trace.estimates[k, l], s), true_supp)
    return out


def support_recovery_rate(traces, x_trues, k: int, s: int | None = None) -> float:
    """Fraction of (trial, node) pairs with exact support at iteration k."""
    hits = 0
    total = 0
    for trace, x in zip(traces, x_trues):
        sk = s if s is not None else int(np.count_nonzero(x))
        true_supp = supp(x, sk)
        for l in range(trace.estimates.shape[1]):
            hits += np.array_equal(supp(trace.estimates[k, l], sk), true_supp)
            total += 1
    return hits / total


@dataclass
class MetricSeries:
    algorithm: str
    msenr_db: np.ndarray          # (K+1,)
    msenr_ratio_first_db: np.ndarray
    senr_db_per_node: np.ndarray  # (K+1, L)
    supp_rate: np.ndarray | None  # (K+1,)
    comm_cum: np.ndarray          # (K+1,)
    trials: int
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    degenerate: np.ndarray        # (K+1,) True where averaged error is zero

    @property
    def iterations(self) -> int:
        return self.msenr_db.size - 1


def build_metric_series(
    algorithm: str,
    signal_energy: np.ndarray,   # (T,)
    err_sq: np.ndarray,          # (T, K+1, L)
    comm: np.ndarray,            # (K+1,)
    supp_match: np.ndarray | None = None,  # (T, K+1, L) bool
    bootstrap: int = 1000,
    seed: int = 0,
) -> MetricSeries:
    """Reduce per-trial error arrays to the metric series with bootstrap CIs."""
    T, K1, L = err_sq.shape
    if signal_energy.shape != (T,):
        raise ValueError("one signal energy per trial required")
    num = signal_energy.mean()
    den = err_sq.mean(axis=0)  # (K+1, L)
    degenerate = np.any(den == 0, axis=1)
    with np.errstate(divide="ignore"):
        ratios = np.where(den > 0, num / np.maximum(den, 1e-300), np.inf)
        series = 10.0 * np.log10(ratios.mean(axis=1))
        per_node = 10.0 * np.log10(ratios)
        rf = np.where(err_sq > 0, signal_energy[:, None, None]
                      / np.maximum(err_sq, 1e-300), np.inf)
        ratio_first = 10.0 * np.log10(rf.mean(axis=(0, 2)))

    rng = np.random.default_rng(seed)
    if bootstrap > 0 and T > 1:
        boot = np.empty((bootstrap, K1))
        for b_i in range(bootstrap):
            idx = rng.integers(0, T, size=T)
            bn = signal_energy[idx].mean()
            bd = err_sq[idx].mean(axis=0)
            with np.errstate(divide="ignore"):
                br = np.where(bd > 0, bn / np.maximum(bd, 1e-300), np.inf)
                boot[b_i] = 10.0 * np.log10(br.mean(axis=1))
        ci_lo = np.nanpercentile(boot, 2.5, axis=0)
        ci_hi = np.nanpercentile(boot, 97.5, axis=0)
    else:
        ci_lo = series.copy()
        ci_hi = series.copy()

    rate = supp_match.mean(axis=(0, 2)) if supp_match is not None else None
    return MetricSeries(
        algorithm=algorithm,
        msenr_db=series,
        msenr_ratio_first_db=ratio_first,
        senr_db_per_node=per_node,
        supp_rate=rate,
        comm_cum=np.cumsum(comm),
        trials=T,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        degenerate=degenerate,
    )
