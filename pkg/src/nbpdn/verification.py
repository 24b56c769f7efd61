"""End-to-end verification: lemma oracles plus recurrence checks on real runs.

Builds small networks whose observation matrices have exact, brute-force
RIC/ROC constants, runs the penalized variants on noisy instances, and checks
the per-iteration error recurrences with the printed constants. Used by the
``verify`` CLI command and the acceptance suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algorithms import AlgorithmConfig, run_nbpdn
from .analysis import (
    LEMMA_CASES,
    LemmaReport,
    RecurrenceReport,
    bound_constants,
    check_lemma_bounds,
    check_recurrence,
    estimate_ric,
    estimate_roc,
)
from .analysis.checks import partial_orthogonal
from .instance import NodeObservation, ProblemInstance, SparseSignal, generate_signal
from .network import build_network_matrix, generate_topology
from .solver import SolverConfig

RECURRENCE_SOLVER = SolverConfig(
    rho=1.0, max_inner_iters=20000, tol_abs=1e-9, tol_rel=1e-9,
    over_relaxation=1.6, feas_tol_scale=1e-9,
)


@dataclass
class VerificationReport:
    lemmas: dict = field(default_factory=dict)        # case -> LemmaReport
    recurrences: list = field(default_factory=list)   # RecurrenceReport
    recurrence_applicable: int = 0

    @property
    def violations(self) -> int:
        n = sum(rep.violations for rep in self.lemmas.values())
        n += sum(rep.violations for rep in self.recurrences if rep.applicable)
        return n

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def summary_lines(self) -> list[str]:
        lines = []
        for case, rep in self.lemmas.items():
            lines.append(
                f"lemma {case:<20} trials={rep.trials:<4} checks={rep.checks:<5} "
                f"violations={rep.violations} min_slack={rep.min_slack:.3e}")
        for rep in self.recurrences:
            tag = "ok" if rep.passed else "VIOLATED"
            if not rep.applicable:
                tag = "not applicable"
            slack = "n/a" if not rep.applicable else f"{rep.min_slack:.3e}"
            lines.append(
                f"recurrence {rep.variant:<10} points={rep.points:<5} "
                f"violations={rep.violations} min_slack={slack} [{tag}]")
        return lines


def _valid_rip_network(rng, L: int, N: int, M: int, s: int, a: int, b: int,
                       max_tries: int = 60):
    """L observation matrices with exact constants; retried until the
    recurrence conditions hold at small lam (delta_{s+a} < 1 suffices)."""
    for _ in range(max_tries):
        mats = [partial_orthogonal(rng, M, N) for _ in range(L)]
        d_sa = max(estimate_ric(A, s + a, budget=10**6).delta for A in mats)
        if d_sa >= 0.995:
            continue
        d_2s = max(estimate_ric(A, min(2 * s, N), budget=10**6).delta for A in mats)
        d_s = max(estimate_ric(A, s, budget=10**6).delta for A in mats)
        theta = max(estimate_roc(A, s + a, b, budget=10**6).theta for A in mats)
        if d_2s < 0.995:
            return mats, d_sa, d_2s, d_s, theta
    raise RuntimeError("no valid-RIP matrix pool found")


def _noisy_instance(rng, mats, x: np.ndarray, snr_db: float) -> ProblemInstance:
    obs = []
    eps = 0.0
    for A in mats:
        M = A.shape[0]
        sigma = math.sqrt(float(x @ x) * 10 ** (-snr_db / 10) / M)
        e = sigma * rng.standard_normal(M)
        obs.append(NodeObservation(A @ x + e, A, e))
        eps = max(eps, float(np.linalg.norm(e)))
    support = tuple(int(i) for i in np.nonzero(x)[0])
    signal = SparseSignal(x, support, len(support))
    return ProblemInstance(signal, tuple(obs), eps, snr_db)


def recurrence_checks(seed, trials: int = 20, lam: float = 0.1,
                      dims=(16, 12, 2), L: int = 4, d: int = 2,
                      a: int = 1, b: int = 4, snr_db: float = 18.0,
                      iters: int = 6, pools: int = 2,
                      rhs_scale: float = 1.0) -> list[RecurrenceReport]:
    """Run both penalized variants on valid-RIP noisy instances and check
    the l1 and l2 recurrence inequalities at every (node, iteration)."""
    N, M, s = dims
    rng = np.random.default_rng(seed)
    pool = [_valid_rip_network(rng, L, N, M, s, a, b) for _ in range(pools)]
    topo = generate_topology(L, d, rng)
    H = build_network_matrix(topo, "uniform-with-self")
    reports = []
    for t in range(trials):
        mats, d_sa, d_2s, d_s, theta = pool[t % pools]
        x = generate_signal(N, s, rng).values
        instance = _noisy_instance(rng, mats, x, snr_db)
        constants = bound_constants(d_sa, d_2s, d_s, theta, lam=lam,
                                    s=s, a=a, b=b, K=iters)
        for kind, variant in (("NBPDN1", "NBPDN1-l1"), ("NBPDN2", "NBPDN2-l2")):
            cfg = AlgorithmConfig(kind=kind, lam=lam, max_outer_iters=iters)
            trace = run_nbpdn(instance, H, cfg, RECURRENCE_SOLVER)
            reports.append(check_recurrence(trace, x, H, constants, variant,
                                            rhs_scale=rhs_scale))
    return reports


def run_verification(seed, trials: int = 200, recurrence_trials: int = 10,
                     rhs_scale: float = 1.0) -> VerificationReport:
    """Full lemma + recurrence verification; rhs_scale < 1 is the checker's
    self-test (deliberate bound perturbation that must produce violations)."""
    report = VerificationReport()
    if trials > 0:
        for i, case in enumerate(LEMMA_CASES):
            report.lemmas[case] = check_lemma_bounds(
                case, seed=np.random.SeedSequence([int(seed), i]),
                trials=trials, rhs_scale=rhs_scale)
    if recurrence_trials > 0:
        report.recurrences = recurrence_checks(
            np.random.SeedSequence([int(seed), 999]), trials=recurrence_trials,
            rhs_scale=rhs_scale)
        report.recurrence_applicable = sum(
            1 for r in report.recurrences if r.applicable)
    return report
