"""Distributed outer iterations: BPDN, the penalized variants, and D-LASSO.

All variants share the same trace layout: ``estimates[k, l]`` is node l's
estimate after k information-exchange rounds (k = 0 is the local
initialization, before any exchange), so error-vs-iteration curves are
directly comparable across algorithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instance import ProblemInstance
from .network import NetworkMatrix
from .solver import (
    BpdnNodeSolver,
    SolverConfig,
    prune_ls,
    soft_threshold,
    supp,
)

KINDS = ("BPDN", "NBPDN1", "NBPDN2", "pNBPDN1", "pNBPDN2", "DLASSO")
_PENALTY = {"NBPDN1": "l1", "NBPDN2": "l2", "pNBPDN1": "l1", "pNBPDN2": "l2"}


class NodeSolveError(RuntimeError):
    """A node's inner solve failed; identifies the node and outer iteration."""

    def __init__(self, node: int, iteration: int, cause: Exception):
        super().__init__(f"inner solve failed at node {node}, iteration {iteration}: {cause}")
        self.node = node
        self.iteration = iteration


@dataclass
class DlassoParams:
    lasso_weight: float | None = None  # None: sigma * sqrt(2 log N)
    consensus_rho: float = 1.0


@dataclass
class AlgorithmConfig:
    kind: str
    lam: float = 0.1
    s: int | None = None
    max_outer_iters: int = 30
    epsilon: float | None = None  # None: instance epsilon
    dlasso: DlassoParams = field(default_factory=DlassoParams)
    early_stop: bool = False
    early_stop_tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError("lam must be in [0, 1]")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.kind.startswith("p") and (self.s is None or self.s < 1):
            raise ValueError("pruned variants require a sparsity level s >= 1")


@dataclass
class RunTrace:
    kind: str
    estimates: np.ndarray        # (K+1, L, N)
    comm_per_iter: np.ndarray    # (K+1,), vectors exchanged in round k
    inner_iters: np.ndarray      # (K+1, L)
    epsilon: float
    lam: float
    errors: np.ndarray | None = None  # (K+1, L) l2 error when truth known
    stopped_at: int | None = None
    converged_flags: np.ndarray | None = None  # (K+1, L) inner-solve status

    @property
    def iterations(self) -> int:
        return self.estimates.shape[0] - 1

    def with_errors(self, x_true: np.ndarray) -> "RunTrace":
        self.errors = np.linalg.norm(
            self.estimates - x_true[None, None, :], axis=2)
        return self

    def rows(self):
        """(k, l, err_l2, comm_count, inner_iters) tuples for CSV export."""
        K1, L, _ = self.estimates.shape
        for k in range(K1):
            for l in range(L):
                err = float(self.errors[k, l]) if self.errors is not None else math.nan
                yield k, l, err, int(self.comm_per_iter[k]), int(self.inner_iters[k, l])


def blend_neighbors(H: NetworkMatrix, estimates: np.ndarray, l: int) -> np.ndarray:
    """Weighted blend sum_r h_lr * estimates[r] over r with h_lr > 0."""
    idx = H.neighbors_in(l)
    return H.weights[l, idx] @ np.asarray(estimates)[idx]


def _comm_per_round(H: NetworkMatrix) -> int:
    Hw = H.weights
    off_diag = (Hw > 0).sum() - int(np.count_nonzero(np.diag(Hw) > 0))
    return int(off_diag)


def _node_epsilons(instance: ProblemInstance, config: AlgorithmConfig):
    eps = instance.epsilon if config.epsilon is None else config.epsilon
    if np.isscalar(eps):
        return [float(eps)] * instance.node_count
    return [float(e) for e in eps]


def run_bpdn(instance: ProblemInstance, H: NetworkMatrix,
             config: AlgorithmConfig, solver_config: SolverConfig | None = None,
             seed=None) -> RunTrace:
    """No cooperation: each node solves BPDN once; the trace repeats it."""
    solver_config = solver_config or SolverConfig()
    L, N, K = instance.node_count, instance.dimension, config.max_outer_iters
    eps = _node_epsilons(instance, config)
    est = np.zeros((K + 1, L, N))
    inner = np.zeros((K + 1, L), dtype=int)
    flags = np.ones((K + 1, L), dtype=bool)
    for l, obs in enumerate(instance.observations):
        rep = _solve_node(BpdnNodeSolver(obs.A, obs.y, eps[l], solver_config),
                          1.0, None, None, None, l, 0)
        est[:, l] = rep.x_hat
        inner[0, l] = rep.inner_iters
        flags[:, l] = rep.converged
    trace = RunTrace(config.kind, est, np.zeros(K + 1, dtype=int), inner,
                     max(eps), 1.0, converged_flags=flags)
    return trace.with_errors(instance.signal.values)


def _solve_node(solver, lam, penalty, anchor, warm, l, k, reuse=False):
    try:
        return solver.solve(lam, penalty, anchor, warm_start=warm,
                            reuse_state=reuse)
    except Exception as exc:  # noqa: BLE001 - re-raised with node context
        raise NodeSolveError(l, k, exc) from exc


def run_nbpdn(instance: ProblemInstance, H: NetworkMatrix,
              config: AlgorithmConfig, solver_config: SolverConfig | None = None,
              seed=None) -> RunTrace:
    """Penalized variants: BPDN initialization, then per-round neighbor
    blending and a penalized solve at every node (synchronous exchange)."""
    if config.kind not in ("NBPDN1", "NBPDN2"):
        raise ValueError(f"run_nbpdn got kind {config.kind!r}")
    return _run_blended(instance, H, config, solver_config, pruned=False)


def run_pnbpdn(instance: ProblemInstance, H: NetworkMatrix,
               config: AlgorithmConfig, solver_config: SolverConfig | None = None,
               seed=None) -> RunTrace:
    """Pruned variants: every stored estimate is the least-squares refit on
    the top-s support of the inner solution, hence at most s-sparse."""
    if config.kind not in ("pNBPDN1", "pNBPDN2"):
        raise ValueError(f"run_pnbpdn got kind {config.kind!r}")
    return _run_blended(instance, H, config, solver_config, pruned=True)


def _run_blended(instance, H, config, solver_config, pruned: bool) -> RunTrace:
    solver_config = solver_config or SolverConfig()
    L, N, K = instance.node_count, instance.dimension, config.max_outer_iters
    if H.node_count != L:
        raise ValueError("network size does not match instance")
    penalty = _PENALTY[config.kind]
    eps = _node_epsilons(instance, config)
    solvers = [BpdnNodeSolver(o.A, o.y, eps[l], solver_config)
               for l, o in enumerate(instance.observations)]
    est = np.zeros((K + 1, L, N))
    inner = np.zeros((K + 1, L), dtype=int)
    flags = np.zeros((K + 1, L), dtype=bool)
    comm = np.zeros(K + 1, dtype=int)
    comm[1:] = _comm_per_round(H)

    for l, obs in enumerate(instance.observations):
        rep = _solve_node(solvers[l], 1.0, None, None, None, l, 0)
        xl = rep.x_hat
        if pruned:
            xl = prune_ls(obs.A, obs.y, supp(xl, config.s))
        est[0, l] = xl
        inner[0, l] = rep.inner_iters
        flags[0, l] = rep.converged

    stopped_at = None
    for k in range(1, K + 1):
        prev = est[k - 1]  # snapshot: only round-(k-1) estimates are readable
        for l, obs in enumerate(instance.observations):
            anchor = blend_neighbors(H, prev, l)
            rep = _solve_node(solvers[l], config.lam, penalty, anchor,
                              prev[l], l, k, reuse=True)
            xl = rep.x_hat
            if pruned:
                xl = prune_ls(obs.A, obs.y, supp(xl, config.s))
            est[k, l] = xl
            inner[k, l] = rep.inner_iters
            flags[k, l] = rep.converged
        if config.early_stop and k < K:
            drift = float(np.max(np.abs(est[k] - est[k - 1])))
            if drift < config.early_stop_tol:
                est[k + 1:] = est[k]
                flags[k + 1:] = flags[k]
                stopped_at = k
                break

    trace = RunTrace(config.kind, est, comm, inner, max(eps), config.lam,
                     stopped_at=stopped_at, converged_flags=flags)
    return trace.with_errors(instance.signal.values)


def _default_lasso_weight(instance: ProblemInstance) -> float:
    N = instance.dimension
    m2 = sum(float(o.e @ o.e) / o.size for o in instance.observations)
    sigma = math.sqrt(m2 / instance.node_count)
    if sigma > 0:
        return sigma * math.sqrt(2 * math.log(N))
    # noiseless fallback: small fraction of the largest correlation
    corr = max(float(np.abs(o.A.T @ o.y).max()) for o in instance.observations)
    return 1e-2 * corr


def run_dlasso(instance: ProblemInstance, H: NetworkMatrix,
               config: AlgorithmConfig, solver_config: SolverConfig | None = None,
               seed=None) -> RunTrace:
    """Decentralized consensus ADMM for the network-wide LASSO.

    Solves min sum_l 1/2 ||y_l - A_l x||^2 + beta ||x||_1 with per-edge
    consensus constraints (bridge variables eliminated) and a per-node l1
    splitting, so each round is one neighbor exchange plus closed-form
    updates with a cached factorization.
    """
    if config.kind != "DLASSO":
        raise ValueError(f"run_dlasso got kind {config.kind!r}")
    L, N, K = instance.node_count, instance.dimension, config.max_outer_iters
    if H.node_count != L:
        raise ValueError("network size does not match instance")
    rho = config.dlasso.consensus_rho
    beta = config.dlasso.lasso_weight
    if beta is None:
        beta = _default_lasso_weight(instance)

    neighbors = [np.setdiff1d(H.neighbors_in(l), [l]) for l in range(L)]
    degrees = np.array([nb.size for nb in neighbors])
    solvers = []
    for l, obs in enumerate(instance.observations):
        c = rho * degrees[l] + rho
        solvers.append(_RegularizedLS(obs.A, obs.y, c))

    x = np.zeros((L, N))
    v = np.zeros((L, N))
    t = np.zeros((L, N))
    p = np.zeros((L, N))
    est = np.zeros((K + 1, L, N))
    comm = np.zeros(K + 1, dtype=int)
    comm[1:] = int(degrees.sum())
    thresh = (beta / L) / rho

    for k in range(1, K + 1):
        x_prev = x
        x = np.empty_like(x_prev)
        for l in range(L):
            nsum = x_prev[neighbors[l]].sum(axis=0) if degrees[l] else np.zeros(N)
            rhs = (solvers[l].Aty - p[l]
                   + 0.5 * rho * (degrees[l] * x_prev[l] + nsum)
                   + rho * (v[l] - t[l]))
            x[l] = solvers[l].apply(rhs)
        v = soft_threshold(x + t, thresh)
        t = t + x - v
        for l in range(L):
            nsum = x[neighbors[l]].sum(axis=0) if degrees[l] else np.zeros(N)
            p[l] = p[l] + 0.5 * rho * (degrees[l] * x[l] - nsum)
        est[k] = x

    trace = RunTrace(config.kind, est, comm,
                     np.ones((K + 1, L), dtype=int), instance.epsilon,
                     config.lam,
                     converged_flags=np.ones((K + 1, L), dtype=bool))
    return trace.with_errors(instance.signal.values)


class _RegularizedLS:
    """Cached solve of (A^T A + c I) z = r via the Woodbury identity."""

    def __init__(self, A: np.ndarray, y: np.ndarray, c: float):
        self.Aty = A.T @ y
        M, N = A.shape
        if M < N:
            B = c * np.eye(M) + A @ A.T
            self._W = A.T @ np.linalg.inv(B)
            self._A = A
            self._c = c
            self.apply = self._apply_woodbury
        else:
            self._Binv = np.linalg.inv(c * np.eye(N) + A.T @ A)
            self.apply = self._apply_direct

    def _apply_woodbury(self, r):
        return (r - self._W @ (self._A @ r)) / self._c

    def _apply_direct(self, r):
        return self._Binv @ r


_RUNNERS = {
    "BPDN": run_bpdn,
    "NBPDN1": run_nbpdn,
    "NBPDN2": run_nbpdn,
    "pNBPDN1": run_pnbpdn,
    "pNBPDN2": run_pnbpdn,
    "DLASSO": run_dlasso,
}


def run_algorithm(instance: ProblemInstance, H: NetworkMatrix,
                  config: AlgorithmConfig,
                  solver_config: SolverConfig | None = None,
                  seed=None) -> RunTrace:
    """Dispatch on config.kind."""
    return _RUNNERS[config.kind](instance, H, config, solver_config, seed=seed)
