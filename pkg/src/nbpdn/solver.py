"""Inner convex solves: penalized basis pursuit denoising and its primitives.

Solves, per node,

    min_x  lam*||x||_1 + (1-lam)*g(x - anchor)   s.t.  ||A x - y||_2 <= eps

with g either the l1 norm, the l2 norm, or absent (plain BPDN). The solver
is a three-block scaled ADMM: one splitting variable per nonsmooth term
(l1 on x, penalty on x-anchor, indicator of the residual ball), so every
update is closed form. The x-update linear system (c I + A^T A) is factored
once per node via the Woodbury identity when M < N and reused across calls,
which makes warm-started re-solves with a slowly moving anchor cheap.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

PENALTIES = ("l1", "l2", None)


class DimensionMismatch(ValueError):
    pass


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Elementwise sign(v) * max(|v| - t, 0); the prox of t*||.||_1."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def block_shrink(v: np.ndarray, t: float) -> np.ndarray:
    """max(0, 1 - t/||v||) * v; the prox of t*||.||_2 (zero inside the t-ball)."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    n = float(np.linalg.norm(v))
    if n <= t:
        return np.zeros_like(v)
    return (1.0 - t / n) * v


def project_ball(t: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection of t onto the ball {w : ||w - center|| <= radius}."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    d = t - center
    n = float(np.linalg.norm(d))
    if n <= radius:
        return t
    return center + d * (radius / n)


def supp(v: np.ndarray, s: int) -> np.ndarray:
    """Indices of the s largest-magnitude entries, ties to the lower index, sorted."""
    v = np.asarray(v)
    if not (1 <= s <= v.size):
        raise ValueError(f"need 1 <= s <= {v.size}, got {s}")
    # lexsort: primary key magnitude descending, secondary key index ascending
    order = np.lexsort((np.arange(v.size), -np.abs(v)))
    return np.sort(order[:s])


def prune_ls(A: np.ndarray, y: np.ndarray, T) -> np.ndarray:
    """Least-squares refit on the columns in T, zero elsewhere.

    Uses the minimum-norm solution when A_T is rank deficient.
    """
    T = np.asarray(sorted(int(i) for i in T))
    x = np.zeros(A.shape[1])
    coef, _, rank, _ = np.linalg.lstsq(A[:, T], y, rcond=None)
    if rank < T.size:
        log.debug("prune_ls: rank-deficient support (rank %d of %d)", rank, T.size)
    x[T] = coef
    return x


@dataclass(frozen=True)
class PenalizedBpdnProblem:
    """One node's inner program. penalty None means plain BPDN (anchor ignored)."""

    A: np.ndarray
    y: np.ndarray
    epsilon: float
    lam: float = 1.0
    penalty: str | None = None
    anchor: np.ndarray | None = None

    def __post_init__(self):
        if self.penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}")
        if self.epsilon < 0 or not (0.0 <= self.lam <= 1.0):
            raise ValueError("need epsilon >= 0 and lam in [0, 1]")
        if self.A.shape[0] != self.y.size:
            raise DimensionMismatch("A rows != len(y)")
        if self.penalty is not None:
            if self.anchor is None:
                raise ValueError("anchor required when a penalty is set")
            if self.anchor.size != self.A.shape[1]:
                raise DimensionMismatch("anchor length != A columns")


@dataclass
class SolverConfig:
    rho: float = 1.0
    max_inner_iters: int = 2000
    tol_abs: float = 1e-6
    tol_rel: float = 1e-5
    over_relaxation: float = 1.6
    adapt_rho: bool = True
    adapt_every: int = 50  # per-iteration balancing limit-cycles; see tests
    feas_tol_scale: float = 1e-6
    keep_history: bool = False

    def __post_init__(self):
        if self.rho <= 0 or self.max_inner_iters < 1:
            raise ValueError("rho and max_inner_iters must be positive")
        if not (0 < self.tol_abs <= 1e-2 and 0 < self.tol_rel <= 1e-2):
            raise ValueError("tolerances must be in (0, 1e-2]")
        if not (1.0 <= self.over_relaxation <= 1.8):
            raise ValueError("over_relaxation must be in [1, 1.8]")

    def feas_tol(self, y: np.ndarray) -> float:
        return self.feas_tol_scale * (1.0 + float(np.linalg.norm(y)))


@dataclass
class SolveReport:
    x_hat: np.ndarray
    inner_iters: int
    primal_residual: float
    dual_residual: float
    feasibility_gap: float
    objective: float
    converged: bool
    status: str = "converged"
    residual_history: list = field(default_factory=list)


def _objective(x, lam, penalty, anchor):
    if penalty is None:
        return float(np.abs(x).sum())
    obj = lam * float(np.abs(x).sum())
    d = x - anchor
    if penalty == "l1":
        return obj + (1.0 - lam) * float(np.abs(d).sum())
    return obj + (1.0 - lam) * float(np.linalg.norm(d))


class BpdnNodeSolver:
    """Stateful solver bound to one (A, y, epsilon) triple.

    Caches the x-update factorization (keyed by the identity-block count)
    and the last ADMM state, so successive solves with a drifting anchor
    warm start both the primal variables and the scaled duals.
    """

    def __init__(self, A: np.ndarray, y: np.ndarray, epsilon: float,
                 config: SolverConfig | None = None):
        self.A = np.asarray(A, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if self.A.shape[0] != self.y.size:
            raise DimensionMismatch("A rows != len(y)")
        self.epsilon = float(epsilon)
        self.config = config or SolverConfig()
        self.M, self.N = self.A.shape
        self._inv_cache: dict[int, tuple] = {}
        self._state = None  # (penalty, x, u, v, w, du, dv, dw, rho)

    def _apply_inverse(self, c: int):
        """Return r -> (c I + A^T A)^{-1} r, factored once per c."""
        if c not in self._inv_cache:
            A = self.A
            if self.M < self.N:
                B = c * np.eye(self.M) + A @ A.T
                W = A.T @ np.linalg.inv(B)  # N x M

                def apply(r, A=A, W=W, c=c):
                    return (r - W @ (A @ r)) / c
            else:
                Binv = np.linalg.inv(c * np.eye(self.N) + A.T @ A)

                def apply(r, Binv=Binv):
                    return Binv @ r
            self._inv_cache[c] = apply
        return self._inv_cache[c]

    def solve(self, lam: float = 1.0, penalty: str | None = None,
              anchor: np.ndarray | None = None,
              warm_start: np.ndarray | None = None,
              reuse_state: bool = True) -> SolveReport:
        A, y, eps, cfg = self.A, self.y, self.epsilon, self.config
        M, N = self.M, self.N
        if penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}")
        has_pen = penalty is not None
        if has_pen and (anchor is None or anchor.size != N):
            raise DimensionMismatch("anchor missing or wrong length")
        if warm_start is not None and warm_start.size != N:
            raise DimensionMismatch("warm start has wrong length")

        c = 2 if has_pen else 1
        apply_inv = self._apply_inverse(c)
        alpha = cfg.over_relaxation
        rho = cfg.rho
        l1_weight = lam if has_pen else 1.0

        # state init: reuse the previous ADMM state when block structure matches,
        # else start from the warm-start point (or zero)
        state = self._state if reuse_state else None
        if state is not None and state[0] == penalty:
            _, x, u, v, w, du, dv, dw, rho = state
            x, u, w, du, dw = x.copy(), u.copy(), w.copy(), du.copy(), dw.copy()
            if has_pen:
                v, dv = v.copy(), dv.copy()
        else:
            x0 = warm_start if warm_start is not None else (
                state[1] if state is not None else np.zeros(N))
            x = np.array(x0, dtype=float)
            u = x.copy()
            w = A @ x
            du = np.zeros(N)
            dw = np.zeros(M)
            v = (x - anchor) if has_pen else None
            dv = np.zeros(N) if has_pen else None

        feas_tol = cfg.feas_tol(y)
        anchor_norm = float(np.linalg.norm(anchor)) if has_pen else 0.0
        sqrt_dim_p = math.sqrt((2 if has_pen else 1) * N + M)
        sqrt_n = math.sqrt(N)
        history = []

        best_obj = math.inf
        best_x = None
        if warm_start is not None:
            ws_gap = max(0.0, float(np.linalg.norm(A @ warm_start - y)) - eps)
            if ws_gap <= feas_tol:
                best_obj = _objective(warm_start, lam, penalty, anchor)
                best_x = np.array(warm_start, dtype=float)

        it = 0
        converged = False
        pri = dual = math.inf
        Ax = A @ x
        for it in range(1, cfg.max_inner_iters + 1):
            rhs = (u - du) + A.T @ (w - dw)
            if has_pen:
                rhs += anchor + v - dv
            x = apply_inv(rhs)
            Ax = A @ x

            hu = alpha * x + (1 - alpha) * u
            hw = alpha * Ax + (1 - alpha) * w
            u_old, w_old = u, w
            u = soft_threshold(hu + du, l1_weight / rho)
            w = project_ball(hw + dw, y, eps)
            du = du + hu - u
            dw = dw + hw - w
            dz = (u - u_old) + A.T @ (w - w_old)
            dsum = du + A.T @ dw
            if has_pen:
                hv = alpha * (x - anchor) + (1 - alpha) * v
                v_old = v
                sv = hv + dv
                t = (1.0 - lam) / rho
                v = soft_threshold(sv, t) if penalty == "l1" else block_shrink(sv, t)
                dv = dv + hv - v
                dz += v - v_old
                dsum += dv
                rv = x - anchor - v
            ru = x - u
            rw = Ax - w
            pri_sq = ru @ ru + rw @ rw
            fx_sq = 2.0 * (x @ x) + Ax @ Ax if has_pen else x @ x + Ax @ Ax
            z_sq = u @ u + w @ w
            if has_pen:
                pri_sq += rv @ rv
                z_sq += v @ v
            pri = math.sqrt(pri_sq)
            dual = rho * float(np.linalg.norm(dz))
            eps_pri = sqrt_dim_p * cfg.tol_abs + cfg.tol_rel * max(
                math.sqrt(fx_sq), math.sqrt(z_sq), anchor_norm)
            eps_dual = sqrt_n * cfg.tol_abs + cfg.tol_rel * rho * float(
                np.linalg.norm(dsum))
            gap = max(0.0, float(np.linalg.norm(Ax - y)) - eps)
            if cfg.keep_history:
                history.append((pri, dual))

            obj = _objective(x, lam, penalty, anchor)
            if gap <= feas_tol and obj < best_obj:
                best_obj, best_x = obj, x

            if pri <= eps_pri and dual <= eps_dual and gap <= feas_tol:
                converged = True
                break

            if cfg.adapt_rho and it % cfg.adapt_every == 0:
                if pri > 10.0 * dual and rho < 1e6:
                    rho *= 2.0
                    du /= 2.0
                    dw /= 2.0
                    if has_pen:
                        dv /= 2.0
                elif dual > 10.0 * pri and rho > 1e-6:
                    rho /= 2.0
                    du *= 2.0
                    dw *= 2.0
                    if has_pen:
                        dv *= 2.0

        self._state = (penalty, x, u, v, w, du, dv, dw, rho)
        gap = max(0.0, float(np.linalg.norm(Ax - y)) - eps)
        obj = _objective(x, lam, penalty, anchor)
        x_ret, obj_ret, gap_ret = x, obj, gap
        if not converged and best_x is not None and best_obj < obj:
            # best feasible iterate seen, per the non-convergence contract
            x_ret = best_x
            obj_ret = best_obj
            gap_ret = max(0.0, float(np.linalg.norm(A @ best_x - y)) - eps)
        return SolveReport(
            x_hat=x_ret,
            inner_iters=it,
            primal_residual=pri,
            dual_residual=dual,
            feasibility_gap=gap_ret,
            objective=obj_ret,
            converged=converged,
            status="converged" if converged else "max_iters_exceeded",
            residual_history=history,
        )


def solve_penalized_bpdn(problem: PenalizedBpdnProblem,
                         config: SolverConfig | None = None,
                         warm_start: np.ndarray | None = None) -> SolveReport:
    """One-shot solve of the penalized BPDN program."""
    solver = BpdnNodeSolver(problem.A, problem.y, problem.epsilon, config)
    return solver.solve(problem.lam, problem.penalty, problem.anchor,
                        warm_start=warm_start, reuse_state=False)
