"""Closed-form constants of the estimation-error bounds and their validity flags.

All constants are evaluated exactly as printed in the error analysis; when a
printed denominator is nonpositive the value still evaluates (to inf/nan or a
negative number) and the corresponding validity flag is False, so reports stay
auditable without pretending the bound applies.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

GEOMETRIC_EPS = 1e-12


class InvalidPartition(ValueError):
    """Partition orders must satisfy a < b <= 4a."""


def default_partition(s: int) -> tuple[int, int]:
    """The simplifying choice s = 4a = b, rounded up: a = ceil(s/4), b = 4a."""
    a = max(1, math.ceil(s / 4))
    return a, 4 * a


def ric_frontier_2s(lam: float) -> float:
    """Largest delta_2s compatible with the recovery condition at s = 4a = b.

    Derived by bounding delta_{1.25s} <= delta_2s and theta_{1.25s,s} <=
    sqrt(1.25) delta_2s; approaches 0.472 as lam -> 1, zero at lam = 1/2.
    """
    if lam <= 0.5:
        return 0.0
    return (2 * lam - 1) / (2 * lam - 1 + math.sqrt(1.25))


def _geometric(c: float, K: int) -> float:
    """(c^K - 1)/(c - 1), with the K limit at c = 1."""
    if abs(c - 1.0) < GEOMETRIC_EPS:
        return float(K)
    try:
        num = c ** K - 1.0
    except OverflowError:
        return math.inf
    return num / (c - 1.0)


def _div(num: float, den: float) -> float:
    if den == 0.0:
        return math.inf if num > 0 else (-math.inf if num < 0 else math.nan)
    return num / den


@dataclass(frozen=True)
class BoundConstants:
    # inputs
    delta_sa: float
    delta_2s: float
    delta_s: float
    theta: float
    lam: float
    s: int
    a: int
    b: int
    K: int
    # derived
    lam_prime: float
    lam_dprime: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c7: float
    c8: float
    c9: float
    c10: float
    c11: float
    c12: float
    c13: float
    c14: float
    c15: float
    d1: float
    d2: float
    d3: float
    d4: float
    valid: dict
    condition_theorem5_printed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def bound_constants(delta_sa: float, delta_2s: float, delta_s: float,
                    theta: float, lam: float, s: int, a: int, b: int,
                    K: int = 1) -> BoundConstants:
    """Evaluate c1..c15, d1..d4 and the per-theorem validity flags.

    delta_sa is delta_{s+a}, theta is theta_{s+a,b}; K is the iteration count
    entering the geometric-sum factors d1..d4.
    """
    if not (0 < a < b <= 4 * a):
        raise InvalidPartition(f"need 0 < a < b <= 4a, got a={a}, b={b}")
    if not (0.0 <= lam <= 1.0):
        raise ValueError("lam must be in [0, 1]")
    for name, val in (("delta_sa", delta_sa), ("delta_2s", delta_2s),
                      ("delta_s", delta_s)):
        if not (0.0 <= val < 1.0):
            raise ValueError(f"{name} must be in [0, 1), got {val}")
    if theta < 0:
        raise ValueError("theta must be nonnegative")

    sqrt_sb = math.sqrt(s / b)
    lam_p = max(lam, 0.5)
    lam_pp = max(lam, 1.0 / (1.0 + math.sqrt(s)))

    c1 = (1.0 - delta_sa - sqrt_sb * _div(theta, 2 * lam - 1)
          if lam > 0.5 else -math.inf)
    c5 = 1.0 - delta_sa - sqrt_sb * (2 * lam_p - 1) * theta
    ratio5 = _div(theta, c5)
    c2 = 2 * (1 - lam) * (1 + 2 * lam * sqrt_sb * ratio5)
    c3 = 2 * lam * (1 + 2 * lam * sqrt_sb * ratio5)
    c4 = _div(4 * lam * math.sqrt(s * (1 + delta_sa)), c5)
    c6 = 2 * (1 + 2 * sqrt_sb * ratio5)
    c7 = _div(4 * math.sqrt(s * (1 + delta_sa)), c5)

    kappa = (lam_pp * (1 + math.sqrt(s)) - 1) / math.sqrt(b)
    c8 = 1.0 - delta_sa - kappa * theta
    ratio8 = _div(theta, c8)
    c9 = _div(2 * (1 - lam), lam * math.sqrt(b)) * (1 + (1 + kappa) * ratio8)
    c10 = (2 / math.sqrt(b)) * (1 + (1 + kappa) * ratio8)
    c11 = (1 + kappa) * _div(2 * math.sqrt(1 + delta_sa), c8)

    den6 = 1.0 - delta_sa - sqrt_sb * theta
    c12 = (2 / math.sqrt(b)) * (1 + _div(theta * math.sqrt(1 + s / b), den6))
    c13 = _div(2 * math.sqrt(1 + s / b) * math.sqrt(1 + delta_sa), den6)

    prune_l1 = math.sqrt(_div(2 * s, 1 - delta_2s ** 2))
    prune_l2 = math.sqrt(_div(2.0, 1 - delta_2s ** 2))
    c14 = c2 * prune_l1
    c15 = c9 * prune_l2

    g2 = _geometric(c2, K)
    g9 = _geometric(c9, K)
    d1 = g2 * (c4 + c2 * c7)
    d2 = g2 * (c3 + c2 * c6)
    d3 = g9 * (c11 + c9 * c13)
    d4 = g9 * (c10 + c9 * c12)

    cond_thm1 = lam > 0.5 and c1 > 0
    cond_thm2 = c5 > 0
    cond_thm3 = den6 > 0
    cond_thm5 = c8 > 0
    cond_thm5_printed = delta_sa + sqrt_sb * (2 * lam_pp - 1) * theta < 1
    valid = {
        "theorem1": cond_thm1,
        "theorem2": cond_thm2,
        "theorem3": cond_thm3,
        "theorem4": cond_thm1,
        "theorem5": cond_thm5,
        "theorem6": cond_thm3,
        "theorem7": {"part1": cond_thm1 and delta_2s < 1,
                     "part2": cond_thm3 and delta_2s < 1},
        "theorem8": {"part1": cond_thm1 and delta_2s < 1,
                     "part2": cond_thm3 and delta_2s < 1},
    }

    return BoundConstants(
        delta_sa=delta_sa, delta_2s=delta_2s, delta_s=delta_s, theta=theta,
        lam=lam, s=s, a=a, b=b, K=K,
        lam_prime=lam_p, lam_dprime=lam_pp,
        c1=c1, c2=c2, c3=c3, c4=c4, c5=c5, c6=c6, c7=c7, c8=c8, c9=c9,
        c10=c10, c11=c11, c12=c12, c13=c13, c14=c14, c15=c15,
        d1=d1, d2=d2, d3=d3, d4=d4,
        valid=valid, condition_theorem5_printed=cond_thm5_printed,
    )


def error_bound_theorem1(c: BoundConstants, eps: float, tail_l1: float) -> float:
    """Per-iteration l2 error bound for the l1-penalty variant (lam > 1/2)."""
    lam = c.lam
    coef_eps = 4 * lam * math.sqrt(c.s * (1 + c.delta_sa)) / (c.c1 * (2 * lam - 1))
    coef_tail = (2 * lam / (2 * lam - 1)) * (
        1 + (2 * lam / (2 * lam - 1)) * math.sqrt(c.s / c.b) * c.theta / c.c1)
    return coef_eps * eps + coef_tail * tail_l1


def error_bound_theorem3(c: BoundConstants, eps: float, tail_l1: float) -> float:
    """Iteration-K l1-variant bound for any lam."""
    return c.d1 * eps + c.d2 * tail_l1


def error_bound_theorem6(c: BoundConstants, eps: float, tail_l1: float) -> float:
    """Iteration-K l2-variant bound for any lam."""
    return c.d3 * eps + c.d4 * tail_l1


def error_bound_pruned(c: BoundConstants, eps: float, variant: str, part: int = 1) -> float:
    """Pruned-variant bounds (exactly s-sparse signals; error scales with eps only)."""
    if part == 1:
        coef = (4 * c.lam * math.sqrt(2 * c.s * (1 + c.delta_sa))
                / (c.c1 * (2 * c.lam - 1) * math.sqrt(1 - c.delta_2s ** 2))
                + math.sqrt(1 + c.delta_s) / (1 - c.delta_2s))
        return coef * eps
    if variant == "l1":
        g = _geometric(c.c14, c.K)
        coef = ((c.c4 + c.c14 * c.c7) * math.sqrt(2 * c.s / (1 - c.delta_2s ** 2))
                + (1 + c.c14) * math.sqrt(2 * c.s * (1 + c.delta_s)) / (1 - c.delta_2s))
    else:
        g = _geometric(c.c15, c.K)
        coef = ((c.c11 + c.c15 * c.c13) * math.sqrt(2 / (1 - c.delta_2s ** 2))
                + (1 + c.c15) * math.sqrt(1 + c.delta_s) / (1 - c.delta_2s))
    return g * coef * eps
