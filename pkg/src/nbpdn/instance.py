"""Synthetic problem instances: sparse signal, per-node observations, noise.

Each node l observes y_l = A_l x + e_l for a common sparse x; the noise is
Gaussian, calibrated so the expected energy ratio matches a configured SNR,
and bounded by an epsilon that every inner solve uses as its residual budget.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

CONSTRUCTION_RTOL = 1e-12


class InvalidSparsity(ValueError):
    """Requested sparsity outside [1, N]."""


@dataclass(frozen=True)
class SparseSignal:
    """Signal x with support of size s; zero off-support in exactly-sparse mode."""

    values: np.ndarray
    support: tuple[int, ...]
    sparsity: int

    def __post_init__(self):
        x = np.array(self.values, dtype=float)
        x.flags.writeable = False
        object.__setattr__(self, "values", x)
        object.__setattr__(self, "support", tuple(int(i) for i in self.support))
        if len(self.support) != self.sparsity:
            raise InvalidSparsity("support size does not match sparsity")
        if self.sparsity > x.size:
            raise InvalidSparsity("sparsity exceeds dimension")

    @property
    def dimension(self) -> int:
        return self.values.size

    def energy(self) -> float:
        return float(self.values @ self.values)


@dataclass(frozen=True)
class NodeObservation:
    """One node's data: y = A x + e, with the realized noise kept for diagnostics."""

    y: np.ndarray
    A: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        for name in ("y", "A", "e"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.A.shape[0] != self.y.size or self.e.size != self.y.size:
            raise ValueError("observation dimensions inconsistent")

    @property
    def size(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class ProblemInstance:
    signal: SparseSignal
    observations: tuple[NodeObservation, ...]
    epsilon: float
    snr_db: float  # math.inf means noiseless
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        x = self.signal.values
        for l, obs in enumerate(self.observations):
            resid = obs.y - obs.A @ x - obs.e
            scale = max(1.0, float(np.linalg.norm(obs.y)))
            if np.linalg.norm(resid) > CONSTRUCTION_RTOL * scale:
                raise ValueError(f"y != A x + e at node {l}")
            if np.linalg.norm(obs.e) > self.epsilon * (1 + 1e-12) + 1e-300:
                raise ValueError(f"noise at node {l} exceeds epsilon")

    @property
    def node_count(self) -> int:
        return len(self.observations)

    @property
    def dimension(self) -> int:
        return self.signal.dimension


def generate_signal(N: int, s: int, seed, mode: str = "exact", tail_scale: float = 0.05,
                    tail_decay: float = 0.7) -> SparseSignal:
    """Sparse signal with uniformly drawn support and standard normal nonzeros.

    ``mode="approx"`` additionally fills the off-support entries with a
    geometrically decaying tail (for exercising the off-support l1 terms of
    the error bounds); the nominal support/sparsity still refer to the s
    dominant entries.
    """
    if s < 1 or s > N:
        raise InvalidSparsity(f"need 1 <= s <= N, got s={s}, N={N}")
    rng = np.random.default_rng(seed)
    support = np.sort(rng.choice(N, size=s, replace=False))
    x = np.zeros(N)
    x[support] = rng.standard_normal(s)
    if mode == "approx" and s < N:
        off = np.setdiff1d(np.arange(N), support)
        mags = tail_scale * tail_decay ** np.arange(1, off.size + 1)
        signs = rng.choice([-1.0, 1.0], size=off.size)
        x[rng.permutation(off)] = mags * signs
        # keep the nominal support dominant
        floor = np.abs(x[support]).min()
        if floor <= mags[0]:
            x[support] += np.sign(x[support]) * mags[0]
    elif mode != "exact":
        raise ValueError(f"unknown signal mode {mode!r}")
    return SparseSignal(x, tuple(int(i) for i in support), s)


def statistical_epsilon(sigma: float, M: int, L: int) -> float:
    """High-probability bound on max_l ||e_l|| when e has i.i.d. N(0, sigma^2) entries."""
    return sigma * math.sqrt(M + 2 * math.sqrt(M * math.log(max(L, 2))))


def generate_observations(
    signal: SparseSignal,
    L: int,
    M,
    snr_db: float,
    seed,
    epsilon_policy: str = "realized",
) -> ProblemInstance:
    """Per-node Gaussian observations of a common signal.

    A_l has i.i.d. N(0, 1/M_l) entries so column norms concentrate at one;
    noise variance is set per node so E||e_l||^2 = ||x||^2 * 10^(-snr_db/10).
    ``snr_db=inf`` gives the noiseless model (e = 0, epsilon = 0).
    epsilon_policy: "realized" uses max_l ||e_l||; "statistical" uses
    sigma*sqrt(M + 2*sqrt(M log L)).
    """
    sizes = [int(M)] * L if np.isscalar(M) else [int(m) for m in M]
    if len(sizes) != L or any(m < 1 for m in sizes):
        raise ValueError("observation sizes must be positive, one per node")
    if not (math.isinf(snr_db) or math.isfinite(snr_db)):
        raise ValueError("snr_db must be finite or +inf")
    rng = np.random.default_rng(seed)
    x = signal.values
    noiseless = math.isinf(snr_db)
    obs = []
    realized = 0.0
    sigmas = []
    for m in sizes:
        A = rng.standard_normal((m, x.size)) / math.sqrt(m)
        if noiseless:
            e = np.zeros(m)
            sigmas.append(0.0)
        else:
            sigma = math.sqrt(signal.energy() * 10 ** (-snr_db / 10) / m)
            e = sigma * rng.standard_normal(m)
            sigmas.append(sigma)
        realized = max(realized, float(np.linalg.norm(e)))
        obs.append(NodeObservation(A @ x + e, A, e))
    if noiseless:
        eps = 0.0
    elif epsilon_policy == "realized":
        eps = realized
    elif epsilon_policy == "statistical":
        eps = max(
            statistical_epsilon(sig, m, L) for sig, m in zip(sigmas, sizes)
        )
        eps = max(eps, realized)  # Assumption on bounded noise must hold per trial
    else:
        raise ValueError(f"unknown epsilon policy {epsilon_policy!r}")
    seed_int = int(seed) if np.isscalar(seed) and not isinstance(seed, np.random.SeedSequence) else None
    return ProblemInstance(signal, tuple(obs), eps, snr_db, seed=seed_int)


def epsilon_for(instance: ProblemInstance) -> float:
    """Exact realized noise bound max_l ||e_l|| (safety factor 1)."""
    return max(float(np.linalg.norm(o.e)) for o in instance.observations)


# --- serialization -----------------------------------------------------------
#
# Binary container: one JSON header line (dims, seed, snr_db, epsilon and the
# byte layout), then the concatenated little-endian float64 arrays.

_MAGIC = "nbpdn-instance-v1"


def instance_to_bytes(instance: ProblemInstance) -> bytes:
    arrays = [("x", instance.signal.values)]
    for l, o in enumerate(instance.observations):
        arrays += [(f"y{l}", o.y), (f"A{l}", o.A), (f"e{l}", o.e)]
    layout = []
    offset = 0
    for name, arr in arrays:
        n = arr.size * 8
        layout.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += n
    header = {
        "format": _MAGIC,
        "N": instance.dimension,
        "L": instance.node_count,
        "M": [o.size for o in instance.observations],
        "s": instance.signal.sparsity,
        "support": list(instance.signal.support),
        "seed": instance.seed,
        "snr_db": None if math.isinf(instance.snr_db) else instance.snr_db,
        "epsilon": instance.epsilon,
        "layout": layout,
    }
    buf = io.BytesIO()
    buf.write(json.dumps(header).encode() + b"\n")
    for _, arr in arrays:
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return buf.getvalue()


def instance_from_bytes(data: bytes) -> ProblemInstance:
    nl = data.index(b"\n")
    header = json.loads(data[:nl].decode())
    if header.get("format") != _MAGIC:
        raise ValueError("not an instance container")
    body = data[nl + 1:]

    def read(name):
        spec = next(s for s in header["layout"] if s["name"] == name)
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(body, dtype="<f8", count=count, offset=spec["offset"])
        return arr.reshape(shape).copy()

    signal = SparseSignal(read("x"), tuple(header["support"]), header["s"])
    obs = tuple(
        NodeObservation(read(f"y{l}"), read(f"A{l}"), read(f"e{l}"))
        for l in range(header["L"])
    )
    snr = math.inf if header["snr_db"] is None else float(header["snr_db"])
    return ProblemInstance(signal, obs, float(header["epsilon"]), snr, seed=header["seed"])


def instance_to_json(instance: ProblemInstance) -> str:
    """Plain JSON form, intended for small desk-scale cases."""
    doc = {
        "format": _MAGIC,
        "x": instance.signal.values.tolist(),
        "support": list(instance.signal.support),
        "s": instance.signal.sparsity,
        "seed": instance.seed,
        "snr_db": None if math.isinf(instance.snr_db) else instance.snr_db,
        "epsilon": instance.epsilon,
        "observations": [
            {"y": o.y.tolist(), "A": o.A.tolist(), "e": o.e.tolist()}
            for o in instance.observations
        ],
    }
    return json.dumps(doc)


def instance_from_json(text: str) -> ProblemInstance:
    doc = json.loads(text)
    signal = SparseSignal(np.array(doc["x"]), tuple(doc["support"]), doc["s"])
    obs = tuple(
        NodeObservation(np.array(o["y"]), np.array(o["A"]), np.array(o["e"]))
        for o in doc["observations"]
    )
    snr = math.inf if doc["snr_db"] is None else float(doc["snr_db"])
    return ProblemInstance(signal, obs, float(doc["epsilon"]), snr, seed=doc["seed"])
