"""Connected regular topologies and right-stochastic weight matrices.

Nodes exchange estimates along the edges of a connected d-regular graph;
the mixing weights form a right-stochastic matrix H (rows sum to one,
entries nonnegative, zero off the edge pattern).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-12
MAX_PAIRING_ATTEMPTS = 1000


class InfeasibleDegree(ValueError):
    """No d-regular graph exists for the requested (L, d)."""


class ConnectivityFailure(RuntimeError):
    """Random pairing failed to produce a connected simple graph."""


@dataclass(frozen=True)
class NetworkTopology:
    """A connected d-regular graph on nodes 0..L-1.

    ``neighbor_sets[l]`` contains node l itself iff ``self_loops`` is set;
    the edge set never contains self edges.
    """

    node_count: int
    degree: int
    edges: frozenset[tuple[int, int]]
    self_loops: bool = True
    neighbor_sets: tuple[frozenset[int], ...] = field(init=False)

    def __post_init__(self):
        L, d = self.node_count, self.degree
        if not (1 <= d < L):
            raise InfeasibleDegree(f"degree {d} not in [1, {L - 1})")
        neigh = [set() for _ in range(L)]
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self edge ({i},{j}) not allowed")
            neigh[i].add(j)
            neigh[j].add(i)
        for l, nl in enumerate(neigh):
            if len(nl) != d:
                raise ValueError(f"node {l} has degree {len(nl)}, expected {d}")
        if not _connected(L, neigh):
            raise ConnectivityFailure("graph is not connected")
        if self.self_loops:
            for l in range(L):
                neigh[l].add(l)
        object.__setattr__(
            self, "neighbor_sets", tuple(frozenset(nl) for nl in neigh)
        )

    @property
    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted((min(i, j), max(i, j)) for i, j in self.edges)


@dataclass(frozen=True)
class NetworkMatrix:
    """Right-stochastic mixing matrix H; h[l, r] weights node r's estimate at node l."""

    weights: np.ndarray

    def __post_init__(self):
        H = np.array(self.weights, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("H must be square")
        if np.any(H < 0):
            raise ValueError("H has negative entries")
        row_err = np.max(np.abs(H.sum(axis=1) - 1.0))
        if row_err > ROW_SUM_TOL:
            raise ValueError(f"rows of H sum to 1 +/- {row_err:.2e} > {ROW_SUM_TOL}")
        H.flags.writeable = False
        object.__setattr__(self, "weights", H)

    @property
    def node_count(self) -> int:
        return self.weights.shape[0]

    def neighbors_in(self, l: int) -> np.ndarray:
        """Indices r with h[l, r] > 0 (the estimates node l actually reads)."""
        return np.nonzero(self.weights[l] > 0)[0]


def _connected(L: int, neigh) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in neigh[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == L


def generate_topology(L: int, d: int, seed, self_loops: bool = True) -> NetworkTopology:
    """Draw a connected d-regular graph by random stub pairing.

    Rejects pairings with self or duplicate edges and redraws until the
    graph is connected; deterministic for a fixed seed.
    """
    if L < 2 or d < 1 or d >= L:
        raise InfeasibleDegree(f"need 2 <= L and 1 <= d < L, got L={L}, d={d}")
    if (L * d) % 2 != 0:
        raise InfeasibleDegree(f"L*d = {L * d} is odd; no {d}-regular graph on {L} nodes")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(L), d)
    for _ in range(MAX_PAIRING_ATTEMPTS):
        perm = rng.permutation(stubs)
        pairs = perm.reshape(-1, 2)
        edges = set()
        ok = True
        for i, j in pairs:
            i, j = int(i), int(j)
            if i == j:
                ok = False
                break
            e = (min(i, j), max(i, j))
            if e in edges:
                ok = False
                break
            edges.add(e)
        if not ok:
            continue
        neigh = [set() for _ in range(L)]
        for i, j in edges:
            neigh[i].add(j)
            neigh[j].add(i)
        if _connected(L, neigh):
            return NetworkTopology(L, d, frozenset(edges), self_loops=self_loops)
    raise ConnectivityFailure(
        f"no connected {d}-regular graph on {L} nodes within "
        f"{MAX_PAIRING_ATTEMPTS} pairing attempts"
    )


def build_network_matrix(
    topology: NetworkTopology, scheme: str = "uniform-with-self", seed=None
) -> NetworkMatrix:
    """Build a right-stochastic H on the topology's sparsity pattern.

    ``uniform-with-self`` puts 1/(d+1) on the diagonal and on each neighbor;
    ``random-row-normalized`` draws U(0,1) weights on self+neighbors and
    normalizes each row.
    """
    L = topology.node_count
    H = np.zeros((L, L))
    if scheme == "uniform-with-self":
        w = 1.0 / (topology.degree + 1)
        for l in range(L):
            H[l, l] = w
            for r in topology.neighbor_sets[l]:
                H[l, r] = w
    elif scheme == "random-row-normalized":
        rng = np.random.default_rng(seed)
        for l in range(L):
            idx = sorted(set(topology.neighbor_sets[l]) | {l})
            H[l, idx] = rng.uniform(size=len(idx))
            H[l] /= H[l].sum()
    else:
        raise ValueError(f"unknown weight scheme {scheme!r}")
    return NetworkMatrix(H)


def identity_matrix(L: int) -> NetworkMatrix:
    """The no-cooperation network (self loops only)."""
    return NetworkMatrix(np.eye(L))


def matches_topology(matrix: NetworkMatrix, topology: NetworkTopology) -> bool:
    """True iff H is zero wherever (l, r) is not an edge and l != r."""
    H = matrix.weights
    allowed = np.eye(topology.node_count, dtype=bool)
    for i, j in topology.edges:
        allowed[i, j] = allowed[j, i] = True
    return bool(np.all(H[~allowed] == 0.0))


def serialize_network(topology: NetworkTopology, matrix: NetworkMatrix | None = None) -> str:
    """JSON form with lexicographically sorted edge list for byte-stable output."""
    doc = {
        "L": topology.node_count,
        "d": topology.degree,
        "edges": [list(e) for e in topology.sorted_edges],
    }
    if matrix is not None:
        doc["H"] = matrix.weights.tolist()
    return json.dumps(doc)


def deserialize_network(text: str) -> tuple[NetworkTopology, NetworkMatrix | None]:
    doc = json.loads(text)
    topo = NetworkTopology(
        doc["L"], doc["d"], frozenset(tuple(e) for e in doc["edges"])
    )
    H = NetworkMatrix(np.array(doc["H"])) if "H" in doc else None
    return topo, H
