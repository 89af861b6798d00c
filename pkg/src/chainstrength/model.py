"""J1-J2 square-lattice Ising instances and energy evaluation.

Every graph in this package uses the energy convention

    H(s) = -sum_edges J_ij * s_i * s_j

so a positive stored coupling is ferromagnetic. The lattice builder takes
``J1``/``J2`` in the usual frustrated-model convention (positive means
antiferromagnetic) and stores ``-J1``/``-J2`` on the edges; see
:class:`LatticeSpec`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

ENERGY_TOL = 1e-9

EdgeKind = Literal["nn", "diag", "chain", "other"]
OrderLabel = Literal["uniform", "neel", "stripe_h", "stripe_v", "other"]


@dataclass(frozen=True)
class LatticeSpec:
    """Side length, couplings and boundary of an L x L J1-J2 lattice.

    ``sign="antiferro"`` (default) gives ``H = J1 sum_nn s s + J2 sum_diag s s``,
    the form in which ``J2/J1 = 0.5`` is the fully frustrated point.
    ``sign="ferro"`` stores the couplings unchanged, ``H = -J1 sum - J2 sum``.
    """

    L: int
    J1: float = 1.0
    J2: float = 0.0
    boundary: Literal["periodic", "open"] = "periodic"
    sign: Literal["antiferro", "ferro"] = "antiferro"

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ValueError(f"L must be an integer >= 2, got {self.L!r}")
        if self.J1 == 0:
            raise ValueError("J1 must be nonzero; couplings are reported as ratios to J1")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")
        if self.sign not in ("antiferro", "ferro"):
            raise ValueError(f"sign must be 'antiferro' or 'ferro', got {self.sign!r}")

    @property
    def num_sites(self) -> int:
        return self.L * self.L


@dataclass(frozen=True)
class DisorderSpec:
    """Each diagonal bond independently becomes ``j2_high`` with probability ``x``."""

    x: float
    j2_low: float = 0.25
    j2_high: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"x must lie in [0, 1], got {self.x}")
        if self.j2_high is None:
            object.__setattr__(self, "j2_high", 1.0 - self.j2_low)
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class ProblemGraph:
    """Weighted undirected coupling graph over +-1 spins.

    ``edges`` is an (m, 2) integer array with ``i < j``; ``couplings`` holds
    J for each edge; ``kinds`` tags each edge as nn/diag/chain/other and
    ``labels`` tags each qubit as lattice/chain.
    """

    num_qubits: int
    edges: np.ndarray
    couplings: np.ndarray
    kinds: tuple[str, ...] = ()
    labels: tuple[str, ...] = ()
    L: int | None = None

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        couplings = np.asarray(self.couplings, dtype=np.float64).reshape(-1)
        if len(edges) != len(couplings):
            raise ValueError("edges and couplings differ in length")
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        if len(edges):
            if edges.min() < 0 or edges.max() >= self.num_qubits:
                raise ValueError("edge index out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
            edges = np.sort(edges, axis=1)
            keys = edges[:, 0] * self.num_qubits + edges[:, 1]
            if len(np.unique(keys)) != len(keys):
                raise ValueError("duplicate edge")
        kinds = tuple(self.kinds) if self.kinds else ("other",) * len(edges)
        labels = tuple(self.labels) if self.labels else ("lattice",) * self.num_qubits
        if len(kinds) != len(edges) or len(labels) != self.num_qubits:
            raise ValueError("kinds/labels length mismatch")
        edges.setflags(write=False)
        couplings.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "labels", labels)

    @property
    def num_edges(self) -> int:
        return len(self.couplings)

    def edge_list(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(J)) for (i, j), J in zip(self.edges, self.couplings)]

    def kind_mask(self, kind: str) -> np.ndarray:
        return np.array([k == kind for k in self.kinds], dtype=bool)

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric adjacency as (indptr, neighbors, couplings)."""
        return _csr(self.num_qubits, self.edges, self.couplings)

    def to_json(self) -> dict:
        doc = {
            "num_qubits": self.num_qubits,
            "edges": [[i, j, J] for i, j, J in self.edge_list()],
            "labels": list(self.labels),
            "kinds": list(self.kinds),
        }
        if self.L is not None:
            doc["L"] = self.L
        return doc

    @classmethod
    def from_json(cls, doc: dict | str) -> "ProblemGraph":
        if isinstance(doc, str):
            doc = json.loads(doc)
        rows = doc.get("edges", [])
        edges = np.array([[r[0], r[1]] for r in rows], dtype=np.int64).reshape(-1, 2)
        couplings = np.array([r[2] for r in rows], dtype=np.float64)
        return cls(
            num_qubits=int(doc["num_qubits"]),
            edges=edges,
            couplings=couplings,
            kinds=tuple(doc.get("kinds", ())),
            labels=tuple(doc.get("labels", ())),
            L=doc.get("L"),
        )


def _csr(n: int, edges: np.ndarray, couplings: np.ndarray):
    if len(edges) == 0:
        return np.zeros(n + 1, np.int64), np.zeros(0, np.int64), np.zeros(0, np.float64)
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    val = np.concatenate([couplings, couplings])
    order = np.lexsort((dst, src))
    src, dst, val = src[order], dst[order], val[order]
    indptr = np.zeros(n + 1, np.int64)
    np.add.at(indptr, src + 1, 1)
    return np.cumsum(indptr), dst.astype(np.int64), val.astype(np.float64)


def graph_from_edges(
    num_qubits: int,
    edges: Iterable[tuple[int, int, float]],
    kinds: Sequence[str] | None = None,
) -> ProblemGraph:
    """Build a graph from (i, j, J) triples, merging repeated pairs by summing J."""
    merged: dict[tuple[int, int], float] = {}
    merged_kind: dict[tuple[int, int], str] = {}
    for n, (i, j, J) in enumerate(edges):
        key = (min(i, j), max(i, j))
        merged[key] = merged.get(key, 0.0) + float(J)
        merged_kind.setdefault(key, kinds[n] if kinds is not None else "other")
    keys = list(merged)
    return ProblemGraph(
        num_qubits=num_qubits,
        edges=np.array(keys, dtype=np.int64).reshape(-1, 2),
        couplings=np.array([merged[k] for k in keys]),
        kinds=tuple(merged_kind[k] for k in keys),
    )


def site(r: int, c: int, L: int) -> int:
    return r * L + c


def build_j1j2_lattice(spec: LatticeSpec) -> ProblemGraph:
    """Square lattice with nearest-neighbor J1 and both plaquette diagonals J2.

    Under periodic boundaries at L=2 the wrap-around bonds coincide with
    the direct ones; those pairs are merged into one edge with summed
    coupling.
    """
    L = spec.L
    periodic = spec.boundary == "periodic"
    sgn = -1.0 if spec.sign == "antiferro" else 1.0
    triples: list[tuple[int, int, float]] = []
    kinds: list[str] = []

    def add(r0, c0, r1, c1, J, kind):
        if not periodic and not (0 <= r1 < L and 0 <= c1 < L):
            return
        triples.append((site(r0, c0, L), site(r1 % L, c1 % L, L), sgn * J))
        kinds.append(kind)

    for r in range(L):
        for c in range(L):
            add(r, c, r, c + 1, spec.J1, "nn")
            add(r, c, r + 1, c, spec.J1, "nn")
    for r in range(L):
        for c in range(L):
            add(r, c, r + 1, c + 1, spec.J2, "diag")
            add(r, c, r + 1, c - 1, spec.J2, "diag")

    g = graph_from_edges(L * L, triples, kinds)
    return ProblemGraph(g.num_qubits, g.edges, g.couplings, g.kinds, L=L)


def apply_diagonal_disorder(
    graph: ProblemGraph, spec: DisorderSpec, sign: Literal["antiferro", "ferro"] = "antiferro"
) -> ProblemGraph:
    """Redraw every diagonal bond: ``j2_high`` with probability ``x``, else ``j2_low``.

    ``sign`` must match the convention the lattice was built with.
    """
    diag = graph.kind_mask("diag")
    rng = np.random.default_rng(spec.seed)
    strong = rng.random(int(diag.sum())) < spec.x
    sgn = -1.0 if sign == "antiferro" else 1.0
    couplings = graph.couplings.copy()
    couplings[diag] = sgn * np.where(strong, spec.j2_high, spec.j2_low)
    return ProblemGraph(
        graph.num_qubits, graph.edges.copy(), couplings, graph.kinds, graph.labels, graph.L
    )


def energies(graph: ProblemGraph, configs: np.ndarray) -> np.ndarray:
    """Energies of a batch of configurations, shape (batch, num_qubits)."""
    configs = np.asarray(configs)
    if configs.ndim != 2 or configs.shape[1] != graph.num_qubits:
        raise ValueError(
            f"configs must have shape (batch, {graph.num_qubits}), got {configs.shape}"
        )
    if graph.num_edges == 0:
        return np.zeros(len(configs))
    s = configs.astype(np.float64)
    prods = s[:, graph.edges[:, 0]] * s[:, graph.edges[:, 1]] * graph.couplings
    return -prods.sum(axis=1)


def energy(graph: ProblemGraph, config: Sequence[int] | np.ndarray) -> float:
    config = np.asarray(config)
    if config.ndim != 1 or len(config) != graph.num_qubits:
        raise ValueError(f"config length {len(config)} != num_qubits {graph.num_qubits}")
    return float(energies(graph, config[None, :])[0])


def validate_config(config: np.ndarray, n: int) -> np.ndarray:
    config = np.asarray(config)
    if config.shape != (n,):
        raise ValueError(f"expected {n} spins, got shape {config.shape}")
    if not np.all(np.abs(config) == 1):
        raise ValueError("spins must be exactly -1 or +1")
    return config.astype(np.int8)


def reference_patterns(L: int) -> dict[str, np.ndarray]:
    r, c = np.divmod(np.arange(L * L), L)
    return {
        "uniform": np.ones(L * L, dtype=np.int8),
        "neel": np.where((r + c) % 2 == 0, 1, -1).astype(np.int8),
        "stripe_h": np.where(r % 2 == 0, 1, -1).astype(np.int8),
        "stripe_v": np.where(c % 2 == 0, 1, -1).astype(np.int8),
    }


def classify_order(config: Sequence[int] | np.ndarray, L: int) -> OrderLabel:
    """Match against uniform, Neel and the two stripe patterns (up to global flip)."""
    config = np.asarray(config)
    if len(config) != L * L:
        raise ValueError("config length must equal L*L")
    for name, pattern in reference_patterns(L).items():
        if np.array_equal(config, pattern) or np.array_equal(config, -pattern):
            return name
    return "other"
