"""Random chain sets, composite (lattice + chain) graphs and decoding.

A chain at lattice site ``i`` is a path of ``n_i`` extra qubits hanging off
lattice qubit ``i`` along z: ``i - c_1 - ... - c_{n_i}``, giving ``n_i``
ferromagnetic bonds of strength ``jc``. With the default ``route="diagonal"``
the diagonal (J2) bonds of a chained site terminate on the far end qubit
``c_{n_i}`` while its nearest-neighbor bonds stay on the lattice qubit, so
a chain that breaks can relieve frustrated diagonal bonds.
``route="none"`` leaves every lattice bond on the lattice qubit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .model import ProblemGraph, energies, graph_from_edges

Route = Literal["diagonal", "none"]


class ChainSamplingError(RuntimeError):
    """No chain set with the requested total was found."""


@dataclass(frozen=True)
class ChainSet:
    """Chains as (site, length) pairs, kept sorted by site."""

    chains: tuple[tuple[int, int], ...]

    def __post_init__(self):
        chains = tuple(sorted((int(s), int(n)) for s, n in self.chains))
        sites = [s for s, _ in chains]
        if len(set(sites)) != len(sites):
            raise ValueError("chain sites must be distinct")
        if any(n < 1 for _, n in chains) or any(s < 0 for s in sites):
            raise ValueError("chain lengths must be >= 1 and sites >= 0")
        object.__setattr__(self, "chains", chains)

    @property
    def nc(self) -> int:
        return sum(n for _, n in self.chains)

    @property
    def bond_count(self) -> int:
        return self.nc

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.chains)

    def validate(self, L: int) -> None:
        for s, n in self.chains:
            if s >= L * L:
                raise ValueError(f"chain site {s} outside the {L}x{L} lattice")
            if n > L:
                raise ValueError(f"chain length {n} at site {s} exceeds L={L}")

    def to_json(self) -> dict:
        return {"chains": [{"site": s, "length": n} for s, n in self.chains]}

    @classmethod
    def from_json(cls, doc: dict) -> "ChainSet":
        return cls(tuple((c["site"], c["length"]) for c in doc["chains"]))


def sample_chains(L: int, num_chains: int, rng_seed: int | np.random.Generator = 0) -> ChainSet:
    """Distinct sites uniformly without replacement, lengths uniform in 1..L."""
    if not 1 <= num_chains <= L * L:
        raise ValueError(f"num_chains must lie in [1, {L * L}], got {num_chains}")
    rng = np.random.default_rng(rng_seed)
    sites = rng.choice(L * L, size=num_chains, replace=False)
    lengths = rng.integers(1, L + 1, size=num_chains)
    return ChainSet(tuple(zip(sites.tolist(), lengths.tolist())))


def _composition_counts(L: int, kmax: int, total: int) -> np.ndarray:
    # ways[k, t]: sequences of k lengths in 1..L summing to t (floats, exact up to 2**53)
    ways = np.zeros((kmax + 1, total + 1))
    ways[0, 0] = 1.0
    for k in range(1, kmax + 1):
        for n in range(1, L + 1):
            ways[k, n:] += ways[k - 1, : total + 1 - n]
    return ways


def sample_chains_with_total(
    L: int,
    target_nc: int,
    max_tries: int = 100_000,
    rng_seed: int = 0,
    method: Literal["conditional", "rejection"] = "conditional",
) -> ChainSet:
    """Random chain set whose lengths sum exactly to ``target_nc``.

    The number of chains is uniform in [1, L^2] before conditioning on the
    total. ``rejection`` redraws until the total matches and raises
    :class:`ChainSamplingError` after ``max_tries``. ``conditional`` samples
    the same conditional distribution directly, which also reaches rare
    totals such as ``L**3``.
    """
    n_sites = L * L
    if not 1 <= target_nc <= L * n_sites:
        raise ChainSamplingError(f"N_c={target_nc} is not reachable on a {L}x{L} lattice")
    rng = np.random.default_rng(rng_seed)

    if method == "rejection":
        for _ in range(max_tries):
            k = int(rng.integers(1, n_sites + 1))
            sites = rng.choice(n_sites, size=k, replace=False)
            lengths = rng.integers(1, L + 1, size=k)
            if int(lengths.sum()) == target_nc:
                return ChainSet(tuple(zip(sites.tolist(), lengths.tolist())))
        raise ChainSamplingError(
            f"no chain set with N_c={target_nc} found in {max_tries} draws (L={L})"
        )
    if method != "conditional":
        raise ValueError(f"unknown method {method!r}")

    ways = _composition_counts(L, n_sites, target_nc)
    ks = np.arange(n_sites + 1)
    # P(k | sum) ∝ ways[k, target] / L**k
    logw = np.full(n_sites + 1, -np.inf)
    ok = ways[:, target_nc] > 0
    ok[0] = False
    logw[ok] = np.log(ways[ok, target_nc]) - ks[ok] * np.log(L)
    w = np.exp(logw - logw.max())
    k = int(rng.choice(ks, p=w / w.sum()))

    lengths = []
    remaining = target_nc
    for left in range(k, 0, -1):
        opts = np.arange(1, L + 1)
        weights = np.array(
            [ways[left - 1, remaining - n] if remaining - n >= 0 else 0.0 for n in opts]
        )
        n = int(rng.choice(opts, p=weights / weights.sum()))
        lengths.append(n)
        remaining -= n
    sites = rng.choice(n_sites, size=k, replace=False)
    return ChainSet(tuple(zip(sites.tolist(), lengths)))


@dataclass(frozen=True, eq=False)
class EmbeddedProblem:
    base: ProblemGraph
    chains: ChainSet
    jc: float
    composite: ProblemGraph
    route: Route = "diagonal"
    # per chain: composite qubit indices, lattice qubit first
    groups: tuple[np.ndarray, ...] = field(default=(), repr=False)

    @property
    def num_sites(self) -> int:
        return self.base.num_qubits

    @property
    def nc(self) -> int:
        return self.chains.nc

    def to_json(self) -> dict:
        doc = self.composite.to_json()
        doc.update(jc=self.jc, route=self.route, **self.chains.to_json())
        return doc


def embed(base: ProblemGraph, chains: ChainSet, jc: float, route: Route = "diagonal") -> EmbeddedProblem:
    """Attach chains to ``base`` and return the composite problem.

    Lattice qubits keep indices ``0..L^2-1``; chain qubits follow in site
    order, each chain contiguous and starting next to its lattice qubit.
    """
    if jc < 0:
        raise ValueError(f"jc must be >= 0, got {jc}")
    if route not in ("diagonal", "none"):
        raise ValueError(f"unknown route {route!r}")
    n_sites = base.num_qubits
    if base.L is not None:
        chains.validate(base.L)
    elif any(s >= n_sites for s in chains.sites):
        raise ValueError("chain site outside the base graph")

    terminal = np.arange(n_sites)
    groups = []
    chain_edges: list[tuple[int, int, float]] = []
    nxt = n_sites
    for s, n in chains.chains:
        qubits = np.arange(nxt, nxt + n)
        groups.append(np.concatenate([[s], qubits]))
        prev = s
        for q in qubits:
            chain_edges.append((prev, int(q), jc))
            prev = int(q)
        terminal[s] = qubits[-1]
        nxt += n
    num_qubits = nxt

    triples = []
    kinds = []
    for (i, j), J, kind in zip(base.edges, base.couplings, base.kinds):
        if route == "diagonal" and kind == "diag":
            i, j = terminal[i], terminal[j]
        triples.append((int(i), int(j), float(J)))
        kinds.append(kind)
    triples += chain_edges
    kinds += ["chain"] * len(chain_edges)

    g = graph_from_edges(num_qubits, triples, kinds)
    labels = ("lattice",) * n_sites + ("chain",) * (num_qubits - n_sites)
    composite = ProblemGraph(g.num_qubits, g.edges, g.couplings, g.kinds, labels, L=base.L)
    return EmbeddedProblem(base, chains, float(jc), composite, route, tuple(groups))


def extend_config(lattice_config: np.ndarray, embedded: EmbeddedProblem) -> np.ndarray:
    """Copy each chained site's spin down its chain."""
    lattice_config = np.asarray(lattice_config)
    batch = lattice_config.reshape(-1, embedded.num_sites)
    out = np.empty((len(batch), embedded.composite.num_qubits), dtype=np.int8)
    out[:, : embedded.num_sites] = batch
    for grp in embedded.groups:
        out[:, grp[1:]] = batch[:, grp[:1]]
    return out[0] if lattice_config.ndim == 1 else out


def decode_batch(
    configs: np.ndarray, embedded: EmbeddedProblem, policy: Literal["strict", "majority"] = "strict"
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`decode` over rows of ``configs``."""
    configs = np.asarray(configs)
    if configs.ndim != 2 or configs.shape[1] != embedded.composite.num_qubits:
        raise ValueError(
            f"configs must have {embedded.composite.num_qubits} columns, got shape {configs.shape}"
        )
    if policy not in ("strict", "majority"):
        raise ValueError(f"unknown policy {policy!r}")
    lattice = configs[:, : embedded.num_sites].astype(np.int8, copy=True)
    broken = np.zeros(len(configs), dtype=np.int64)
    for grp in embedded.groups:
        vals = configs[:, grp].astype(np.int64)
        total = vals.sum(axis=1)
        broken += np.abs(total) != len(grp)
        if policy == "majority":
            site = grp[0]
            lattice[:, site] = np.where(total > 0, 1, np.where(total < 0, -1, configs[:, site]))
    return lattice, broken


def decode(
    config: np.ndarray, embedded: EmbeddedProblem, policy: Literal["strict", "majority"] = "strict"
) -> tuple[np.ndarray, int]:
    """Lattice configuration and number of non-unanimous chains.

    ``strict`` keeps the raw lattice qubits; ``majority`` votes over each
    chain group and breaks ties toward the lattice qubit.
    """
    config = np.asarray(config)
    if config.ndim != 1 or len(config) != embedded.composite.num_qubits:
        raise ValueError(
            f"config length {len(config)} != composite size {embedded.composite.num_qubits}"
        )
    lattice, broken = decode_batch(config[None, :], embedded, policy)
    return lattice[0], int(broken[0])


def total_ground_energy(embedded: EmbeddedProblem, eg_per_site: float) -> float:
    """Ground energy with intact chains: ``L^2 * E_g - N_c * jc``."""
    return embedded.num_sites * eg_per_site - embedded.nc * embedded.jc


def chain_term(config: np.ndarray, embedded: EmbeddedProblem) -> float:
    """Energy carried by chain bonds alone."""
    mask = embedded.composite.kind_mask("chain")
    edges = embedded.composite.edges[mask]
    s = np.asarray(config, dtype=np.float64)
    return float(-(embedded.composite.couplings[mask] * s[edges[:, 0]] * s[edges[:, 1]]).sum())


def composite_energy_of_lattice(lattice_config: np.ndarray, embedded: EmbeddedProblem) -> float:
    return float(energies(embedded.composite, extend_config(lattice_config, embedded)[None, :])[0])
