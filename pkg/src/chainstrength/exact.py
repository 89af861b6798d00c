"""Exact ground/first-excited analysis by full enumeration.

A composite problem's energy is affine in the chain coupling:

    E(s; jc) = A(s) - jc * (C - 2 k(s))

with A the energy of all non-chain bonds, C the number of chain bonds and
k(s) the number of broken ones. One Gray-code pass records, per k, the
lowest A, its multiplicity and the next distinct A. That table gives
e0, g0 and e1 at any jc, so the whole gap curve costs one enumeration.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .embedding import ChainSet, Route, embed
from .model import ENERGY_TOL, ProblemGraph, _csr

DEFAULT_CAP = 30
KINK_STEP = 0.01
KINK_TOL = 1e-9


class EnumerationCapError(RuntimeError):
    """Graph too large for exhaustive enumeration."""


class NoKinkError(ValueError):
    """The gap curve does not show the broken/intact/saturated structure."""


def worker_count() -> int:
    env = os.environ.get("CHAINSTRENGTH_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class GapReport:
    e0: float
    e1: float
    g0: int
    gap: float
    single_level: bool = False
    ground_broken_bonds: int = 0
    crossing: bool = False


@dataclass(frozen=True)
class LevelTable:
    """Per broken-chain-bond count k: lowest A, its multiplicity, next distinct A."""

    num_qubits: int
    n_chain_bonds: int
    amin: np.ndarray
    acount: np.ndarray
    asecond: np.ndarray

    def _levels(self, jc: float):
        ks = np.arange(self.n_chain_bonds + 1)
        slope = -(self.n_chain_bonds - 2 * ks)
        present = self.acount > 0
        return ks[present], self.amin[present] + jc * slope[present], \
            self.acount[present], self.asecond[present] + jc * slope[present]

    def at(self, jc: float = 0.0, tol: float = ENERGY_TOL) -> GapReport:
        """Levels at ``jc``; a ground manifold spanning several k is a crossing (gap 0)."""
        ks, low, count, second = self._levels(jc)
        e0 = float(low.min())
        at_ground = np.abs(low - e0) <= tol
        g0 = int(count[at_ground].sum())
        candidates = np.concatenate([low[~at_ground], second[np.isfinite(second)]])
        candidates = candidates[candidates > e0 + tol]
        k0 = int(ks[at_ground].min())
        if at_ground.sum() > 1:
            # ground levels with different jc slopes: branches cross here
            return GapReport(e0, e0, g0, 0.0, ground_broken_bonds=k0, crossing=True)
        if len(candidates) == 0:
            return GapReport(e0, e0, g0, 0.0, single_level=True, ground_broken_bonds=k0)
        e1 = float(candidates.min())
        return GapReport(e0, e1, g0, e1 - e0, ground_broken_bonds=k0)

    def gap(self, jc: float) -> float:
        return self.at(jc).gap

    def intact_minus_broken(self, jc: float) -> float:
        """Lowest intact-chain energy minus lowest broken-chain energy."""
        ks, low, _, _ = self._levels(jc)
        intact = low[ks == 0]
        broken = low[ks > 0]
        if len(intact) == 0 or len(broken) == 0:
            return -math.inf if len(intact) else math.inf
        return float(intact.min() - broken.min())


def _merge(tables: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]], tol: float):
    amin, acount, asecond = (a.copy() for a in tables[0])
    for bmin, bcount, bsecond in tables[1:]:
        for k in range(len(amin)):
            if bcount[k] == 0:
                continue
            if acount[k] == 0:
                amin[k], acount[k], asecond[k] = bmin[k], bcount[k], bsecond[k]
            elif abs(amin[k] - bmin[k]) <= tol:
                acount[k] += bcount[k]
                asecond[k] = min(asecond[k], bsecond[k])
                amin[k] = min(amin[k], bmin[k])
            elif amin[k] < bmin[k]:
                asecond[k] = min(asecond[k], bmin[k])
            else:
                asecond[k] = min(bsecond[k], amin[k])
                amin[k], acount[k] = bmin[k], bcount[k]
    return amin, acount, asecond


def _check_cap(n: int, cap: int) -> None:
    if cap > DEFAULT_CAP:
        warnings.warn(f"enumeration cap raised to {cap} qubits; runtime grows as 2**N", stacklevel=3)
    if n > cap:
        raise EnumerationCapError(f"{n} qubits exceeds the enumeration cap of {cap}")


def level_table(
    graph: ProblemGraph,
    chain_mask: np.ndarray | None = None,
    cap: int = DEFAULT_CAP,
    partitions: int | None = None,
    tol: float = ENERGY_TOL,
) -> LevelTable:
    """Enumerate all 2**N states of ``graph``.

    Edges selected by ``chain_mask`` are tracked as chain bonds (their
    couplings are ignored; only broken/intact counts are kept). The state
    range is split into ``partitions`` contiguous Gray-index blocks walked
    independently and merged in block order.
    """
    n = graph.num_qubits
    _check_cap(n, cap)
    if chain_mask is None:
        chain_mask = np.zeros(graph.num_edges, dtype=bool)
    a_ptr, a_nbr, a_J = _csr(n, graph.edges[~chain_mask], graph.couplings[~chain_mask])
    c_ptr, c_nbr, _ = _csr(n, graph.edges[chain_mask], np.ones(int(chain_mask.sum())))
    n_cbonds = int(chain_mask.sum())

    total = 1 << n
    if partitions is None:
        partitions = worker_count()
    partitions = max(1, min(int(partitions), total))
    bounds = [total * p // partitions for p in range(partitions + 1)]

    def run(p):
        return _kernels.enumerate_levels(
            n, bounds[p], bounds[p + 1], a_ptr, a_nbr, a_J, c_ptr, c_nbr, n_cbonds, tol
        )

    if partitions == 1:
        parts = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=min(worker_count(), partitions)) as pool:
            parts = list(pool.map(run, range(partitions)))
    amin, acount, asecond = _merge(parts, tol)
    return LevelTable(n, n_cbonds, amin, acount, asecond)


def ground_and_gap(
    graph: ProblemGraph, cap: int = DEFAULT_CAP, partitions: int | None = None
) -> GapReport:
    """Exact e0, g0, e1 and gap = e1 - e0 of ``graph``."""
    return level_table(graph, None, cap=cap, partitions=partitions).at(0.0)


def composite_table(
    base: ProblemGraph,
    chains: ChainSet,
    route: Route = "diagonal",
    cap: int = DEFAULT_CAP,
    partitions: int | None = None,
) -> LevelTable:
    """Level table of the composite problem, valid for every jc."""
    emb = embed(base, chains, 1.0, route=route)
    return level_table(emb.composite, emb.composite.kind_mask("chain"), cap=cap, partitions=partitions)


def delta_c_curve(
    base: ProblemGraph,
    chains: ChainSet,
    jc_grid: Sequence[float],
    route: Route = "diagonal",
    cap: int = DEFAULT_CAP,
    table: LevelTable | None = None,
) -> list[tuple[float, float]]:
    if table is None:
        table = composite_table(base, chains, route, cap)
    return [(float(jc), table.gap(float(jc))) for jc in jc_grid]


@dataclass(frozen=True)
class KinkReport:
    jc_star: float
    jc_dstar: float
    delta_s: float
    curve: tuple[tuple[float, float], ...] = field(repr=False, default=())

    @property
    def window(self) -> float:
        return self.jc_dstar - self.jc_star

    def summary(self) -> dict:
        return {"jc_star": self.jc_star, "jc_dstar": self.jc_dstar, "delta_s": self.delta_s}


def _bisect(pred, lo: float, hi: float, tol: float) -> float:
    """Smallest x in (lo, hi] with pred(x) true, given pred(lo) false and pred(hi) true."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _scan(pred, lo: float, hi: float, step: float) -> tuple[float, float] | None:
    """First grid cell [a, b] of step ``step`` where pred flips from false to true."""
    n = max(1, int(math.ceil((hi - lo) / step - 1e-12)))
    prev = lo
    if pred(prev):
        return None
    for i in range(1, n + 1):
        x = min(lo + i * step, hi)
        if pred(x):
            return prev, x
        prev = x
    return None


def find_kinks(
    base: ProblemGraph,
    chains: ChainSet,
    jc_lo: float = 0.0,
    jc_hi: float | None = None,
    route: Route = "diagonal",
    cap: int = DEFAULT_CAP,
    table: LevelTable | None = None,
    chainless: GapReport | None = None,
    step: float = KINK_STEP,
) -> KinkReport:
    """Locate the chain-breaking kink jc* and the saturation kink jc**.

    jc* is where the lowest intact-chain branch crosses the lowest
    broken-chain branch (the gap closes there); jc** is the smallest jc
    above jc* where the gap reaches the chainless gap. Both come from a
    0.01 grid scan refined by bisection.
    """
    if chainless is None:
        chainless = ground_and_gap(base, cap=cap)
    delta_s = chainless.gap
    if chainless.single_level or delta_s <= ENERGY_TOL:
        raise NoKinkError("chainless problem has no gap; no kink structure")
    if chainless.g0 > 2:
        raise NoKinkError(
            f"chainless ground state is {chainless.g0}-fold degenerate "
            "(frustrated beyond a single ordered pattern); kinks are not defined"
        )
    if table is None:
        table = composite_table(base, chains, route, cap)
    if jc_hi is None:
        # every broken bond costs 2 jc; past this the intact branch always wins
        jc_hi = jc_lo + 2.0 * float(np.abs(base.couplings).sum()) + delta_s + 1.0

    if table.intact_minus_broken(jc_lo) < 0:
        raise NoKinkError(f"chains already intact at jc_lo={jc_lo}; lower bracket misses jc*")
    if abs(table.gap(jc_hi) - delta_s) > KINK_TOL:
        raise NoKinkError(f"gap at jc_hi={jc_hi} is not saturated at delta_s={delta_s}")

    intact_wins = lambda jc: table.intact_minus_broken(jc) < 0
    cell = _scan(intact_wins, jc_lo, jc_hi, step)
    if cell is None:
        raise NoKinkError("no crossing between broken and intact chain branches in bracket")
    jc_star = _bisect(intact_wins, *cell, tol=1e-12)

    saturated = lambda jc: table.gap(jc) >= delta_s - KINK_TOL
    cell = _scan(saturated, jc_star, jc_hi, step)
    if cell is None:
        raise NoKinkError("gap already saturated at jc*; no stable window")
    jc_dstar = _bisect(saturated, *cell, tol=1e-12)

    grid = np.round(np.arange(jc_lo, jc_hi + step / 2, step), 10)
    curve = tuple((float(jc), table.gap(float(jc))) for jc in grid)
    return KinkReport(jc_star, jc_dstar, delta_s, curve)


def solve_jc_for_gap(
    base: ProblemGraph,
    chains: ChainSet,
    target_gap: float,
    route: Route = "diagonal",
    cap: int = DEFAULT_CAP,
    table: LevelTable | None = None,
    kinks: KinkReport | None = None,
) -> float:
    """jc in [jc*, jc**] at which the composite gap equals ``target_gap``."""
    if table is None:
        table = composite_table(base, chains, route, cap)
    if kinks is None:
        kinks = find_kinks(base, chains, route=route, cap=cap, table=table)
    if not 0.0 < target_gap <= kinks.delta_s + KINK_TOL:
        raise ValueError(
            f"target gap {target_gap} outside (0, delta_s={kinks.delta_s}]"
        )
    lo, hi = kinks.jc_star, kinks.jc_dstar
    if target_gap >= kinks.delta_s - KINK_TOL:
        return hi
    return _bisect(lambda jc: table.gap(jc) >= target_gap, lo, hi, tol=1e-12)


def spectrum(graph: ProblemGraph, max_qubits: int = 20, tol: float = ENERGY_TOL) -> list[tuple[float, int]]:
    """Full sorted spectrum as (level, degeneracy); debugging aid for small N."""
    n = graph.num_qubits
    if n > max_qubits:
        raise EnumerationCapError(f"{n} qubits exceeds the spectrum dump limit of {max_qubits}")
    idx = np.arange(1 << n, dtype=np.int64)
    spins = 1 - 2 * ((idx[:, None] >> np.arange(n)) & 1)
    s = spins.astype(np.float64)
    E = -(s[:, graph.edges[:, 0]] * s[:, graph.edges[:, 1]] * graph.couplings).sum(axis=1)
    E.sort()
    levels: list[tuple[float, int]] = []
    for e in E:
        if levels and e - levels[-1][0] <= tol:
            levels[-1] = (levels[-1][0], levels[-1][1] + 1)
        else:
            levels.append((float(e), 1))
    return levels
