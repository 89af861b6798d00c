"""Seeded Metropolis simulated annealing and ground-hit probability estimates."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.stats import binomtest

from . import _kernels
from .embedding import EmbeddedProblem, decode_batch
from .exact import worker_count
from .model import ENERGY_TOL, ProblemGraph, energies

SuccessPolicy = Literal["strict_intact", "energy_only"]


@dataclass(frozen=True)
class Schedule:
    """Inverse-temperature ramp; one sweep is one proposal per qubit in index order."""

    kind: Literal["geometric", "linear"] = "geometric"
    beta_start: float = 0.1
    beta_end: float = 30.0
    sweeps: int = 1000

    def __post_init__(self):
        if self.kind not in ("geometric", "linear"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.beta_start <= 0 or self.beta_end < self.beta_start:
            raise ValueError("need 0 < beta_start <= beta_end")
        if int(self.sweeps) != self.sweeps or self.sweeps < 1:
            raise ValueError("sweeps must be a positive integer")

    def betas(self) -> np.ndarray:
        if self.sweeps == 1:
            return np.array([self.beta_end])
        if self.kind == "geometric":
            return np.geomspace(self.beta_start, self.beta_end, self.sweeps)
        return np.linspace(self.beta_start, self.beta_end, self.sweeps)

    def scaled(self, factor: int) -> "Schedule":
        return Schedule(self.kind, self.beta_start, self.beta_end, self.sweeps * factor)


DEFAULT_SCHEDULE = Schedule()


@dataclass(frozen=True)
class SAConfig:
    schedule: Schedule = DEFAULT_SCHEDULE
    shots: int = 2000
    master_seed: int = 0
    success_policy: SuccessPolicy = "strict_intact"

    def __post_init__(self):
        if int(self.shots) != self.shots or self.shots < 1:
            raise ValueError(f"shots must be a positive integer, got {self.shots}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.success_policy not in ("strict_intact", "energy_only"):
            raise ValueError(f"unknown success policy {self.success_policy!r}")


@dataclass(frozen=True)
class PEstimate:
    p: float
    hits: int
    shots: int
    wilson_ci95: tuple[float, float]

    @classmethod
    def from_counts(cls, hits: int, shots: int) -> "PEstimate":
        if shots < 1:
            raise ValueError("shots must be positive")
        ci = binomtest(int(hits), int(shots)).proportion_ci(0.95, method="wilson")
        p = hits / shots
        return cls(p, int(hits), int(shots), (min(float(ci.low), p), max(float(ci.high), p)))

    @property
    def stderr(self) -> float:
        return float(np.sqrt(max(self.p * (1 - self.p), 1.0 / self.shots) / self.shots))


def shot_rng(master_seed: int, stream: Sequence[int], index: int) -> np.random.Generator:
    """Generator for one shot, a pure function of (master_seed, stream, index)."""
    key = tuple(int(s) for s in stream) + (int(index),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=key)))


def run_batch(
    graph: ProblemGraph,
    schedule: Schedule,
    master_seed: int,
    shots: int,
    stream: Sequence[int] = (),
    threads: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Anneal ``shots`` independent runs; returns (configs, energies).

    Energies are recomputed from scratch with :func:`energies`. Shot ``i``
    draws from its own generator, so the output does not depend on the
    thread count or execution order.
    """
    ptr, nbr, J = graph.csr()
    betas = schedule.betas()
    n = graph.num_qubits
    out = np.empty((shots, n), dtype=np.int8)
    threads = worker_count() if threads is None else max(1, threads)
    chunks = np.array_split(np.arange(shots), min(threads, max(1, shots)))

    def run(idx):
        h = np.empty(n, np.float64)
        for i in idx:
            rng = shot_rng(master_seed, stream, i)
            _kernels.anneal_shot(n, ptr, nbr, J, betas, rng, out[i], h)

    if len(chunks) == 1:
        run(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(run, chunks))
    return out, energies(graph, out)


def run_shot(graph: ProblemGraph, schedule: Schedule, seed: int) -> tuple[np.ndarray, float]:
    """One annealing run from a uniformly random start."""
    configs, es = run_batch(graph, schedule, seed, 1, threads=1)
    return configs[0], float(es[0])


@dataclass(frozen=True, eq=False)
class ShotBatch:
    master_seed: int
    stream: tuple[int, ...]
    configs: np.ndarray
    energies: np.ndarray
    broken_chains: np.ndarray
    lattice_energy: np.ndarray
    hits: np.ndarray

    def records(self) -> list[dict]:
        return [
            {
                "shot": i,
                "master_seed": self.master_seed,
                "stream": list(self.stream),
                "energy": float(self.energies[i]),
                "broken_chains": int(self.broken_chains[i]),
                "hit": bool(self.hits[i]),
            }
            for i in range(len(self.energies))
        ]


def anneal_embedded(
    embedded: EmbeddedProblem,
    reference_eg_total: float,
    cfg: SAConfig,
    stream: Sequence[int] = (),
    threads: int | None = None,
) -> ShotBatch:
    configs, es = run_batch(embedded.composite, cfg.schedule, cfg.master_seed, cfg.shots, stream, threads)
    policy = "strict" if cfg.success_policy == "strict_intact" else "majority"
    lattice, broken = decode_batch(configs, embedded, policy)
    lattice_e = energies(embedded.base, lattice)
    hits = np.abs(lattice_e - reference_eg_total) <= ENERGY_TOL
    if cfg.success_policy == "strict_intact":
        hits &= broken == 0
    return ShotBatch(cfg.master_seed, tuple(int(x) for x in stream), configs, es, broken, lattice_e, hits)


def estimate_p(
    embedded: EmbeddedProblem,
    reference_eg_total: float,
    cfg: SAConfig,
    stream: Sequence[int] = (),
    threads: int | None = None,
) -> PEstimate:
    """Fraction of shots whose decoded lattice energy equals ``reference_eg_total``.

    Under ``strict_intact`` a shot also needs every chain unanimous.
    """
    batch = anneal_embedded(embedded, reference_eg_total, cfg, stream, threads)
    return PEstimate.from_counts(int(batch.hits.sum()), cfg.shots)


@dataclass(frozen=True)
class ReferenceGround:
    energy: float
    attained: int
    shots: int
    config: np.ndarray

    @property
    def stable(self) -> bool:
        return self.attained > 1


def reference_budget(cfg: SAConfig, shots: int = 200, factor: int = 10) -> SAConfig:
    """Long-schedule budget for :func:`reference_ground` derived from a measurement config."""
    return SAConfig(cfg.schedule.scaled(factor), shots, cfg.master_seed, cfg.success_policy)


def reference_ground(
    graph: ProblemGraph,
    budget: SAConfig,
    stream: Sequence[int] = (),
    threads: int | None = None,
) -> ReferenceGround:
    """Lowest energy over all budget shots and how many shots reached it."""
    configs, es = run_batch(graph, budget.schedule, budget.master_seed, budget.shots, stream, threads)
    best = int(np.argmin(es))
    emin = float(es[best])
    attained = int(np.sum(np.abs(es - emin) <= ENERGY_TOL))
    return ReferenceGround(emin, attained, budget.shots, configs[best].copy())
