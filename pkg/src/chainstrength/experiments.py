"""Sweep drivers for the gap, probability and disorder studies, plus jc rules.

Seeding: every random draw comes from ``SeedSequence(plan.seed, spawn_key=...)``
with a key naming its role (chains, disorder, annealing) and its indices,
so any single table cell can be regenerated on its own. Annealing streams
are shared across the jc/J2 axis of one ensemble member (common random
numbers), which keeps neighboring grid points directly comparable.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Literal

import numpy as np

from .annealer import (
    DEFAULT_SCHEDULE,
    PEstimate,
    ReferenceGround,
    SAConfig,
    Schedule,
    anneal_embedded,
    reference_ground,
)
from .embedding import ChainSet, Route, embed, sample_chains, sample_chains_with_total
from .exact import (
    DEFAULT_CAP,
    KinkReport,
    NoKinkError,
    composite_table,
    find_kinks,
    ground_and_gap,
    solve_jc_for_gap,
)
from .model import (
    DisorderSpec,
    LatticeSpec,
    ProblemGraph,
    apply_diagonal_disorder,
    build_j1j2_lattice,
)

log = logging.getLogger(__name__)

PlanKind = Literal["exact_gap_sweep", "sa_jc_sweep", "sa_j2_sweep", "disorder_study"]

# spawn-key roles
_CHAINS, _DISORDER, _ANNEAL, _REFERENCE = 1, 2, 3, 4

ORDERED_GAP_RATIO = 0.25
DISORDERED_EG_FACTOR = 2.1


def derived_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)).generate_state(2, np.uint32).view(np.uint64)[0])


@dataclass(frozen=True)
class ChainPolicy:
    """How chain sets are chosen.

    ``fixed``: use ``chain_set`` everywhere. ``target_nc``: one random set
    with total ``target_nc`` per ensemble member. ``random``: ``num_chains``
    random sites with uniform lengths per ensemble member.
    """

    mode: Literal["fixed", "target_nc", "random"] = "target_nc"
    target_nc: int | None = 9
    num_chains: int | None = None
    chain_set: ChainSet | None = None

    def __post_init__(self):
        if self.mode == "fixed" and self.chain_set is None:
            raise ValueError("chain policy 'fixed' needs chain_set")
        if self.mode == "target_nc" and not self.target_nc:
            raise ValueError("chain policy 'target_nc' needs target_nc")
        if self.mode == "random" and not self.num_chains:
            raise ValueError("chain policy 'random' needs num_chains")
        if self.mode not in ("fixed", "target_nc", "random"):
            raise ValueError(f"unknown chain policy {self.mode!r}")

    def draw(self, L: int, seed: int, *key: int) -> ChainSet:
        if self.mode == "fixed":
            return self.chain_set
        s = derived_seed(seed, _CHAINS, *key)
        if self.mode == "target_nc":
            return sample_chains_with_total(L, self.target_nc, rng_seed=s)
        return sample_chains(L, self.num_chains, s)


@dataclass(frozen=True)
class ExperimentPlan:
    """Declarative sweep.

    ``grid`` is the swept axis: J2/J1 values for ``exact_gap_sweep`` and
    ``sa_j2_sweep``, jc/J1 values for ``sa_jc_sweep`` and ``disorder_study``.
    """

    kind: PlanKind
    lattice: LatticeSpec
    grid: tuple[float, ...]
    chains: ChainPolicy = ChainPolicy()
    ensembles: int = 1
    sa: SAConfig = SAConfig()
    seed: int = 0
    route: Route = "diagonal"
    jc_curve: tuple[float, float, float] = (0.0, 4.0, 0.01)
    delta_c_targets: tuple[float, ...] = (0.4, 1.0)
    fixed_jc: tuple[float, ...] = (2.0,)
    x_values: tuple[float, ...] = (0.2, 0.4, 0.5)
    j2_low: float = 0.25
    reference_shots: int = 200
    reference_factor: int = 10
    exact_cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.kind not in ("exact_gap_sweep", "sa_jc_sweep", "sa_j2_sweep", "disorder_study"):
            raise ValueError(f"unknown plan kind {self.kind!r}")
        grid = tuple(float(g) for g in self.grid)
        if not grid:
            raise ValueError("grid must be non-empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if self.ensembles < 1:
            raise ValueError("ensembles must be >= 1")
        object.__setattr__(self, "grid", grid)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if self.chains.chain_set is not None:
            d["chains"]["chain_set"] = self.chains.chain_set.to_json()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        d = dict(d)
        lattice = LatticeSpec(**d.pop("lattice"))
        chains = dict(d.pop("chains", {}))
        if chains.get("chain_set") is not None:
            cs = chains["chain_set"]
            chains["chain_set"] = ChainSet.from_json(cs) if isinstance(cs, dict) else ChainSet(tuple(map(tuple, cs)))
        sa = dict(d.pop("sa", {}))
        schedule = Schedule(**sa.pop("schedule", {})) if "schedule" in sa else DEFAULT_SCHEDULE
        for key in ("grid", "jc_curve", "delta_c_targets", "fixed_jc", "x_values"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        return cls(lattice=lattice, chains=ChainPolicy(**chains), sa=SAConfig(schedule=schedule, **sa), **d)

    def sa_with(self, **changes) -> SAConfig:
        return dataclasses.replace(self.sa, **changes)


def jc_grid(lo: float = 1.0, hi: float = 4.0, step: float = 0.1) -> tuple[float, ...]:
    n = int(round((hi - lo) / step))
    return tuple(round(lo + i * step, 10) for i in range(n + 1))


def _lattice_at(spec: LatticeSpec, j2_over_j1: float) -> ProblemGraph:
    return build_j1j2_lattice(dataclasses.replace(spec, J2=j2_over_j1 * spec.J1))


def lattice_reference(graph: ProblemGraph, plan: ExperimentPlan, *key: int) -> ReferenceGround | float:
    """Exact chainless ground energy when enumerable, else a long-SA reference."""
    if graph.num_qubits <= plan.exact_cap:
        return ground_and_gap(graph, cap=plan.exact_cap).e0
    budget = SAConfig(
        plan.sa.schedule.scaled(plan.reference_factor),
        plan.reference_shots,
        plan.seed,
        plan.sa.success_policy,
    )
    return reference_ground(graph, budget, stream=(_REFERENCE, *key))


def _energy_of(ref: ReferenceGround | float) -> float:
    return ref.energy if isinstance(ref, ReferenceGround) else float(ref)


# ---------------------------------------------------------------- exact


@dataclass(frozen=True)
class ExactRow:
    j2_over_j1: float
    chains: ChainSet
    delta_s: float
    curve: tuple[tuple[float, float], ...]
    kinks: KinkReport | None
    diagnosis: str = ""

    def summary(self) -> dict:
        out: dict[str, Any] = {"j2_over_j1": self.j2_over_j1, "delta_s": self.delta_s,
                               "chains": self.chains.to_json()["chains"]}
        if self.kinks is not None:
            out.update(jc_star=self.kinks.jc_star, jc_dstar=self.kinks.jc_dstar)
        else:
            out.update(jc_star=None, jc_dstar=None, diagnosis=self.diagnosis)
        return out


def run_exact_gap_sweep(plan: ExperimentPlan) -> list[ExactRow]:
    """Delta_c(jc) curve and kinks for each J2/J1 in the grid, one chain set for all."""
    chains = plan.chains.draw(plan.lattice.L, plan.seed, 0)
    lo, hi, step = plan.jc_curve
    grid = np.round(np.arange(lo, hi + step / 2, step), 10)
    rows = []
    for j2 in plan.grid:
        base = _lattice_at(plan.lattice, j2)
        chainless = ground_and_gap(base, cap=plan.exact_cap)
        table = composite_table(base, chains, plan.route, cap=plan.exact_cap)
        curve = tuple((float(jc), table.gap(float(jc))) for jc in grid)
        try:
            kinks = find_kinks(base, chains, route=plan.route, table=table, chainless=chainless)
            diagnosis = ""
        except NoKinkError as exc:
            kinks, diagnosis = None, str(exc)
        log.info("exact J2/J1=%g: %s", j2, kinks.summary() if kinks else diagnosis)
        rows.append(ExactRow(j2, chains, chainless.gap, curve, kinks, diagnosis))
    return rows


# ---------------------------------------------------------------- SA sweeps


@dataclass(frozen=True)
class SweepRow:
    axis: float
    estimate: PEstimate
    per_ensemble: tuple[float, ...] = ()
    jc: float = math.nan
    condition: str = ""
    feasible: bool = True
    note: str = ""


def _pooled_rows(plan: ExperimentPlan, hits: np.ndarray) -> list[SweepRow]:
    shots = plan.sa.shots
    members = hits.shape[1]
    return [
        SweepRow(
            jc,
            PEstimate.from_counts(int(hits[g].sum()), shots * members),
            tuple(float(h) / shots for h in hits[g]),
            jc=jc,
        )
        for g, jc in enumerate(plan.grid)
    ]


def run_sa_jc_sweep(
    plan: ExperimentPlan, progress: Callable[[list[SweepRow]], None] | None = None
) -> list[SweepRow]:
    """p(jc) pooled over ensemble members, each with its own random chain set.

    ``progress`` receives the rows pooled over the members finished so far.
    """
    L = plan.lattice.L
    base = build_j1j2_lattice(plan.lattice)
    ref = lattice_reference(base, plan, 0)
    eg_total = _energy_of(ref)
    members = [plan.chains.draw(L, plan.seed, e) for e in range(plan.ensembles)]
    hits = np.zeros((len(plan.grid), plan.ensembles), dtype=np.int64)
    for e, chains in enumerate(members):
        for g, jc in enumerate(plan.grid):
            emb = embed(base, chains, jc, plan.route)
            batch = anneal_embedded(emb, eg_total, plan.sa, stream=(_ANNEAL, e))
            hits[g, e] = int(batch.hits.sum())
        log.info("sa_jc_sweep member %d: N_c=%d hits=%s", e, chains.nc, hits[:, e].tolist())
        if progress is not None:
            progress(_pooled_rows(plan, hits[:, : e + 1]))
    return _pooled_rows(plan, hits)


def run_sa_j2_sweep(
    plan: ExperimentPlan, progress: Callable[[list[SweepRow]], None] | None = None
) -> list[SweepRow]:
    """p(J2/J1) at fixed Delta_c targets (jc re-solved per point) and at fixed jc."""
    chains = plan.chains.draw(plan.lattice.L, plan.seed, 0)
    conditions = [("delta_c", t) for t in plan.delta_c_targets] + [("jc", j) for j in plan.fixed_jc]
    rows: list[SweepRow] = []
    for g, j2 in enumerate(plan.grid):
        base = _lattice_at(plan.lattice, j2)
        chainless = ground_and_gap(base, cap=plan.exact_cap)
        table = composite_table(base, chains, plan.route, cap=plan.exact_cap)
        kinks = None
        try:
            kinks = find_kinks(base, chains, route=plan.route, table=table, chainless=chainless)
        except NoKinkError as exc:
            kink_note = str(exc)
        for c, (what, value) in enumerate(conditions):
            label = f"{what}={value:g}"
            if what == "delta_c":
                if kinks is None or not 0.0 < value < kinks.delta_s:
                    why = kink_note if kinks is None else f"target {value:g} outside (0, delta_s={kinks.delta_s:.6g})"
                    rows.append(SweepRow(j2, PEstimate(math.nan, 0, plan.sa.shots, (math.nan, math.nan)),
                                         jc=math.nan, condition=label, feasible=False, note=why))
                    continue
                jc = solve_jc_for_gap(base, chains, value, route=plan.route, table=table, kinks=kinks)
            else:
                jc = value
            emb = embed(base, chains, jc, plan.route)
            batch = anneal_embedded(emb, chainless.e0, plan.sa, stream=(_ANNEAL, 0))
            est = PEstimate.from_counts(int(batch.hits.sum()), plan.sa.shots)
            rows.append(SweepRow(j2, est, (est.p,), jc=float(jc), condition=label))
        log.info("sa_j2_sweep J2/J1=%g done", j2)
        if progress is not None:
            progress(list(rows))
    return rows


# ---------------------------------------------------------------- disorder


@dataclass(frozen=True)
class DisorderResult:
    x: float
    mean_eg: float
    hits_by_jc: tuple[tuple[float, int], ...]
    best_jc: float
    eg_per_realization: tuple[float, ...] = ()
    unstable: tuple[int, ...] = ()
    chain_sets: tuple[ChainSet, ...] = field(default=(), repr=False)
    disorder_seeds: tuple[int, ...] = ()
    shots: int = 0

    @property
    def ensembles(self) -> int:
        return len(self.eg_per_realization)


def run_disorder_study(
    plan: ExperimentPlan, progress: Callable[[list[DisorderResult]], None] | None = None
) -> list[DisorderResult]:
    """Hit counts N(jc) summed over disorder realizations, for each x."""
    L = plan.lattice.L
    clean = build_j1j2_lattice(plan.lattice)
    shots = plan.sa.shots
    results = []
    for xi, x in enumerate(plan.x_values):
        hits = np.zeros(len(plan.grid), dtype=np.int64)
        egs, unstable, chain_sets, dseeds = [], [], [], []
        for e in range(plan.ensembles):
            dseed = derived_seed(plan.seed, _DISORDER, xi, e)
            graph = apply_diagonal_disorder(
                clean, DisorderSpec(x, j2_low=plan.j2_low, seed=dseed), sign=plan.lattice.sign
            )
            ref = lattice_reference(graph, plan, xi, e)
            eg_total = _energy_of(ref)
            if isinstance(ref, ReferenceGround) and not ref.stable:
                unstable.append(e)
            chains = plan.chains.draw(L, plan.seed, xi, e)
            for g, jc in enumerate(plan.grid):
                emb = embed(graph, chains, jc, plan.route)
                batch = anneal_embedded(emb, eg_total, plan.sa, stream=(_ANNEAL, xi, e))
                hits[g] += int(batch.hits.sum())
            egs.append(eg_total / graph.num_qubits)
            chain_sets.append(chains)
            dseeds.append(dseed)
            log.info("disorder x=%g member %d: E_g=%.4f N_c=%d", x, e, egs[-1], chains.nc)
        best = plan.grid[int(np.argmax(hits))]
        results.append(
            DisorderResult(
                x=float(x),
                mean_eg=float(np.mean(egs)),
                hits_by_jc=tuple((float(jc), int(n)) for jc, n in zip(plan.grid, hits)),
                best_jc=float(best),
                eg_per_realization=tuple(egs),
                unstable=tuple(unstable),
                chain_sets=tuple(chain_sets),
                disorder_seeds=tuple(dseeds),
                shots=shots,
            )
        )
        if progress is not None:
            progress(list(results))
    return results


# ---------------------------------------------------------------- jc rules


@dataclass(frozen=True)
class Suggestion:
    jc: float
    rule: str
    details: dict = field(default_factory=dict)


def suggest_jc(
    mode: Literal["ordered", "disordered"],
    *,
    base: ProblemGraph | None = None,
    chains: ChainSet | None = None,
    eg_per_site: float | None = None,
    j1: float = 1.0,
    route: Route = "diagonal",
) -> Suggestion:
    """Recommended chain strength.

    ordered: the jc where Delta_c / Delta_s = 0.25 on the exact gap curve.
    disordered: 2.1 * |E_g per site| * |J1|.
    """
    if mode == "ordered":
        if base is None or chains is None:
            raise ValueError("ordered mode needs base and chains")
        try:
            kinks = find_kinks(base, chains, route=route)
        except NoKinkError as exc:
            raise ValueError(f"ordered rule not applicable: {exc}") from exc
        jc = solve_jc_for_gap(base, chains, ORDERED_GAP_RATIO * kinks.delta_s, route=route, kinks=kinks)
        return Suggestion(jc, "delta_c/delta_s=0.25", kinks.summary())
    if mode == "disordered":
        if eg_per_site is None:
            raise ValueError("disordered mode needs eg_per_site")
        if eg_per_site == 0:
            warnings.warn("E_g = 0: degenerate input, suggested jc is 0", stacklevel=2)
        return Suggestion(DISORDERED_EG_FACTOR * abs(eg_per_site) * abs(j1), "2.1*|E_g|",
                          {"eg_per_site": eg_per_site, "j1": j1})
    raise ValueError(f"unknown mode {mode!r}")
