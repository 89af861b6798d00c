"""``chainstrength`` command line.

Settings resolve in three layers, later ones winning: built-in defaults,
then ``--config`` (a TOML plan, or a previous run's manifest.json), then
flags given explicitly on the command line.

Exit codes: 0 success, 2 usage or config error, 3 enumeration cap
exceeded, 4 unstable SA reference ground, 130 interrupted (partial tables
are still written).
"""
from __future__ import annotations

import logging
import sys
import warnings
from pathlib import Path
from typing import Any, Callable

import click
from click.core import ParameterSource

from . import io, plots
from .annealer import DEFAULT_SCHEDULE, SAConfig, Schedule
from .embedding import ChainSamplingError
from .exact import EnumerationCapError
from .experiments import (
    ChainPolicy,
    DisorderResult,
    ExperimentPlan,
    SweepRow,
    jc_grid,
    run_disorder_study,
    run_exact_gap_sweep,
    run_sa_j2_sweep,
    run_sa_jc_sweep,
    suggest_jc,
)
from .model import LatticeSpec, build_j1j2_lattice

EXIT_CONFIG, EXIT_CAP, EXIT_UNSTABLE, EXIT_INTERRUPTED = 2, 3, 4, 130

DISORDER_SCHEDULE = Schedule("geometric", 0.1, 30.0, 200)

DEFAULT_PLANS: dict[str, ExperimentPlan] = {
    "exact": ExperimentPlan(
        "exact_gap_sweep", LatticeSpec(4, 1.0, 0.46), (0.46,), ChainPolicy("target_nc", 9)
    ),
    "sa_jc": ExperimentPlan(
        "sa_jc_sweep",
        LatticeSpec(4, 1.0, 0.46),
        jc_grid(1.0, 4.0, 0.1),
        ChainPolicy("target_nc", 18),
        sa=SAConfig(DEFAULT_SCHEDULE, 2000),
    ),
    "sa_j2": ExperimentPlan(
        "sa_j2_sweep",
        LatticeSpec(4, 1.0, 0.42),
        (0.42, 0.44, 0.46, 0.48),
        ChainPolicy("target_nc", 9),
        sa=SAConfig(DEFAULT_SCHEDULE, 2000),
    ),
    "disorder": ExperimentPlan(
        "disorder_study",
        LatticeSpec(8, 1.0, 0.25),
        jc_grid(1.0, 4.0, 0.1),
        ChainPolicy("random", num_chains=8),
        ensembles=50,
        sa=SAConfig(DISORDER_SCHEDULE, 2000),
    ),
}


class ConfigError(click.ClickException):
    exit_code = EXIT_CONFIG


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _given(ctx: click.Context, name: str) -> bool:
    return ctx.get_parameter_source(name) == ParameterSource.COMMANDLINE


def _set(d: dict, path: str, value: Any) -> None:
    *parents, leaf = path.split(".")
    for p in parents:
        d = d.setdefault(p, {})
    d[leaf] = value


def _resolve(
    ctx: click.Context,
    default: ExperimentPlan,
    flag_paths: dict[str, str | Callable],
    post: Callable[[dict], None] | None = None,
) -> ExperimentPlan:
    """Defaults, then the config file, then explicit flags, then ``post``."""
    params = ctx.params
    if params.get("strict") and not _given(ctx, "seed"):
        raise ConfigError("--strict requires an explicit --seed")
    d = default.to_dict()
    if params.get("config"):
        try:
            d = io.deep_merge(d, io.load_config(params["config"]))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"config: {exc}") from exc
    for name, target in flag_paths.items():
        if not _given(ctx, name):
            continue
        if callable(target):
            target(d, params[name])
        else:
            _set(d, target, params[name])
    if _given(ctx, "seed"):
        d["seed"] = params["seed"]
        _set(d, "sa.master_seed", params["seed"])
    if post is not None:
        post(d)
    try:
        return ExperimentPlan.from_dict(d)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"config: {exc}") from exc


def _set_nc(d: dict, nc: int) -> None:
    d["chains"] = {"mode": "target_nc", "target_nc": nc, "num_chains": None, "chain_set": None}


def _set_num_chains(d: dict, n: int) -> None:
    d["chains"] = {"mode": "random", "target_nc": None, "num_chains": n, "chain_set": None}


def _set_curve(i: int) -> Callable[[dict, float], None]:
    def apply(d: dict, v: float) -> None:
        curve = list(d["jc_curve"])
        curve[i] = v
        d["jc_curve"] = curve

    return apply


def _jc_grid_from_flags(ctx: click.Context) -> Callable[[dict], None]:
    """Rebuild the jc grid when any of --jc-min/--jc-max/--jc-step was given."""

    def apply(d: dict) -> None:
        if any(_given(ctx, n) for n in ("jc_min", "jc_max", "jc_step")):
            p = ctx.params
            if p["jc_step"] <= 0 or p["jc_max"] < p["jc_min"]:
                raise ConfigError("jc grid: need jc_step > 0 and jc_max >= jc_min")
            d["grid"] = list(jc_grid(p["jc_min"], p["jc_max"], p["jc_step"]))

    return apply


def _run(manifest: io.RunManifest, out: Path, body: Callable[[], int]) -> int:
    try:
        code = body()
    except KeyboardInterrupt:
        manifest.finish("interrupted")
        manifest.write(out / "manifest.json")
        click.echo(f"interrupted; partial results in {out}", err=True)
        return EXIT_INTERRUPTED
    return code


def _common(f):
    f = click.option("--config", type=click.Path(exists=True, dir_okay=False), help="TOML plan or manifest.json.")(f)
    f = click.option("--seed", type=click.IntRange(0, 2**63 - 1), default=0, show_default=True)(f)
    f = click.option("--strict", is_flag=True, help="Refuse to run without an explicit --seed.")(f)
    f = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(f)
    f = click.option("--svg/--no-svg", default=False, help="Also render the figure as SVG.")(f)
    return f


@click.group()
@click.option("-v", "--verbose", count=True, help="Log progress (-v info, -vv debug).")
@click.version_option(package_name="artifact")
def main(verbose: int) -> None:
    """Chain-strength analysis for embedded J1-J2 Ising lattices."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


# ---------------------------------------------------------------- exact


@main.command()
@click.option("--L", "L", type=int, default=4, show_default=True)
@click.option("--j1", type=float, default=1.0, show_default=True)
@click.option("--j2", type=str, default="0.46", show_default=True, help="J2/J1, comma-separated for several.")
@click.option("--nc", type=int, default=9, show_default=True, help="Total number of chain qubits.")
@click.option("--jc-min", type=float, default=0.0, show_default=True)
@click.option("--jc-max", type=float, default=4.0, show_default=True)
@click.option("--jc-step", type=float, default=0.01, show_default=True)
@click.option("--boundary", type=click.Choice(["periodic", "open"]), default="periodic", show_default=True)
@click.option("--route", type=click.Choice(["diagonal", "none"]), default="diagonal", show_default=True)
@click.option("--cap", type=int, default=30, show_default=True, help="Max qubits for enumeration.")
@_common
@click.pass_context
def exact(ctx: click.Context, **kw) -> None:
    """Exact gap curve Delta_c(jc) and its two kinks."""
    plan = _resolve(
        ctx,
        DEFAULT_PLANS["exact"],
        {
            "L": "lattice.L",
            "j1": "lattice.J1",
            "j2": lambda d, v: d.__setitem__("grid", _floats(v)),
            "nc": _set_nc,
            "jc_min": _set_curve(0),
            "jc_max": _set_curve(1),
            "jc_step": _set_curve(2),
            "boundary": "lattice.boundary",
            "route": "route",
            "cap": "exact_cap",
        },
    )
    out = Path(kw["out"] or "runs/exact")
    manifest = io.RunManifest("exact", plan.to_dict(), plan.seed)

    def body() -> int:
        try:
            rows = run_exact_gap_sweep(plan)
        except EnumerationCapError as exc:
            click.echo(f"cap: {exc} (L={plan.lattice.L}, exact_cap={plan.exact_cap})", err=True)
            return EXIT_CAP
        except (ValueError, ChainSamplingError) as exc:
            raise ConfigError(str(exc)) from exc
        csvs = []
        for r in rows:
            p = io.write_csv(out / f"delta_c_j2_{r.j2_over_j1:g}.csv", ["jc", "delta_c"], r.curve)
            csvs.append(p)
        summaries = [r.summary() for r in rows]
        outputs = [*csvs, io.write_json(out / "kinks.json", summaries)]
        if kw["svg"]:
            outputs.append(plots.plot_delta_c(csvs, out / "delta_c.svg"))
        for s in summaries:
            if s["jc_star"] is None:
                click.echo(f"J2/J1={s['j2_over_j1']:g}: no kinks ({s['diagnosis']})")
            else:
                click.echo(
                    f"J2/J1={s['j2_over_j1']:g}: delta_s={s['delta_s']:.6g} "
                    f"jc*={s['jc_star']:.6f} jc**={s['jc_dstar']:.6f}"
                )
        manifest.outputs = [str(p) for p in outputs]
        manifest.finish()
        manifest.write(out / "manifest.json")
        return 0

    ctx.exit(_run(manifest, out, body))


# ---------------------------------------------------------------- sa


def _sweep_rows(rows: list[SweepRow], kind: str) -> tuple[list[str], list[list]]:
    if kind == "sa_jc_sweep":
        header = ["jc", "p", "hits", "shots", "ci_low", "ci_high", "stderr", "p_per_member"]
        body = [
            [r.jc, r.estimate.p, r.estimate.hits, r.estimate.shots, *r.estimate.wilson_ci95,
             r.estimate.stderr, ";".join(repr(v) for v in r.per_ensemble)]
            for r in rows
        ]
    else:
        header = ["j2_over_j1", "condition", "jc", "p", "hits", "shots", "ci_low", "ci_high", "feasible", "note"]
        body = [
            [r.axis, r.condition, r.jc, r.estimate.p, r.estimate.hits, r.estimate.shots,
             *r.estimate.wilson_ci95, r.feasible, r.note]
            for r in rows
        ]
    return header, body


@main.command()
@click.option("--sweep", type=click.Choice(["jc", "j2"]), default="jc", show_default=True)
@click.option("--L", "L", type=int, default=4, show_default=True)
@click.option("--j1", type=float, default=1.0, show_default=True)
@click.option("--j2", type=float, default=0.46, show_default=True, help="J2/J1 for a jc sweep.")
@click.option("--j2-grid", type=str, default="0.42,0.44,0.46,0.48", show_default=True, help="J2/J1 values for a J2 sweep.")
@click.option("--nc", type=int, default=18, show_default=True, help="Chain qubits; a J2 sweep defaults to 9.")
@click.option("--ensembles", type=int, default=1, show_default=True)
@click.option("--shots", type=int, default=2000, show_default=True)
@click.option("--sweeps", type=int, default=DEFAULT_SCHEDULE.sweeps, show_default=True)
@click.option("--beta-start", type=float, default=DEFAULT_SCHEDULE.beta_start, show_default=True)
@click.option("--beta-end", type=float, default=DEFAULT_SCHEDULE.beta_end, show_default=True)
@click.option("--jc-min", type=float, default=1.0, show_default=True)
@click.option("--jc-max", type=float, default=4.0, show_default=True)
@click.option("--jc-step", type=float, default=0.1, show_default=True)
@click.option("--delta-c", type=str, default="0.4,1.0", show_default=True, help="Fixed gap targets (J2 sweep).")
@click.option("--fixed-jc", type=str, default="2.0", show_default=True, help="Fixed jc values (J2 sweep).")
@click.option("--policy", type=click.Choice(["strict_intact", "energy_only"]), default="strict_intact", show_default=True)
@_common
@click.pass_context
def sa(ctx: click.Context, **kw) -> None:
    """Simulated-annealing success probability against jc or J2/J1."""
    sweep = kw["sweep"]
    key = "sa_jc" if sweep == "jc" else "sa_j2"
    paths: dict[str, Any] = {
        "L": "lattice.L",
        "j1": "lattice.J1",
        "nc": _set_nc,
        "ensembles": "ensembles",
        "shots": "sa.shots",
        "sweeps": "sa.schedule.sweeps",
        "beta_start": "sa.schedule.beta_start",
        "beta_end": "sa.schedule.beta_end",
        "policy": "sa.success_policy",
    }
    if sweep == "jc":
        paths.update(
            j2=lambda d, v: _set(d, "lattice.J2", v * d["lattice"]["J1"]),
        )
    else:
        paths.update(
            j2_grid=lambda d, v: d.__setitem__("grid", _floats(v)),
            delta_c=lambda d, v: d.__setitem__("delta_c_targets", _floats(v)),
            fixed_jc=lambda d, v: d.__setitem__("fixed_jc", _floats(v)),
        )
    plan = _resolve(ctx, DEFAULT_PLANS[key], paths, post=_jc_grid_from_flags(ctx))
    out = Path(kw["out"] or f"runs/sa_{sweep}")
    csv_path = out / f"p_vs_{sweep}.csv"
    manifest = io.RunManifest("sa", plan.to_dict(), plan.seed)
    manifest.notes["chain_sets"] = [
        plan.chains.draw(plan.lattice.L, plan.seed, e).to_json()["chains"]
        for e in range(plan.ensembles if plan.kind == "sa_jc_sweep" else 1)
    ]

    def flush(rows: list[SweepRow]) -> None:
        header, body_rows = _sweep_rows(rows, plan.kind)
        io.write_csv(csv_path, header, body_rows)

    def body() -> int:
        try:
            runner = run_sa_jc_sweep if plan.kind == "sa_jc_sweep" else run_sa_j2_sweep
            rows = runner(plan, progress=flush)
        except EnumerationCapError as exc:
            click.echo(f"cap: {exc}", err=True)
            return EXIT_CAP
        except (ValueError, ChainSamplingError) as exc:
            raise ConfigError(str(exc)) from exc
        flush(rows)
        outputs = [csv_path]
        if kw["svg"]:
            plot = plots.plot_p_vs_jc if plan.kind == "sa_jc_sweep" else plots.plot_p_vs_j2
            outputs.append(plot(csv_path, out / f"p_vs_{sweep}.svg"))
        if plan.kind == "sa_jc_sweep":
            best = max(rows, key=lambda r: r.estimate.p)
            click.echo(f"argmax p at jc={best.jc:g} (p={best.estimate.p:.4f})")
        manifest.outputs = [str(p) for p in outputs]
        manifest.finish()
        manifest.write(out / "manifest.json")
        return 0

    ctx.exit(_run(manifest, out, body))


# ---------------------------------------------------------------- disorder


def _disorder_tables(results: list[DisorderResult]):
    summary = [
        [r.x, r.mean_eg, r.best_jc, r.ensembles, r.shots, len(r.unstable)] for r in results
    ]
    hits = [[r.x, jc, n] for r in results for jc, n in r.hits_by_jc]
    members = [
        [r.x, e, seed, eg, cs.nc, ";".join(f"{s}:{n}" for s, n in cs.chains), e not in r.unstable]
        for r in results
        for e, (seed, eg, cs) in enumerate(zip(r.disorder_seeds, r.eg_per_realization, r.chain_sets))
    ]
    return summary, hits, members


@main.command()
@click.option("--x", "x", type=str, default="0.2,0.4,0.5", show_default=True, help="Disorder ratios.")
@click.option("--L", "L", type=int, default=8, show_default=True)
@click.option("--j1", type=float, default=1.0, show_default=True)
@click.option("--j2-low", type=float, default=0.25, show_default=True, help="Weak diagonal J2/J1; strong is 1 - this.")
@click.option("--chains", "num_chains", type=int, default=8, show_default=True, help="Chained sites per realization.")
@click.option("--ensembles", type=int, default=50, show_default=True)
@click.option("--shots", type=int, default=2000, show_default=True)
@click.option("--sweeps", type=int, default=DISORDER_SCHEDULE.sweeps, show_default=True)
@click.option("--beta-start", type=float, default=DISORDER_SCHEDULE.beta_start, show_default=True)
@click.option("--beta-end", type=float, default=DISORDER_SCHEDULE.beta_end, show_default=True)
@click.option("--jc-min", type=float, default=1.0, show_default=True)
@click.option("--jc-max", type=float, default=4.0, show_default=True)
@click.option("--jc-step", type=float, default=0.1, show_default=True)
@click.option("--reference-shots", type=int, default=200, show_default=True)
@click.option("--reference-factor", type=int, default=10, show_default=True, help="Reference schedule length multiplier.")
@_common
@click.pass_context
def disorder(ctx: click.Context, **kw) -> None:
    """Hit counts N(jc) over disordered-diagonal ensembles."""
    plan = _resolve(
        ctx,
        DEFAULT_PLANS["disorder"],
        {
            "x": lambda d, v: d.__setitem__("x_values", _floats(v)),
            "L": "lattice.L",
            "j1": "lattice.J1",
            "j2_low": "j2_low",
            "num_chains": _set_num_chains,
            "ensembles": "ensembles",
            "shots": "sa.shots",
            "sweeps": "sa.schedule.sweeps",
            "beta_start": "sa.schedule.beta_start",
            "beta_end": "sa.schedule.beta_end",
            "reference_shots": "reference_shots",
            "reference_factor": "reference_factor",
        },
        post=_jc_grid_from_flags(ctx),
    )
    out = Path(kw["out"] or "runs/disorder")
    manifest = io.RunManifest("disorder", plan.to_dict(), plan.seed)
    paths = [out / "disorder_summary.csv", out / "disorder_hits.csv", out / "disorder_members.csv"]
    headers = [
        ["x", "mean_eg", "best_jc", "ensembles", "shots", "unstable"],
        ["x", "jc", "hits"],
        ["x", "member", "disorder_seed", "eg_per_site", "nc", "chains", "reference_stable"],
    ]

    def flush(results: list[DisorderResult]) -> None:
        for path, header, rows in zip(paths, headers, _disorder_tables(results)):
            io.write_csv(path, header, rows)

    def body() -> int:
        try:
            results = run_disorder_study(plan, progress=flush)
        except (ValueError, ChainSamplingError) as exc:
            raise ConfigError(str(exc)) from exc
        flush(results)
        outputs = list(paths)
        if kw["svg"]:
            outputs.append(plots.plot_disorder(paths[1], out / "disorder.svg"))
        for r in results:
            click.echo(f"x={r.x:g}: <E_g>={r.mean_eg:.4f} best_jc={r.best_jc:g}")
        unstable = sum(len(r.unstable) for r in results)
        manifest.outputs = [str(p) for p in outputs]
        manifest.notes["unstable_references"] = unstable
        manifest.finish("unstable" if unstable else "ok")
        manifest.write(out / "manifest.json")
        if unstable:
            click.echo(f"{unstable} realization(s) reached their reference energy only once", err=True)
            return EXIT_UNSTABLE
        return 0

    ctx.exit(_run(manifest, out, body))


# ---------------------------------------------------------------- suggest


@main.command()
@click.option("--mode", type=click.Choice(["ordered", "disordered"]), required=True)
@click.option("--L", "L", type=int, default=4, show_default=True)
@click.option("--j1", type=float, default=1.0, show_default=True)
@click.option("--j2", type=float, default=0.46, show_default=True, help="J2/J1 (ordered mode).")
@click.option("--nc", type=int, default=9, show_default=True)
@click.option("--boundary", type=click.Choice(["periodic", "open"]), default="periodic", show_default=True)
@click.option("--route", type=click.Choice(["diagonal", "none"]), default="diagonal", show_default=True)
@click.option("--eg", type=float, default=None, help="Ground energy per site (disordered mode).")
@click.option("--seed", type=click.IntRange(0, 2**63 - 1), default=0, show_default=True, help="Chain set seed.")
def suggest(mode, L, j1, j2, nc, boundary, route, eg, seed) -> None:
    """Print a recommended jc and the rule behind it."""
    try:
        if mode == "ordered":
            spec = LatticeSpec(L, j1, j2 * j1, boundary)
            chains = ChainPolicy("target_nc", nc).draw(L, seed, 0)
            s = suggest_jc("ordered", base=build_j1j2_lattice(spec), chains=chains, route=route)
        else:
            if eg is None:
                raise ConfigError("--eg is required in disordered mode")
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                s = suggest_jc("disordered", eg_per_site=eg, j1=j1)
            for w in caught:
                click.echo(f"warning: {w.message}", err=True)
    except EnumerationCapError as exc:
        click.echo(f"cap: {exc}", err=True)
        sys.exit(EXIT_CAP)
    except (ValueError, ChainSamplingError) as exc:
        raise ConfigError(str(exc)) from exc
    click.echo(f"{s.jc:.6g}\t{s.rule}")


if __name__ == "__main__":
    main()
