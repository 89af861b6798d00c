"""Cube root of the hit count versus jc on disordered L=8 lattices, x in {0.2, 0.4, 0.5}.

Pass a smaller ensemble count as the second argument for a quick look.
"""
import dataclasses
import sys
from pathlib import Path

from chainstrength import io, plots
from chainstrength.cli import DEFAULT_PLANS
from chainstrength.experiments import run_disorder_study

out = Path(sys.argv[1] if len(sys.argv) > 1 else "runs/fig5")
plan = DEFAULT_PLANS["disorder"]
if len(sys.argv) > 2:
    plan = dataclasses.replace(plan, ensembles=int(sys.argv[2]))


def flush(results):
    io.write_csv(out / "disorder_hits.csv", ["x", "jc", "hits"],
                 [[r.x, jc, n] for r in results for jc, n in r.hits_by_jc])


results = run_disorder_study(plan, progress=flush)
flush(results)
io.write_csv(out / "disorder_summary.csv", ["x", "mean_eg", "best_jc", "ensembles", "unstable"],
             [[r.x, r.mean_eg, r.best_jc, r.ensembles, len(r.unstable)] for r in results])
plots.plot_disorder(out / "disorder_hits.csv", out / "disorder.svg")
for r in results:
    print(f"x={r.x:g}  <E_g>={r.mean_eg:.4f}  best jc={r.best_jc:g}")
