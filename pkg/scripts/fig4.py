"""p versus J2/J1 at fixed Delta_c in {0.4, 1.0} and at fixed jc=2."""
import sys
from pathlib import Path

from chainstrength import io, plots
from chainstrength.cli import DEFAULT_PLANS
from chainstrength.experiments import run_sa_j2_sweep

out = Path(sys.argv[1] if len(sys.argv) > 1 else "runs/fig4")
rows = run_sa_j2_sweep(DEFAULT_PLANS["sa_j2"])
header = ["j2_over_j1", "condition", "jc", "p", "hits", "shots", "ci_low", "ci_high", "feasible", "note"]
table = []
for r in rows:
    e = r.estimate
    stats = [e.p, e.hits, e.shots, *e.wilson_ci95] if r.feasible else [float("nan")] * 5
    table.append([r.axis, r.condition, r.jc, *stats, r.feasible, r.note])
csv = io.write_csv(out / "p_vs_j2.csv", header, table)
plots.plot_p_vs_j2(csv, out / "p_vs_j2.svg")
for line in table:
    print(*line[:4], sep="\t")
