"""Success probability p versus jc at J2/J1=0.46 for L=4 (N_c=18) and L=6 (N_c=51)."""
import dataclasses
import sys
from pathlib import Path

from chainstrength import io, plots
from chainstrength.cli import DEFAULT_PLANS
from chainstrength.experiments import ChainPolicy, run_sa_jc_sweep
from chainstrength.model import LatticeSpec

out = Path(sys.argv[1] if len(sys.argv) > 1 else "runs/fig3")
base = DEFAULT_PLANS["sa_jc"]
runs = {
    "L4": base,
    "L6": dataclasses.replace(base, lattice=LatticeSpec(6, 1.0, 0.46), chains=ChainPolicy("target_nc", 51)),
}
for name, plan in runs.items():
    rows = run_sa_jc_sweep(plan)
    header = ["jc", "p", "hits", "shots", "ci_low", "ci_high"]
    table = [[r.axis, r.estimate.p, r.estimate.hits, r.estimate.shots, *r.estimate.wilson_ci95] for r in rows]
    csv = io.write_csv(out / f"p_vs_jc_{name}.csv", header, table)
    plots.plot_p_vs_jc(csv, out / f"p_vs_jc_{name}.svg")
    best = max(rows, key=lambda r: r.estimate.p)
    print(f"{name}: peak p={best.estimate.p:.3f} at jc={best.axis:g}")
