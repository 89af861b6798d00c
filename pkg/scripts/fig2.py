"""Chain gap Delta_c versus jc for L=4, N_c=9 at three J2/J1 values, with kinks."""
import dataclasses
import json
import sys
from pathlib import Path

from chainstrength import io, plots
from chainstrength.cli import DEFAULT_PLANS
from chainstrength.experiments import run_exact_gap_sweep

out = Path(sys.argv[1] if len(sys.argv) > 1 else "runs/fig2")
plan = dataclasses.replace(DEFAULT_PLANS["exact"], grid=(0.42, 0.46, 0.48))
csvs = []
for row in run_exact_gap_sweep(plan):
    csvs.append(io.write_csv(out / f"delta_c_j2_{row.j2_over_j1:g}.csv", ["jc", "delta_c"], row.curve))
    print(json.dumps(row.summary()))
plots.plot_delta_c(csvs, out / "delta_c.svg")
