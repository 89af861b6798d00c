"""Static SVG figures rendered from the CSV tables alone.

Every function reads only its CSV inputs, so a figure can be regenerated
from stored data; the SVG writer is pinned (fixed hash salt, no date) to
make the output bit-identical across runs.
"""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import read_csv

_RC = {"svg.hashsalt": "chainstrength", "svg.fonttype": "path", "font.size": 10}


def _num(s: str) -> float:
    return float(s) if s != "" else float("nan")


def _save(fig, svg_path: str | Path) -> Path:
    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(svg_path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return svg_path


def _label_from(path: Path) -> str:
    return path.stem.replace("delta_c_", "").replace("_", " ")


def plot_delta_c(csv_paths: Sequence[str | Path], svg_path: str | Path) -> Path:
    """Gap of the composite problem against jc/J1, one line per CSV (columns jc, delta_c)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for p in map(Path, csv_paths):
            rows = read_csv(p)
            ax.plot([_num(r["jc"]) for r in rows], [_num(r["delta_c"]) for r in rows], label=_label_from(p))
        ax.set_xlabel("$J_c/J_1$")
        ax.set_ylabel(r"$\Delta_c$")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, svg_path)


def plot_p_vs_jc(csv_path: str | Path, svg_path: str | Path) -> Path:
    rows = read_csv(csv_path)
    jc = [_num(r["jc"]) for r in rows]
    p = [_num(r["p"]) for r in rows]
    lo = [pi - _num(r["ci_low"]) for pi, r in zip(p, rows)]
    hi = [_num(r["ci_high"]) - pi for pi, r in zip(p, rows)]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        ax.errorbar(jc, p, yerr=[lo, hi], marker="o", ms=3, capsize=2)
        ax.set_xlabel("$J_c/J_1$")
        ax.set_ylabel("$p$")
        fig.tight_layout()
        return _save(fig, svg_path)


def plot_p_vs_j2(csv_path: str | Path, svg_path: str | Path) -> Path:
    """One line per condition (fixed Delta_c or fixed jc); infeasible points are skipped."""
    series: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for r in read_csv(csv_path):
        if r["feasible"] == "true":
            series[r["condition"]].append((_num(r["j2_over_j1"]), _num(r["p"])))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for cond in sorted(series):
            xs, ys = zip(*series[cond])
            ax.plot(xs, ys, marker="o", ms=3, label=cond.replace("delta_c", r"$\Delta_c$").replace("jc", "$J_c$"))
        ax.set_xlabel("$J_2/J_1$")
        ax.set_ylabel("$p$")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, svg_path)


def plot_disorder(csv_path: str | Path, svg_path: str | Path) -> Path:
    """N^(1/3) against jc/J1 per disorder ratio x; the table keeps raw N."""
    series: dict[float, list[tuple[float, float]]] = defaultdict(list)
    for r in read_csv(csv_path):
        series[_num(r["x"])].append((_num(r["jc"]), _num(r["hits"]) ** (1.0 / 3.0)))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for x in sorted(series):
            xs, ys = zip(*series[x])
            ax.plot(xs, ys, marker="o", ms=3, label=f"x={x:g}")
        ax.set_xlabel("$J_c/J_1$")
        ax.set_ylabel("$N^{1/3}$")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, svg_path)
