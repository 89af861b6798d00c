"""Independent reference implementations used only by the tests.

Nothing here imports the package's kernels: energies come from a dense
coupling matrix and states from itertools.product.
"""
from __future__ import annotations

import itertools

import numpy as np


def dense(n: int, triples) -> np.ndarray:
    J = np.zeros((n, n))
    for i, j, w in triples:
        J[i, j] += w
        J[j, i] += w
    return J


def all_states(n: int) -> np.ndarray:
    return np.array(list(itertools.product((1, -1), repeat=n)), dtype=np.float64).reshape(-1, n)


def naive_energies(n: int, triples) -> np.ndarray:
    """E(s) = -sum_{i<j} J_ij s_i s_j for every state."""
    S = all_states(n)
    J = dense(n, triples)
    return -0.5 * np.einsum("bi,ij,bj->b", S, J, S)


def naive_ground_and_gap(n: int, triples, tol: float = 1e-9) -> tuple[float, float, int]:
    """(e0, e1, g0); e1 = e0 when the spectrum has a single level."""
    E = np.sort(naive_energies(n, triples))
    e0 = E[0]
    g0 = int(np.sum(E <= e0 + tol))
    e1 = E[g0] if g0 < len(E) else e0
    return float(e0), float(e1), g0


def lattice_triples(L: int, J1: float, J2: float, periodic: bool = True):
    """Antiferro J1-J2 square lattice as (i, j, J) with H = J1 sum_nn + J2 sum_diag."""
    out = {}

    def add(a, b, w):
        key = (min(a, b), max(a, b))
        out[key] = out.get(key, 0.0) + w

    for r in range(L):
        for c in range(L):
            s = r * L + c
            for dr, dc, w in ((0, 1, J1), (1, 0, J1), (1, 1, J2), (1, -1, J2)):
                r2, c2 = r + dr, c + dc
                if periodic:
                    r2, c2 = r2 % L, c2 % L
                elif not (0 <= r2 < L and 0 <= c2 < L):
                    continue
                add(s, r2 * L + c2, -w)
    return [(i, j, w) for (i, j), w in sorted(out.items())]


def pattern_energy_per_site(L: int, J1: float, J2: float) -> float:
    """Best of uniform / Neel / stripe energies for the ordered lattice, per site."""
    r, c = np.divmod(np.arange(L * L), L)
    pats = [np.ones(L * L), np.where((r + c) % 2 == 0, 1.0, -1.0), np.where(r % 2 == 0, 1.0, -1.0)]
    J = dense(L * L, lattice_triples(L, J1, J2))
    return min(float(-0.5 * p @ J @ p) for p in pats) / (L * L)
