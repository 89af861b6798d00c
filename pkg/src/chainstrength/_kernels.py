"""Compiled inner loops: Gray-code enumeration and Metropolis annealing."""
import numpy as np
from numba import njit

# full recompute of the running energy every 2**RESYNC_BITS Gray steps
RESYNC_BITS = 12


@njit(cache=True, nogil=True)
def _full_energy(spins, ptr, nbr, J):
    e = 0.0
    for q in range(len(spins)):
        for p in range(ptr[q], ptr[q + 1]):
            j = nbr[p]
            if j > q:
                e -= J[p] * spins[q] * spins[j]
    return e


@njit(cache=True, nogil=True)
def _broken_bonds(spins, c_ptr, c_nbr):
    k = 0
    for q in range(len(spins)):
        for p in range(c_ptr[q], c_ptr[q + 1]):
            j = c_nbr[p]
            if j > q and spins[q] != spins[j]:
                k += 1
    return k


@njit(cache=True, nogil=True)
def enumerate_levels(n, start, stop, a_ptr, a_nbr, a_J, c_ptr, c_nbr, n_cbonds, tol):
    """Walk Gray-code indices [start, stop) over n spins.

    Energies split as A(s) (all non-chain bonds) plus a count k of broken
    chain bonds. For each k returns the lowest A, its multiplicity and the
    next distinct A above it.
    """
    amin = np.full(n_cbonds + 1, np.inf)
    acount = np.zeros(n_cbonds + 1, np.int64)
    asecond = np.full(n_cbonds + 1, np.inf)

    spins = np.empty(n, np.int8)
    g = start ^ (start >> 1)
    for q in range(n):
        spins[q] = -1 if (g >> q) & 1 else 1
    A = _full_energy(spins, a_ptr, a_nbr, a_J)
    k = _broken_bonds(spins, c_ptr, c_nbr)
    resync_mask = (1 << RESYNC_BITS) - 1

    idx = start
    while True:
        if A < amin[k] - tol:
            asecond[k] = amin[k]
            amin[k] = A
            acount[k] = 1
        elif A <= amin[k] + tol:
            acount[k] += 1
            if A < amin[k]:
                amin[k] = A
        elif A < asecond[k]:
            asecond[k] = A

        idx += 1
        if idx >= stop:
            break
        q = 0
        while not (idx >> q) & 1:
            q += 1
        s = spins[q]
        h = 0.0
        for p in range(a_ptr[q], a_ptr[q + 1]):
            h += a_J[p] * spins[a_nbr[p]]
        for p in range(c_ptr[q], c_ptr[q + 1]):
            if spins[c_nbr[p]] == s:
                k += 1
            else:
                k -= 1
        spins[q] = -s
        if idx & resync_mask == 0:
            A = _full_energy(spins, a_ptr, a_nbr, a_J)
        else:
            A += 2.0 * s * h
    return amin, acount, asecond


@njit(cache=True, nogil=True)
def gray_walk_energies(n, start, count, ptr, nbr, J):
    """Incremental energies along ``count`` Gray steps from ``start`` (audit helper)."""
    out = np.empty(count, np.float64)
    states = np.empty(count, np.int64)
    spins = np.empty(n, np.int8)
    g = start ^ (start >> 1)
    for q in range(n):
        spins[q] = -1 if (g >> q) & 1 else 1
    E = _full_energy(spins, ptr, nbr, J)
    idx = start
    for t in range(count):
        out[t] = E
        states[t] = idx ^ (idx >> 1)
        idx += 1
        q = 0
        while not (idx >> q) & 1:
            q += 1
        s = spins[q]
        h = 0.0
        for p in range(ptr[q], ptr[q + 1]):
            h += J[p] * spins[nbr[p]]
        spins[q] = -s
        E += 2.0 * s * h
    return out, states


@njit(cache=True, nogil=True, fastmath=True)
def anneal_shot(n, ptr, nbr, J, betas, rng, spins, h):
    """Single-spin-flip Metropolis annealing from a uniformly random start.

    ``spins`` receives the final configuration; ``h`` is scratch space for
    local fields.
    """
    for q in range(n):
        spins[q] = 1 if rng.random() < 0.5 else -1
    for q in range(n):
        acc = 0.0
        for p in range(ptr[q], ptr[q + 1]):
            acc += J[p] * spins[nbr[p]]
        h[q] = acc
    for t in range(len(betas)):
        beta = betas[t]
        for q in range(n):
            s = spins[q]
            dE = 2.0 * s * h[q]
            if dE > 0.0:
                # accept with probability exp(-x): x < Exp(1) variate
                x = beta * dE
                if x > 40.0 or x >= rng.standard_exponential():
                    continue
            spins[q] = -s
            for p in range(ptr[q], ptr[q + 1]):
                h[nbr[p]] -= 2.0 * J[p] * s
