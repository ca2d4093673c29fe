"""Whole-trajectory kernels for the hybrid chain and purification runs.

The random-draw order inside a time step is the contract shared with the
Python-level scheduler in ``circuits`` (see ``draw_step`` there); the two
are pinned against each other by tests.  Per layer:

  CNN layer:      one disjoint tiling (offset draw mod 3, then one
                  control-side bit per applied block), then a u01 draw
                  against the second-tiling rate and, when it hits, the
                  second tiling's draws.
  CZ layers:      no randomness; brickwork offset 0 then 1 within a step.
  measured layer: bonds visited row by row ((0,1),(2,3),.. then (1,2),..,
                  wrapping under PBC); per visited bond one u01 draw
                  against p, and when it hits, one side bit (0 -> project
                  the left qubit) and one outcome coin.
"""

import numpy as np
from numba import njit

from ._tabkernels import (
    CNN_SECOND_TILING_PROB, U0, U1, apply_cnot, apply_cz, apply_table2,
    measure_pauli_masks, measure_z_site, rank_region, rng_next, rng_u01)

LN2 = float(np.log(2.0))
_U3 = np.uint64(3)



@njit(cache=True)
def _cnn_tiling(x, z, r, L, pbc, st):
    """Disjoint tiling of three-site flip gates with a random offset; the
    control sits left or right with equal probability.  Draws: one offset
    (mod 3), then one control-side bit per applied block."""
    off = int(rng_next(st) % _U3)
    for k in range(L // 3):
        s = off + 3 * k
        if (not pbc) and s + 2 >= L:
            break
        kind = rng_next(st) & U1
        s0, s1, s2 = s % L, (s + 1) % L, (s + 2) % L
        if kind == U0:
            apply_cnot(x, z, r, s0, s1)
            apply_cnot(x, z, r, s0, s2)
        else:
            apply_cnot(x, z, r, s2, s0)
            apply_cnot(x, z, r, s2, s1)


@njit(cache=True)
def _cnn_layer(x, z, r, L, pbc, st):
    """One tiling, plus a second independent one at the calibrated rate."""
    _cnn_tiling(x, z, r, L, pbc, st)
    if rng_u01(st) < CNN_SECOND_TILING_PROB:
        _cnn_tiling(x, z, r, L, pbc, st)


@njit(cache=True)
def _cz_layer(x, z, r, L, pbc, which):
    for i in range(L // 2):
        a = 2 * i + which
        b = a + 1
        if b == L:
            if not pbc:
                continue
            b = 0
        apply_cz(x, z, r, a, b)


@njit(cache=True)
def _measured_layer(x, z, r, nq, L, p, pbc, st, rot_bits, rot_sign):
    for rowoff in range(2):
        for i in range(L // 2):
            a = 2 * i + rowoff
            b = a + 1
            if b == L:
                if not pbc:
                    continue
                b = 0
            if rng_u01(st) < p:
                side = rng_next(st) & U1
                coin = int(rng_next(st) & U1)
                proj = a if side == U0 else b
                measure_z_site(x, z, r, nq, proj, coin, -1)
                apply_table2(x, z, r, a, b, rot_bits, rot_sign)


@njit(cache=True)
def step_chain(x, z, r, L, p, pbc, no_cnn, cz_early, st, rot_bits, rot_sign):
    if no_cnn:
        _measured_layer(x, z, r, L, L, p, pbc, st, rot_bits, rot_sign)
        _cz_layer(x, z, r, L, pbc, 0)
        _measured_layer(x, z, r, L, L, p, pbc, st, rot_bits, rot_sign)
        _cz_layer(x, z, r, L, pbc, 1)
        _measured_layer(x, z, r, L, L, p, pbc, st, rot_bits, rot_sign)
    elif cz_early:
        _cnn_layer(x, z, r, L, pbc, st)
        _cz_layer(x, z, r, L, pbc, 0)
        _measured_layer(x, z, r, L, L, p, pbc, st, rot_bits, rot_sign)
        _cnn_layer(x, z, r, L, pbc, st)
        _cz_layer(x, z, r, L, pbc, 1)
        _measured_layer(x, z, r, L, L, p, pbc, st, rot_bits, rot_sign)
        _cnn_layer(x, z, r, L, pbc, st)
        _measured_layer(x, z, r, L, L, p, pbc, st, rot_bits, rot_sign)
    else:
        _cnn_layer(x, z, r, L, pbc, st)
        _measured_layer(x, z, r, L, L, p, pbc, st, rot_bits, rot_sign)
        _cz_layer(x, z, r, L, pbc, 0)
        _cnn_layer(x, z, r, L, pbc, st)
        _measured_layer(x, z, r, L, L, p, pbc, st, rot_bits, rot_sign)
        _cz_layer(x, z, r, L, pbc, 1)
        _cnn_layer(x, z, r, L, pbc, st)
        _measured_layer(x, z, r, L, L, p, pbc, st, rot_bits, rot_sign)


@njit(cache=True)
def step_purify(x, z, r, nq, L, p, pbc, st, rot_bits, rot_sign):
    for _ in range(3):
        _cnn_layer(x, z, r, L, pbc, st)
        _measured_layer(x, z, r, nq, L, p, pbc, st, rot_bits, rot_sign)


@njit(cache=True)
def _fresh_plus(n):
    W = (n + 63) >> 6
    x = np.zeros((2 * n, W), dtype=np.uint64)
    z = np.zeros((2 * n, W), dtype=np.uint64)
    r = np.zeros(2 * n, dtype=np.uint8)
    for i in range(n):
        z[i, i >> 6] |= U1 << np.uint64(i & 63)        # destabilizer Z_i
        x[n + i, i >> 6] |= U1 << np.uint64(i & 63)    # stabilizer X_i
    return x, z, r


@njit(cache=True)
def _project_parity(x, z, r, n, lo, hi):
    W = x.shape[1]
    opx = np.zeros(W, dtype=np.uint64)
    opz = np.zeros(W, dtype=np.uint64)
    for s in range(lo, hi):
        opz[s >> 6] |= U1 << np.uint64(s & 63)
    measure_pauli_masks(x, z, r, n, opx, opz, 0, 0)


@njit(cache=True)
def prep_chain(L):
    x, z, r = _fresh_plus(L)
    _project_parity(x, z, r, L, 0, L)
    return x, z, r


@njit(cache=True)
def prep_purify(L):
    """2L qubits: both halves parity-projected, then one layer of
    four-site phase gates pairing (2i, 2i+1 | L+2i, L+2i+1)."""
    n = 2 * L
    x, z, r = _fresh_plus(n)
    _project_parity(x, z, r, n, 0, L)
    _project_parity(x, z, r, n, L, 2 * L)
    for i in range(L // 2):
        apply_cz(x, z, r, 2 * i + 1, L + 2 * i)
    return x, z, r


@njit(cache=True)
def entropy_nats(x, z, n, a, b):
    if a == b:
        return 0.0
    return (rank_region(x, z, n, a, b) - (b - a)) * LN2


@njit(cache=True)
def chain_trajectory(seed, L, p, pbc, no_cnn, cz_early, t_max,
                     series_a, series_b, record_ts,
                     cuts_a, cuts_b, window_start, window_stride,
                     rot_bits, rot_sign):
    """Run one trajectory; record the entropy of [series_a, series_b) at
    the given times and accumulate late-window entropies for each cut.

    Returns (series, cut_sums, n_window_samples)."""
    st = np.empty(1, dtype=np.uint64)
    st[0] = seed
    x, z, r = prep_chain(L)
    series = np.zeros(record_ts.size, dtype=np.float64)
    cut_sums = np.zeros(cuts_a.size, dtype=np.float64)
    nwin = 0
    ri = 0
    for t in range(1, t_max + 1):
        step_chain(x, z, r, L, p, pbc, no_cnn, cz_early, st, rot_bits, rot_sign)
        while ri < record_ts.size and record_ts[ri] == t:
            series[ri] = entropy_nats(x, z, L, series_a, series_b)
            ri += 1
        if cuts_a.size > 0 and t >= window_start and \
                (t - window_start) % window_stride == 0:
            for c in range(cuts_a.size):
                cut_sums[c] += entropy_nats(x, z, L, cuts_a[c], cuts_b[c])
            nwin += 1
    return series, cut_sums, nwin


@njit(cache=True)
def purify_trajectory(seed, L, p, pbc, t_max, record_ts, rot_bits, rot_sign):
    """Purification run: the hybrid circuit acts on sites [0, L) of a
    2L-qubit register; records S_A at the given times.  Once the state
    purifies (S_A = 0) it stays pure, so the run exits early."""
    st = np.empty(1, dtype=np.uint64)
    st[0] = seed
    n = 2 * L
    x, z, r = prep_purify(L)
    series = np.zeros(record_ts.size, dtype=np.float64)
    ri = 0
    for t in range(1, t_max + 1):
        step_purify(x, z, r, n, L, p, pbc, st, rot_bits, rot_sign)
        if ri < record_ts.size and record_ts[ri] == t:
            s = entropy_nats(x, z, n, 0, L)
            while ri < record_ts.size and record_ts[ri] == t:
                series[ri] = s
                ri += 1
            if s == 0.0:
                break  # remaining entries stay exactly zero
    return series
