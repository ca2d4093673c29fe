"""numba kernels for the classical bit-string / particle ensembles.

All lattices are uint8 occupancy fields.  A time step mirrors the circuit
schedule: three branching (CNOTNOT-derived) layers and three measured
layers, with the two phase-gate layers moving no particles (they only
feed the two-species meeting detector); the no_cnn variant drops the
branching layers.  Draw order per step is fixed: branching layer -> per
gate one position draw then one control-side bit; measured layer -> one
u01 per visited bond, then a side bit when it hits (plus an outcome bit
only in the explicit string-pair kernel).
"""

import numpy as np
from numba import njit

from ._tabkernels import CNN_SECOND_TILING_PROB, U1, rng_next, rng_u01

U0_ = np.uint64(0)
_U3 = np.uint64(3)


@njit(cache=True, inline="always")
def _branch_tiling(hs, L, pbc, st):
    off = int(rng_next(st) % _U3)
    for k in range(L // 3):
        s = off + 3 * k
        if (not pbc) and s + 2 >= L:
            break
        kind = rng_next(st) & U1
        s0, s1, s2 = s % L, (s + 1) % L, (s + 2) % L
        if kind == U0_:
            c, t1, t2 = s0, s1, s2
        else:
            c, t1, t2 = s2, s0, s1
        for f in range(hs.shape[0]):
            if hs[f, c]:
                hs[f, t1] ^= 1
                hs[f, t2] ^= 1


@njit(cache=True, inline="always")
def _branch_layer(hs, L, pbc, st):
    _branch_tiling(hs, L, pbc, st)
    if rng_u01(st) < CNN_SECOND_TILING_PROB:
        _branch_tiling(hs, L, pbc, st)


@njit(cache=True, inline="always")
def _measured_layer(hs, L, p, pbc, st):
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
                for f in range(hs.shape[0]):
                    if side == U0_:
                        hs[f, b] ^= hs[f, a]
                        hs[f, a] = 0
                    else:
                        hs[f, a] ^= hs[f, b]
                        hs[f, b] = 0


@njit(cache=True, inline="always")
def _boundary_hit(hs, la):
    return hs[0, la - 1] != 0 or hs[0, la] != 0


@njit(cache=True)
def pair_boundary_ensemble(seeds, L, la, p, t_max, no_cnn, density_num,
                           density_den):
    """Single-species first-passage runs (open boundary).

    Each sample starts with particles dropped in [0, la) with probability
    density_num/density_den per site (even total weight) and dies the
    first time a particle sits on either site adjacent to the cut.
    Returns death step per sample (-1: never up to t_max)."""
    n = seeds.size
    death = np.full(n, -1, dtype=np.int32)
    h = np.zeros((1, L), dtype=np.uint8)
    st = np.empty(1, dtype=np.uint64)
    for s in range(n):
        st[0] = seeds[s]
        h[0, :] = 0
        w = 0
        for i in range(la):
            if rng_next(st) % density_den < density_num:
                h[0, i] = 1
                w += 1
        if w & 1:
            h[0, la - 1] ^= 1  # keep the pair difference parity even
        dead = False
        for t in range(1, t_max + 1):
            if no_cnn:
                for _ in range(3):
                    _measured_layer(h, L, p, False, st)
                    if _boundary_hit(h, la):
                        dead = True
                        break
            else:
                for _ in range(3):
                    _branch_layer(h, L, False, st)
                    if _boundary_hit(h, la):
                        dead = True
                        break
                    _measured_layer(h, L, p, False, st)
                    if _boundary_hit(h, la):
                        dead = True
                        break
            if dead:
                death[s] = t
                break
            if t % 16 == 0:
                alive = False
                for i in range(L):
                    if h[0, i]:
                        alive = True
                        break
                if not alive:
                    break  # absorbing empty state: survives forever
    return death


@njit(cache=True, inline="always")
def _cross_phase_hit(hs, L, which, pbc):
    """True when a phase-gate layer generates a relative phase: some
    covered bond carries linearly independent species fields (the GF(2)
    determinant of the two bond columns is odd)."""
    for i in range(L // 2):
        a = 2 * i + which
        b = a + 1
        if b == L:
            if not pbc:
                continue
            b = 0
        if (hs[0, a] & hs[1, b]) ^ (hs[1, a] & hs[0, b]):
            return True
    return False


@njit(cache=True, inline="always")
def _two_species_measured_layer(hs, L, p, st):
    """Measured layer for the species pair.  A projection with the right
    qubit projected carries the rotation's minus rows, so it generates
    the same odd cross phase as a covering phase gate whenever the two
    species fields are independent on the bond; the sample dies there.
    Returns True on death (the layer still completes)."""
    died = False
    for rowoff in range(2):
        for i in range(L // 2):
            a = 2 * i + rowoff
            b = a + 1
            if b == L:
                continue  # open boundary
            if rng_u01(st) < p:
                side = rng_next(st) & U1
                if side != U0_:
                    if (hs[0, a] & hs[1, b]) ^ (hs[1, a] & hs[0, b]):
                        died = True
                for f in range(2):
                    if side == U0_:
                        hs[f, b] ^= hs[f, a]
                        hs[f, a] = 0
                    else:
                        hs[f, a] ^= hs[f, b]
                        hs[f, b] = 0
    return died


@njit(cache=True, inline="always")
def _strict_contact(hs, L):
    for i in range(L):
        if hs[0, i] & hs[1, i]:
            return True
        if i + 1 < L and ((hs[0, i] & hs[1, i + 1]) or (hs[1, i] & hs[0, i + 1])):
            return True
    return False


@njit(cache=True)
def two_species_ensemble(seeds, L, la, p, t_max, no_cnn, strict):
    """Two-species survival runs (open boundary): X dropped in [0, la),
    Y in [la, L), each site with probability 1/2.  A sample dies when a
    phase-gate layer covers a bond with opposite species at its ends
    (strict: any contact within one site after any sub-layer).  Returns
    the meeting step per sample (-1: never)."""
    n = seeds.size
    meet = np.full(n, -1, dtype=np.int32)
    hs = np.zeros((2, L), dtype=np.uint8)
    st = np.empty(1, dtype=np.uint64)
    for s in range(n):
        st[0] = seeds[s]
        hs[:, :] = 0
        for i in range(la):
            if rng_next(st) & U1:
                hs[0, i] = 1
        for i in range(la, L):
            if rng_next(st) & U1:
                hs[1, i] = 1
        dead = False
        for t in range(1, t_max + 1):
            for sub in range(3):
                if not no_cnn:
                    _branch_layer(hs, L, False, st)
                    if strict and _strict_contact(hs, L):
                        dead = True
                        break
                if strict:
                    _measured_layer(hs, L, p, False, st)
                    if _strict_contact(hs, L):
                        dead = True
                        break
                elif _two_species_measured_layer(hs, L, p, st):
                    dead = True
                    break
                if sub < 2:
                    if strict:
                        if _strict_contact(hs, L):
                            dead = True
                            break
                    elif _cross_phase_hit(hs, L, sub, False):
                        dead = True
                        break
            if dead:
                meet[s] = t
                break
            if t % 8 == 0:
                any_x = False
                any_y = False
                for i in range(L):
                    if hs[0, i]:
                        any_x = True
                    if hs[1, i]:
                        any_y = True
                if not (any_x and any_y):
                    break  # one species extinct: they can never meet
    return meet


@njit(cache=True)
def two_species_parity_ensemble(seeds, L, la, p, t_max, no_cnn, sign_sums):
    """Exact swap-phase parity runs: evolve both species fields and
    accumulate the deterministic pi flips (odd bond determinant under a
    phase-gate layer, or under an applied measurement projecting the
    right qubit).  Adds (-1)^flips into sign_sums[t]; the average is the
    classical purity estimate with sign cancellation kept."""
    hs = np.zeros((2, L), dtype=np.uint8)
    st = np.empty(1, dtype=np.uint64)
    for s in range(seeds.size):
        st[0] = seeds[s]
        hs[:, :] = 0
        for i in range(la):
            if rng_next(st) & U1:
                hs[0, i] = 1
        for i in range(la, L):
            if rng_next(st) & U1:
                hs[1, i] = 1
        theta = np.uint8(0)
        frozen = False
        sign_sums[0] += 1.0
        for t in range(1, t_max + 1):
            if not frozen:
                for sub in range(3):
                    if not no_cnn:
                        _branch_layer(hs, L, False, st)
                    # measured layer with exact right-side phase flips
                    for rowoff in range(2):
                        for i in range(L // 2):
                            a = 2 * i + rowoff
                            b = a + 1
                            if b == L:
                                continue
                            if rng_u01(st) < p:
                                side = rng_next(st) & U1
                                if side != U0_:
                                    theta ^= (hs[0, a] & hs[1, b]) ^ (hs[1, a] & hs[0, b])
                                for f in range(2):
                                    if side == U0_:
                                        hs[f, b] ^= hs[f, a]
                                        hs[f, a] = 0
                                    else:
                                        hs[f, a] ^= hs[f, b]
                                        hs[f, b] = 0
                    if sub < 2:
                        for i in range(L // 2):
                            a = 2 * i + sub
                            b = a + 1
                            if b >= L:
                                continue
                            theta ^= (hs[0, a] & hs[1, b]) ^ (hs[1, a] & hs[0, b])
                if t % 8 == 0:
                    any_x = False
                    any_y = False
                    for i in range(L):
                        if hs[0, i]:
                            any_x = True
                        if hs[1, i]:
                            any_y = True
                    if not (any_x and any_y):
                        frozen = True  # one species gone: phase is final
            sign_sums[t] += 1.0 - 2.0 * theta
    return seeds.size


@njit(cache=True)
def pair_phase_ensemble(seeds, L, la, p, t_max, no_cnn, sign_sums):
    """Explicit string-pair runs with phase accounting restricted to the
    right segment [la, L) (rightmost-site attribution).  Adds the running
    pair phase sign into sign_sums[t] for t = 0..t_max."""
    n1 = np.zeros(L, dtype=np.uint8)
    u = np.zeros(L, dtype=np.uint8)
    st = np.empty(1, dtype=np.uint64)
    for s in range(seeds.size):
        st[0] = seeds[s]
        par = 0
        for i in range(L):
            n1[i] = np.uint8(rng_next(st) & U1)
            par ^= n1[i]
        if par:
            n1[L - 1] ^= 1
        par = 0
        for i in range(L):
            u[i] = 0
        for i in range(la):
            u[i] = np.uint8(rng_next(st) & U1)
            par ^= u[i]
        if par:
            u[la - 1] ^= 1
        theta = 0
        sign_sums[0] += 1.0
        for t in range(1, t_max + 1):
            for sub in range(3):
                if not no_cnn:
                    # branching layer on both strings
                    reps = 1
                    pending = 1
                    while pending > 0:
                        pending -= 1
                        off = int(rng_next(st) % _U3)
                        for k in range(L // 3):
                            blk = off + 3 * k
                            if blk + 2 >= L:
                                break
                            kind = rng_next(st) & U1
                            if kind == U0_:
                                c, t1, t2 = blk, blk + 1, blk + 2
                            else:
                                c, t1, t2 = blk + 2, blk, blk + 1
                            if n1[c]:
                                n1[t1] ^= 1
                                n1[t2] ^= 1
                            if u[c]:
                                u[t1] ^= 1
                                u[t2] ^= 1
                        if reps == 1 and rng_u01(st) < CNN_SECOND_TILING_PROB:
                            reps = 2
                            pending = 1
                # measured layer with outcome draws and region phases
                for rowoff in range(2):
                    for i in range(L // 2):
                        a = 2 * i + rowoff
                        b = a + 1
                        if b == L:
                            continue
                        if rng_u01(st) < p:
                            side = rng_next(st) & U1
                            sigma = np.uint8(rng_next(st) & U1)
                            proj = a if side == U0_ else b
                            other = b if side == U0_ else a
                            if b >= la:
                                m1 = n1[a] & (1 ^ n1[proj] ^ sigma)
                                v = n1[a] ^ u[a]
                                vp = n1[proj] ^ u[proj]
                                m2 = v & (1 ^ vp ^ sigma)
                                theta ^= m1 ^ m2
                            npar = n1[a] ^ n1[b] ^ sigma
                            n1[proj] = sigma
                            n1[other] = npar
                            uo = u[a] ^ u[b]
                            u[proj] = 0
                            u[other] = uo
                # phase-gate layer contributions
                if sub < 2:
                    for i in range(L // 2):
                        a = 2 * i + sub
                        b = a + 1
                        if b >= L:
                            continue
                        if b >= la:
                            m1 = n1[a] & n1[b]
                            m2 = (n1[a] ^ u[a]) & (n1[b] ^ u[b])
                            theta ^= m1 ^ m2
            sign_sums[t] += 1.0 - 2.0 * theta
    return seeds.size


@njit(cache=True)
def universality_ensemble(seeds, L, p, t_max, seed_kind, no_cnn,
                          sum_n, sum_n2, surv, sum_r2, sum_r2sq, r2_count):
    """Seeded/filled lattice runs recording particle number, survival and
    spread.  seed_kind: 0 pair, 1 single, 2 full, 3 random half-filled.
    Seeded runs use an open boundary and are discarded on edge contact;
    filled runs are periodic.  Returns (n_kept, n_discarded)."""
    pbc = seed_kind >= 2
    h = np.zeros((1, L), dtype=np.uint8)
    st = np.empty(1, dtype=np.uint64)
    tmp_n = np.zeros(t_max + 1, dtype=np.int32)
    tmp_r2 = np.zeros(t_max + 1, dtype=np.float64)
    tmp_has_r2 = np.zeros(t_max + 1, dtype=np.uint8)
    kept = 0
    discarded = 0
    center = 0.5 * (L - 1)
    for s in range(seeds.size):
        st[0] = seeds[s]
        h[0, :] = 0
        if seed_kind == 0:
            h[0, L // 2 - 1] = 1
            h[0, L // 2] = 1
        elif seed_kind == 1:
            h[0, L // 2] = 1
        elif seed_kind == 2:
            h[0, :] = 1
        else:
            for i in range(L):
                h[0, i] = np.uint8(rng_next(st) & U1)
        bad = False
        for t in range(t_max + 1):
            if t > 0:
                if no_cnn:
                    for _ in range(3):
                        _measured_layer(h, L, p, pbc, st)
                else:
                    for _ in range(3):
                        _branch_layer(h, L, pbc, st)
                        _measured_layer(h, L, p, pbc, st)
            cnt = 0
            r2 = 0.0
            for i in range(L):
                if h[0, i]:
                    cnt += 1
                    d = i - center
                    r2 += d * d
            if (not pbc) and (h[0, 0] or h[0, L - 1]):
                bad = True
                break
            tmp_n[t] = cnt
            if cnt > 0:
                tmp_r2[t] = r2 / cnt
                tmp_has_r2[t] = 1
            else:
                tmp_r2[t] = 0.0
                tmp_has_r2[t] = 0
            if cnt == 0:
                # absorbing: the remaining record stays empty
                for tt in range(t + 1, t_max + 1):
                    tmp_n[tt] = 0
                    tmp_has_r2[tt] = 0
                break
        if bad:
            discarded += 1
            continue
        kept += 1
        for t in range(t_max + 1):
            v = float(tmp_n[t])
            sum_n[t] += v
            sum_n2[t] += v * v
            if tmp_n[t] > 0:
                surv[t] += 1
            if tmp_has_r2[t]:
                sum_r2[t] += tmp_r2[t]
                sum_r2sq[t] += tmp_r2[t] * tmp_r2[t]
                r2_count[t] += 1
    return kept, discarded
