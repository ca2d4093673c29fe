"""numba kernels for the bit-packed stabilizer tableau.

Representation (Aaronson-Gottesman layout):
  rows 0..n-1     destabilizers
  rows n..2n-1    stabilizers
  x[i, w], z[i, w]  uint64 words, site s lives in word s >> 6, bit s & 63
  r[i]              sign bit: row i represents (-1)^r[i] * prod_k W(x_k, z_k)
with the Hermitian single-site convention W(0,0)=I, W(1,0)=X, W(0,1)=Z,
W(1,1)=Y.  All phase updates below are exact for this convention.

Random numbers come from a splitmix64 state carried as a 1-element uint64
array; the update must stay bit-identical to ``rng.Stream``.
"""

import numpy as np
from numba import njit, uint64

# A branching layer is one disjoint tiling of three-site gates (random
# offset) plus, with this probability, a second independent tiling.  The
# layer density is a convention choice that moves the (non-universal)
# transition point; 0.2 is calibrated so the seeded-walk transition sits
# at the reference rate 0.335 while keeping the per-layer light cone
# bounded (overlap depth at most two tilings).
CNN_SECOND_TILING_PROB = 0.2

U0 = np.uint64(0)
U1 = np.uint64(1)
U2 = np.uint64(2)
U3 = np.uint64(3)
U6 = np.uint64(6)
U63 = np.uint64(63)
GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
POP1 = np.uint64(0x5555555555555555)
POP2 = np.uint64(0x3333333333333333)
POP3 = np.uint64(0x0F0F0F0F0F0F0F0F)
POP4 = np.uint64(0x0101010101010101)
INV53 = 2.0**-53


@njit(cache=True, inline="always")
def rng_next(st):
    st[0] = st[0] + GAMMA
    z = st[0]
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def rng_u01(st):
    return np.float64(rng_next(st) >> np.uint64(11)) * INV53


@njit(cache=True, inline="always")
def popcount64(v):
    v = v - ((v >> U1) & POP1)
    v = (v & POP2) + ((v >> U2) & POP2)
    v = (v + (v >> np.uint64(4))) & POP3
    return (v * POP4) >> np.uint64(56)


@njit(cache=True, inline="always")
def getbit(row, s):
    return (row[s >> 6] >> np.uint64(s & 63)) & U1


@njit(cache=True, inline="always")
def flipbit(row, s):
    row[s >> 6] ^= U1 << np.uint64(s & 63)


@njit(cache=True)
def apply_cnot(x, z, r, a, b):
    """Conjugate all rows by CNOT (control a, target b).
    X_a -> X_a X_b, Z_b -> Z_a Z_b; sign flips when x_a z_b (x_b ^ z_a ^ 1)."""
    wa, ba = a >> 6, np.uint64(a & 63)
    wb, bb = b >> 6, np.uint64(b & 63)
    for i in range(x.shape[0]):
        xa = (x[i, wa] >> ba) & U1
        za = (z[i, wa] >> ba) & U1
        xb = (x[i, wb] >> bb) & U1
        zb = (z[i, wb] >> bb) & U1
        r[i] ^= np.uint8(xa & zb & (xb ^ za ^ U1))
        x[i, wb] ^= xa << bb
        z[i, wa] ^= zb << ba


@njit(cache=True)
def apply_cz(x, z, r, a, b):
    """Conjugate all rows by CZ on (a, b): X_a -> X_a Z_b, X_b -> Z_a X_b."""
    wa, ba = a >> 6, np.uint64(a & 63)
    wb, bb = b >> 6, np.uint64(b & 63)
    for i in range(x.shape[0]):
        xa = (x[i, wa] >> ba) & U1
        za = (z[i, wa] >> ba) & U1
        xb = (x[i, wb] >> bb) & U1
        zb = (z[i, wb] >> bb) & U1
        r[i] ^= np.uint8(xa & xb & (za ^ zb))
        z[i, wa] ^= xb << ba
        z[i, wb] ^= xa << bb


@njit(cache=True)
def apply_pauli_x(x, z, r, a):
    wa, ba = a >> 6, np.uint64(a & 63)
    for i in range(x.shape[0]):
        r[i] ^= np.uint8((z[i, wa] >> ba) & U1)


@njit(cache=True)
def apply_pauli_z(x, z, r, a):
    wa, ba = a >> 6, np.uint64(a & 63)
    for i in range(x.shape[0]):
        r[i] ^= np.uint8((x[i, wa] >> ba) & U1)


@njit(cache=True)
def apply_hadamard(x, z, r, a):
    wa, ba = a >> 6, np.uint64(a & 63)
    for i in range(x.shape[0]):
        xa = (x[i, wa] >> ba) & U1
        za = (z[i, wa] >> ba) & U1
        r[i] ^= np.uint8(xa & za)
        d = (xa ^ za) << ba
        x[i, wa] ^= d
        z[i, wa] ^= d


@njit(cache=True)
def apply_table2(x, z, r, a, b, newbits, sign):
    """Conjugate all rows by a 2-site Clifford given as a 16-entry lookup
    over the local sub-Pauli (xa, za, xb, zb) -> (new bits, sign flip)."""
    wa, ba = a >> 6, np.uint64(a & 63)
    wb, bb = b >> 6, np.uint64(b & 63)
    for i in range(x.shape[0]):
        xa = (x[i, wa] >> ba) & U1
        za = (z[i, wa] >> ba) & U1
        xb = (x[i, wb] >> bb) & U1
        zb = (z[i, wb] >> bb) & U1
        k = int(xa | (za << U1) | (xb << U2) | (zb << np.uint64(3)))
        nb = np.uint64(newbits[k])
        r[i] ^= sign[k]
        x[i, wa] ^= (xa ^ (nb & U1)) << ba
        z[i, wa] ^= (za ^ ((nb >> U1) & U1)) << ba
        x[i, wb] ^= (xb ^ ((nb >> U2) & U1)) << bb
        z[i, wb] ^= (zb ^ ((nb >> np.uint64(3)) & U1)) << bb


@njit(cache=True, inline="always")
def _phase_words(x1, z1, x2, z2):
    """Per-word contribution to the i-exponent of W(x1,z1) * W(x2,z2).

    The per-site exponent e in W1 W2 = i^e W3 takes values {0, 1, 3};
    returns bit-planes (e & 1, e >> 1)."""
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    elow = (x1 & z1) ^ (x2 & z2) ^ (x3 & z3)
    e3 = (x1 & ~z1 & ~x2 & z2) | (~x1 & z1 & x2 & z2) | (x1 & z1 & x2 & ~z2)
    return elow, e3


@njit(cache=True, inline="always")
def rowsum(x, z, r, h, i):
    """row h := row i * row h with exact sign tracking (rows must commute
    for the sign to be meaningful; destabilizer signs are scratch)."""
    cl = U0
    c3 = U0
    for w in range(x.shape[1]):
        elow, e3 = _phase_words(x[i, w], z[i, w], x[h, w], z[h, w])
        cl += popcount64(elow)
        c3 += popcount64(e3)
        x[h, w] ^= x[i, w]
        z[h, w] ^= z[i, w]
    tot = (U2 * (np.uint64(r[h]) + np.uint64(r[i])) + cl + U2 * c3) & U3
    r[h] = np.uint8((tot >> U1) & U1)


@njit(cache=True, inline="always")
def rowxor(x, z, h, i):
    """row h := row i * row h without sign tracking (destabilizer rows,
    whose sign bits are scratch in this scheme)."""
    for w in range(x.shape[1]):
        x[h, w] ^= x[i, w]
        z[h, w] ^= z[i, w]


@njit(cache=True)
def _scratch_mul(sx, sz, sr, x, z, r, i):
    """scratch := row i * scratch; returns the new scratch sign bit."""
    cl = U0
    c3 = U0
    for w in range(x.shape[1]):
        elow, e3 = _phase_words(x[i, w], z[i, w], sx[w], sz[w])
        cl += popcount64(elow)
        c3 += popcount64(e3)
        sx[w] ^= x[i, w]
        sz[w] ^= z[i, w]
    tot = (U2 * (np.uint64(sr) + np.uint64(r[i])) + cl + U2 * c3) & U3
    return np.uint64((tot >> U1) & U1)


@njit(cache=True)
def measure_z_site(x, z, r, n, a, coin, forced):
    """Projective Z measurement on site a.

    coin is the pre-drawn random bit used when the outcome is random;
    forced in {-1, 0, 1} overrides it (post-selection).  Returns the
    outcome bit (0 -> +1, 1 -> -1); random branch replaces the pivot
    stabilizer per Aaronson-Gottesman.
    """
    wa, ba = a >> 6, np.uint64(a & 63)
    p = -1
    for i in range(n, 2 * n):
        if (x[i, wa] >> ba) & U1:
            p = i
            break
    if p >= 0:
        for i in range(n):
            if i != p - n and ((x[i, wa] >> ba) & U1):
                rowxor(x, z, i, p)
        for i in range(n, 2 * n):
            if i != p and ((x[i, wa] >> ba) & U1):
                rowsum(x, z, r, i, p)
        for w in range(x.shape[1]):
            x[p - n, w] = x[p, w]
            z[p - n, w] = z[p, w]
            x[p, w] = U0
            z[p, w] = U0
        r[p - n] = r[p]
        out = coin if forced < 0 else forced
        z[p, wa] = U1 << ba
        r[p] = np.uint8(out)
        return out
    # Deterministic: multiply the stabilizers flagged by anticommuting
    # destabilizers; the accumulated sign is the outcome.
    sx = np.zeros(x.shape[1], dtype=np.uint64)
    sz = np.zeros(x.shape[1], dtype=np.uint64)
    sr = U0
    for j in range(n):
        if (x[j, wa] >> ba) & U1:
            sr = _scratch_mul(sx, sz, sr, x, z, r, n + j)
    return int(sr)


@njit(cache=True)
def _anticommutes(x, z, i, opx, opz):
    acc = U0
    for w in range(x.shape[1]):
        acc ^= popcount64((x[i, w] & opz[w]) ^ (z[i, w] & opx[w]))
    return acc & U1


@njit(cache=True)
def measure_pauli_masks(x, z, r, n, opx, opz, coin, forced):
    """Projective measurement of the Pauli with packed masks (opx, opz),
    sign +1.  Same contract as measure_z_site."""
    p = -1
    for i in range(n, 2 * n):
        if _anticommutes(x, z, i, opx, opz):
            p = i
            break
    if p >= 0:
        for i in range(n):
            if i != p - n and _anticommutes(x, z, i, opx, opz):
                rowxor(x, z, i, p)
        for i in range(n, 2 * n):
            if i != p and _anticommutes(x, z, i, opx, opz):
                rowsum(x, z, r, i, p)
        for w in range(x.shape[1]):
            x[p - n, w] = x[p, w]
            z[p - n, w] = z[p, w]
            x[p, w] = opx[w]
            z[p, w] = opz[w]
        r[p - n] = r[p]
        out = coin if forced < 0 else forced
        r[p] = np.uint8(out)
        return out, 1
    sx = np.zeros(x.shape[1], dtype=np.uint64)
    sz = np.zeros(x.shape[1], dtype=np.uint64)
    sr = U0
    for j in range(n):
        if _anticommutes(x, z, j, opx, opz):
            sr = _scratch_mul(sx, sz, sr, x, z, r, n + j)
    return int(sr), 0


@njit(cache=True)
def rank_region(x, z, n, a, b):
    """GF(2) rank of the stabilizer generators restricted to sites [a, b)."""
    width = b - a
    nw = (2 * width + 63) >> 6
    work = np.zeros((n, nw), dtype=np.uint64)
    for i in range(n):
        for s in range(width):
            if getbit(x[n + i], a + s):
                work[i, s >> 6] |= U1 << np.uint64(s & 63)
            if getbit(z[n + i], a + s):
                t = s + width
                work[i, t >> 6] |= U1 << np.uint64(t & 63)
    rank = 0
    for col in range(2 * width):
        wc, bc = col >> 6, np.uint64(col & 63)
        pivot = -1
        for i in range(rank, n):
            if (work[i, wc] >> bc) & U1:
                pivot = i
                break
        if pivot < 0:
            continue
        if pivot != rank:
            for w in range(nw):
                tmp = work[rank, w]
                work[rank, w] = work[pivot, w]
                work[pivot, w] = tmp
        for i in range(rank + 1, n):
            if (work[i, wc] >> bc) & U1:
                for w in range(nw):
                    work[i, w] ^= work[rank, w]
        rank += 1
        if rank == n:
            break
    return rank


@njit(cache=True)
def symplectic_check(x, z, n):
    """Return True when the tableau rows form a valid symplectic basis:
    <destab_i, stab_j> = delta_ij and all stab/stab, destab/destab pairs
    commute."""
    for i in range(2 * n):
        for j in range(i, 2 * n):
            acc = U0
            for w in range(x.shape[1]):
                acc ^= popcount64((x[i, w] & z[j, w]) ^ (z[i, w] & x[j, w]))
            want = U1 if (j == i + n) else U0
            if (acc & U1) != want:
                return False
    return True
