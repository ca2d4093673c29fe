"""Stabilizer-tableau simulator for the Z2-symmetric gate set.

The state of L qubits is held as L stabilizer + L destabilizer Pauli rows
packed 64 sites per word (see ``_tabkernels``).  The gate set is the one
the circuits need: CNOTNOT (a control flipping two targets), CZ, the
two-site rotation used inside composite measurements, and a four-site
diagonal phase gate, plus projective Pauli measurement.  Second Renyi
entropies come from the GF(2) rank of the generators restricted to a
region and are returned in nats.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _tabkernels as tk
from .rng import Stream

LN2 = math.log(2.0)

# Two-site rotation: maps |00> -> (|00>+|11>)/sqrt(2), |01> -> (|01>+|10>)/sqrt(2),
# |10> -> (|01>-|10>)/sqrt(2), |11> -> (|00>-|11>)/sqrt(2).  Basis index is
# 2*left_bit + right_bit.
ROT_MATRIX = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [0, 1, -1, 0],
        [1, 0, 0, -1],
    ],
    dtype=np.float64,
) / np.sqrt(2.0)

_PAULI_1Q = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
}


def _conjugation_table(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tabulate P -> U P U^dag over the 16 two-site Hermitian Paulis.

    Returns (newbits, sign) uint8 arrays indexed by
    k = xa | za<<1 | xb<<2 | zb<<3; U must map Paulis to +/-Paulis.
    """
    paulis = {}
    for k in range(16):
        xa, za, xb, zb = k & 1, (k >> 1) & 1, (k >> 2) & 1, (k >> 3) & 1
        paulis[k] = np.kron(_PAULI_1Q[(xa, za)], _PAULI_1Q[(xb, zb)])
    newbits = np.zeros(16, dtype=np.uint8)
    sign = np.zeros(16, dtype=np.uint8)
    for k in range(16):
        q = u @ paulis[k] @ u.conj().T
        for k2 in range(16):
            if np.allclose(q, paulis[k2], atol=1e-12):
                newbits[k], sign[k] = k2, 0
                break
            if np.allclose(q, -paulis[k2], atol=1e-12):
                newbits[k], sign[k] = k2, 1
                break
        else:
            raise ValueError("not a +/-Pauli conjugation")
    return newbits, sign


ROT_NEWBITS, ROT_SIGN = _conjugation_table(ROT_MATRIX.astype(complex))


class GateKind(enum.Enum):
    CNN_L = "CNN_L"
    CNN_R = "CNN_R"
    CZ = "CZ"
    ROT = "ROT"
    PHASE4 = "PHASE4"


_GATE_ARITY = {
    GateKind.CNN_L: 3,
    GateKind.CNN_R: 3,
    GateKind.CZ: 2,
    GateKind.ROT: 2,
    GateKind.PHASE4: 4,
}


class GateError(ValueError):
    pass


@dataclass(frozen=True)
class GateSpec:
    kind: GateKind
    sites: tuple[int, ...]

    def validate(self, n_qubits: int) -> None:
        arity = _GATE_ARITY[self.kind]
        if len(self.sites) != arity:
            raise GateError(f"{self.kind.value} takes {arity} sites, got {self.sites}")
        if len(set(self.sites)) != len(self.sites):
            raise GateError(f"duplicated sites in {self.sites}")
        for s in self.sites:
            if not 0 <= s < n_qubits:
                raise GateError(f"site {s} out of range for {n_qubits} qubits")


@dataclass(frozen=True)
class PauliString:
    """Signed Pauli operator as packed x/z masks over L sites."""

    n_qubits: int
    x_mask: int
    z_mask: int
    sign: int = 1

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("need at least one site")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        top = 1 << self.n_qubits
        if not (0 <= self.x_mask < top and 0 <= self.z_mask < top):
            raise ValueError("mask does not fit the register")

    @classmethod
    def z_string(cls, n_qubits: int, sites=None) -> "PauliString":
        mask = 0
        for s in range(n_qubits) if sites is None else sites:
            mask |= 1 << s
        return cls(n_qubits, 0, mask)

    @classmethod
    def single(cls, n_qubits: int, site: int, kind: str) -> "PauliString":
        x = 1 << site if kind in ("X", "Y") else 0
        z = 1 << site if kind in ("Z", "Y") else 0
        return cls(n_qubits, x, z)

    def packed(self, n_words: int) -> tuple[np.ndarray, np.ndarray]:
        opx = np.zeros(n_words, dtype=np.uint64)
        opz = np.zeros(n_words, dtype=np.uint64)
        for w in range(n_words):
            opx[w] = np.uint64((self.x_mask >> (64 * w)) & 0xFFFFFFFFFFFFFFFF)
            opz[w] = np.uint64((self.z_mask >> (64 * w)) & 0xFFFFFFFFFFFFFFFF)
        return opx, opz


class Tableau:
    """Stabilizer state with destabilizer bookkeeping for O(L^2) measurement."""

    def __init__(self, n_qubits: int):
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        self.n = n_qubits
        self.n_words = (n_qubits + 63) // 64
        self.x = np.zeros((2 * n_qubits, self.n_words), dtype=np.uint64)
        self.z = np.zeros((2 * n_qubits, self.n_words), dtype=np.uint64)
        self.r = np.zeros(2 * n_qubits, dtype=np.uint8)
        for i in range(n_qubits):
            w, b = i >> 6, np.uint64(i & 63)
            self.x[i, w] |= np.uint64(1) << b          # destabilizer X_i
            self.z[n_qubits + i, w] |= np.uint64(1) << b  # stabilizer Z_i

    @classmethod
    def all_plus(cls, n_qubits: int) -> "Tableau":
        """|+>^L, stabilized by {X_i}."""
        if n_qubits < 2:
            raise ValueError("chain states need L >= 2")
        t = cls(n_qubits)
        for i in range(n_qubits):
            tk.apply_hadamard(t.x, t.z, t.r, i)
        return t

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n, t.n_words = self.n, self.n_words
        t.x, t.z, t.r = self.x.copy(), self.z.copy(), self.r.copy()
        return t

    # -- gates ---------------------------------------------------------

    def apply_gate(self, gate: GateSpec) -> None:
        gate.validate(self.n)
        s = gate.sites
        if gate.kind is GateKind.CNN_L:
            tk.apply_cnot(self.x, self.z, self.r, s[0], s[1])
            tk.apply_cnot(self.x, self.z, self.r, s[0], s[2])
        elif gate.kind is GateKind.CNN_R:
            tk.apply_cnot(self.x, self.z, self.r, s[2], s[0])
            tk.apply_cnot(self.x, self.z, self.r, s[2], s[1])
        elif gate.kind is GateKind.CZ:
            tk.apply_cz(self.x, self.z, self.r, s[0], s[1])
        elif gate.kind is GateKind.ROT:
            tk.apply_table2(self.x, self.z, self.r, s[0], s[1], ROT_NEWBITS, ROT_SIGN)
        elif gate.kind is GateKind.PHASE4:
            # pi phase exactly on the strings whose two middle sites are 11
            tk.apply_cz(self.x, self.z, self.r, s[1], s[2])
        else:  # pragma: no cover
            raise GateError(f"unknown gate {gate.kind}")

    def apply_pauli_frame(self, site: int, kind: str) -> None:
        """Apply a Pauli X/Z/Y (sign bookkeeping only)."""
        if kind in ("X", "Y"):
            tk.apply_pauli_x(self.x, self.z, self.r, site)
        if kind in ("Z", "Y"):
            tk.apply_pauli_z(self.x, self.z, self.r, site)

    # -- measurement ---------------------------------------------------

    def measure_pauli(self, op: PauliString, rng: Stream | None = None,
                      forced: int | None = None) -> int:
        """Measure a signed Pauli; returns +1 or -1.

        The random branch consumes one bit from ``rng`` unless ``forced``
        (+1/-1) is given.  Forcing a deterministic measurement to the
        opposite value raises.
        """
        if op.n_qubits != self.n:
            raise ValueError("operator length mismatch")
        opx, opz = op.packed(self.n_words)
        flip = 1 if op.sign < 0 else 0
        if forced is None:
            if rng is None:
                raise ValueError("need rng or forced outcome")
            coin = rng.bit()
            fbit = -1
        else:
            coin = 0
            fbit = (0 if forced > 0 else 1) ^ flip
        bit, was_random = tk.measure_pauli_masks(
            self.x, self.z, self.r, self.n, opx, opz, coin, fbit)
        out_bit = int(bit) ^ flip
        outcome = 1 if out_bit == 0 else -1
        if not was_random and forced is not None and outcome != forced:
            raise ValueError("cannot post-select a deterministic measurement "
                             f"to {forced}: state gives {outcome}")
        return outcome

    def measure_z_site(self, site: int, coin: int, forced: int = -1) -> int:
        """Fast path for single-site Z; returns the outcome bit sigma."""
        return int(tk.measure_z_site(self.x, self.z, self.r, self.n, site, coin, forced))

    def composite_measure(self, bond: tuple[int, int], side: str,
                          rng: Stream | None = None, coin: int | None = None,
                          pbc: bool = True, chain_len: int | None = None) -> int:
        """Z projection on one side of a bond followed by the two-site
        rotation on the bond.  Returns sigma in {0, 1}.  chain_len bounds
        the cyclic chain when it is shorter than the register (purification
        acts on the first half of a doubled register)."""
        a, b = bond
        n = chain_len if chain_len is not None else self.n
        ok = (b == a + 1 < n + 1) or (pbc and a == n - 1 and b == 0)
        if not ok:
            raise GateError(f"bond {bond} is not adjacent (pbc={pbc})")
        if coin is None:
            if rng is None:
                raise ValueError("need rng or coin")
            coin = rng.bit()
        site = a if side == "L" else b
        sigma = self.measure_z_site(site, coin)
        tk.apply_table2(self.x, self.z, self.r, a, b, ROT_NEWBITS, ROT_SIGN)
        return sigma

    # -- observables ----------------------------------------------------

    def renyi2(self, region: tuple[int, int]) -> float:
        """Second Renyi entropy in nats of the contiguous region [a, b)."""
        a, b = region
        if a == b:
            return 0.0
        if not (0 <= a < b <= self.n):
            raise ValueError(f"region {region} out of range")
        rank = tk.rank_region(self.x, self.z, self.n, a, b)
        return float(rank - (b - a)) * LN2

    def entropy_profile(self, regions) -> list[float]:
        return [self.renyi2(reg) for reg in regions]

    def is_valid(self) -> bool:
        """Symplectic-basis sanity check (tests and debugging)."""
        return bool(tk.symplectic_check(self.x, self.z, self.n))

    def stabilizer_strings(self) -> list[str]:
        """Human-readable generators, site 0 leftmost."""
        out = []
        for i in range(self.n, 2 * self.n):
            chars = []
            for s in range(self.n):
                xb = int(tk.getbit(self.x[i], s))
                zb = int(tk.getbit(self.z[i], s))
                chars.append("IXZY"[xb + 2 * zb])
            out.append(("-" if self.r[i] else "+") + "".join(chars))
        return out


def tableau_init_plus(L: int) -> Tableau:
    return Tableau.all_plus(L)
