"""Brute-force statevector reference used to validate both engines.

Everything here is built directly from the defining matrices/permutations
of the gate set, with no shared code paths with the package internals.
"""

from __future__ import annotations

import math

import numpy as np

ROT4 = np.array(
    [[1, 0, 0, 1],
     [0, 1, 1, 0],
     [0, 1, -1, 0],
     [1, 0, 0, -1]], dtype=np.complex128) / math.sqrt(2.0)

CZ4 = np.diag([1.0, 1.0, 1.0, -1.0]).astype(np.complex128)


class StateVector:
    def __init__(self, L: int, amp: np.ndarray | None = None):
        self.L = L
        if amp is None:
            amp = np.zeros(1 << L, dtype=np.complex128)
            amp[0] = 1.0
        self.amp = amp

    @classmethod
    def all_plus(cls, L: int) -> "StateVector":
        amp = np.full(1 << L, (0.5) ** (L / 2), dtype=np.complex128)
        return cls(L, amp)

    def copy(self) -> "StateVector":
        return StateVector(self.L, self.amp.copy())

    def _indices_by_bits(self, sites):
        idx = np.arange(1 << self.L)
        key = np.zeros(1 << self.L, dtype=np.int64)
        for pos, s in enumerate(sites):
            key |= ((idx >> s) & 1) << (len(sites) - 1 - pos)
        return idx, key

    def apply_matrix(self, u: np.ndarray, sites) -> None:
        """Apply a 2^k x 2^k matrix on the given sites; the leftmost site
        in `sites` is the most significant bit of the matrix index."""
        k = len(sites)
        idx, key = self._indices_by_bits(sites)
        new = np.zeros_like(self.amp)
        base = idx.copy()
        for s in sites:
            base &= ~(1 << s)
        for kin in range(1 << k):
            src = base.copy()
            for pos, s in enumerate(sites):
                if (kin >> (k - 1 - pos)) & 1:
                    src |= 1 << s
            new += u[key, kin] * self.amp[src]
        self.amp = new

    def apply_cnn(self, control: int, targets) -> None:
        idx = np.arange(1 << self.L)
        flip = (1 << targets[0]) | (1 << targets[1])
        src = idx ^ (((idx >> control) & 1) * flip)
        self.amp = self.amp[src]

    def apply_cz(self, a: int, b: int) -> None:
        idx = np.arange(1 << self.L)
        sign = 1.0 - 2.0 * (((idx >> a) & 1) & ((idx >> b) & 1))
        self.amp = self.amp * sign

    def apply_phase4(self, sites) -> None:
        # pi phase on |0110>, |0111>, |1110>, |1111> of the ordered 4-tuple,
        # i.e. whenever the two middle sites are both 1
        idx = np.arange(1 << self.L)
        sign = 1.0 - 2.0 * (((idx >> sites[1]) & 1) & ((idx >> sites[2]) & 1))
        self.amp = self.amp * sign

    def apply_rot(self, a: int, b: int) -> None:
        self.apply_matrix(ROT4, (a, b))

    def project_z(self, site: int, sigma: int) -> float:
        """Project site to sigma; returns the Born probability and
        renormalizes (raises on zero-probability branch)."""
        idx = np.arange(1 << self.L)
        keep = ((idx >> site) & 1) == sigma
        prob = float(np.sum(np.abs(self.amp[keep]) ** 2))
        if prob < 1e-12:
            raise ValueError("projection onto zero-weight branch")
        new = np.zeros_like(self.amp)
        new[keep] = self.amp[keep] / math.sqrt(prob)
        self.amp = new
        return prob

    def composite_measure(self, bond, side: str, sigma: int) -> float:
        a, b = bond
        proj = a if side == "L" else b
        prob = self.project_z(proj, sigma)
        self.apply_rot(a, b)
        return prob

    def measure_pauli_forced(self, x_mask: int, z_mask: int, sign: int,
                             outcome: int) -> float:
        """Project onto the +/-1 eigenspace of the signed Pauli; returns
        the Born probability."""
        mat = self.pauli_action(x_mask, z_mask, sign)
        new = 0.5 * (self.amp + outcome * mat)
        prob = float(np.sum(np.abs(new) ** 2))
        if prob < 1e-12:
            raise ValueError("projection onto zero-weight branch")
        self.amp = new / math.sqrt(prob)
        return prob

    def pauli_action(self, x_mask: int, z_mask: int, sign: int) -> np.ndarray:
        """Apply sign * prod_k W(x,z)_k to the amplitude vector, where
        W(1,1) is Hermitian Y."""
        idx = np.arange(1 << self.L)
        src = idx ^ x_mask
        zpar = np.zeros(1 << self.L, dtype=np.int64)
        for s in range(self.L):
            if (z_mask >> s) & 1:
                zpar ^= (src >> s) & 1
        n_y = bin(x_mask & z_mask).count("1")
        phase = (1j) ** n_y * (-1.0) ** zpar
        return sign * phase * self.amp[src]

    def pauli_expectation(self, x_mask: int, z_mask: int, sign: int) -> complex:
        return complex(np.vdot(self.amp, self.pauli_action(x_mask, z_mask, sign)))

    def purity(self, region) -> float:
        a, b = region
        if a == b:
            return 1.0
        high, mid, low = 1 << (self.L - b), 1 << (b - a), 1 << a
        psi = np.moveaxis(self.amp.reshape(high, mid, low), 1, 0)
        psi = psi.reshape(mid, high * low)
        rho = psi @ psi.conj().T
        return float(np.real(np.trace(rho @ rho)))

    def renyi2(self, region) -> float:
        return -math.log(self.purity(region))
