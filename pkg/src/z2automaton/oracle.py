"""Exact small-L simulator of parity-sector automaton states.

A state is an equal-weight superposition over the 2^(L-1) even-parity
bit strings; the only dynamical data is one quarter-turn phase per
string.  Gates permute strings and add phases, the composite measurement
relabels strings through the parity-preserving forcing map, and both
leave the equal-weight structure intact (this is asserted, not assumed,
by the statevector cross-checks in the tests).

This module is correctness ballast for the tableau engine: purities are
computed exactly, both by partial trace and by the swap-operator pair
sum, and a tracker accumulates the phase generated inside a marked
region for persistence estimates.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .rng import Stream
from .tableau import GateKind, GateSpec

MAX_DENSE_L = 14


class PhaseVector:
    """Phases of an equal-weight even-parity superposition."""

    def __init__(self, L: int):
        if not 2 <= L <= MAX_DENSE_L:
            raise ValueError(f"L must be in [2, {MAX_DENSE_L}]")
        self.L = L
        self.parity = "even"
        full = np.arange(1 << L, dtype=np.uint32)
        par = np.zeros(1 << L, dtype=np.uint8)
        for s in range(L):
            par ^= ((full >> s) & 1).astype(np.uint8)
        self.strings = full[par == 0]
        self.index = np.full(1 << L, -1, dtype=np.int32)
        self.index[self.strings] = np.arange(self.strings.size, dtype=np.int32)
        self.phases = np.zeros(self.strings.size, dtype=np.uint8)

    @property
    def n_strings(self) -> int:
        return self.phases.size

    def copy(self) -> "PhaseVector":
        out = PhaseVector.__new__(PhaseVector)
        out.L, out.parity = self.L, self.parity
        out.strings, out.index = self.strings, self.index
        out.phases = self.phases.copy()
        return out

    def set_random_phases(self, stream: Stream, quarter_values=(0, 2)) -> None:
        """Draw each string's phase independently from quarter_values."""
        vals = np.asarray(quarter_values, dtype=np.uint8)
        picks = np.array([stream.below(vals.size) for _ in range(self.n_strings)])
        self.phases = vals[picks]

    # -- bit helpers -----------------------------------------------------

    def _bit(self, site: int) -> np.ndarray:
        return ((self.strings >> np.uint32(site)) & 1).astype(np.uint8)

    # -- dynamics --------------------------------------------------------

    def apply_gate(self, gate: GateSpec) -> None:
        gate.validate(self.L)
        s = gate.sites
        if gate.kind in (GateKind.CNN_L, GateKind.CNN_R):
            control = s[0] if gate.kind is GateKind.CNN_L else s[2]
            targets = (s[1], s[2]) if gate.kind is GateKind.CNN_L else (s[0], s[1])
            self._apply_cnn(control, targets)
        elif gate.kind is GateKind.CZ:
            self.phases += 2 * (self._bit(s[0]) & self._bit(s[1]))
            self.phases &= 3
        elif gate.kind is GateKind.PHASE4:
            self.phases += 2 * (self._bit(s[1]) & self._bit(s[2]))
            self.phases &= 3
        elif gate.kind is GateKind.ROT:
            raise ValueError("bare rotation leaves the equal-weight form; "
                             "use composite_measure")
        else:  # pragma: no cover
            raise ValueError(f"unknown gate {gate.kind}")

    def _apply_cnn(self, control: int, targets: tuple[int, int]) -> None:
        flip = np.uint32((1 << targets[0]) | (1 << targets[1]))
        m = (self.strings >> np.uint32(control)) & 1
        permuted = self.strings ^ (m.astype(np.uint32) * flip)
        # involution: new phase of n is the old phase of its image
        self.phases = self.phases[self.index[permuted]]

    def _tmap(self, proj_site: int, partner: int, sigma: int) -> np.ndarray:
        """Sector indices of T(n): proj_site forced to sigma, partner
        adjusted to preserve each string's parity."""
        bs = self._bit(proj_site).astype(np.uint32)
        bq = self._bit(partner).astype(np.uint32)
        out = self.strings
        out = out ^ ((bs ^ np.uint32(sigma)) << np.uint32(proj_site))
        new_q = bs ^ bq ^ np.uint32(sigma)
        out = out ^ ((bq ^ new_q) << np.uint32(partner))
        return self.index[out]

    def composite_measure(self, bond: tuple[int, int], side: str,
                          rng: Stream | None = None, coin: int | None = None,
                          pbc: bool = False) -> int:
        """Z projection on the chosen side then the bond rotation, realized
        as the phase relabeling map.  Returns sigma."""
        a, b = bond
        ok = (b == a + 1) or (pbc and a == self.L - 1 and b == 0)
        if not ok:
            raise ValueError(f"bond {bond} is not adjacent (pbc={pbc})")
        if coin is None:
            if rng is None:
                raise ValueError("need rng or coin")
            coin = rng.bit()
        sigma = int(coin)
        proj = a if side == "L" else b
        partner = b if side == "L" else a
        src = self._tmap(proj, partner, sigma)
        # The rotation's minus rows sit on the inputs whose left bond bit is
        # set, so a pi phase lands on the labels that are their own forcing
        # image (projected bit already sigma) and have left bit 1.
        extra = 2 * (self._bit(a) & (self._bit(proj) ^ sigma ^ 1))
        self.phases = ((self.phases[src] + extra) & 3).astype(np.uint8)
        return sigma

    # -- observables -----------------------------------------------------

    def amplitudes(self) -> np.ndarray:
        """Full 2^L statevector (zero outside the sector)."""
        amp = np.zeros(1 << self.L, dtype=np.complex128)
        amp[self.strings] = (1j ** self.phases.astype(np.int64)) / math.sqrt(self.n_strings)
        return amp

    def purity_reduced(self, region: tuple[int, int]) -> float:
        """Tr rho_A^2 by explicit partial trace over the complement."""
        a, b = self._check_region(region)
        if a == b:
            return 1.0
        amp = self.amplitudes()
        high, mid, low = 1 << (self.L - b), 1 << (b - a), 1 << a
        psi = np.moveaxis(amp.reshape(high, mid, low), 1, 0).reshape(mid, high * low)
        g = psi @ psi.conj().T
        return float(np.real(np.sum(g * g.conj())))

    def renyi2(self, region: tuple[int, int]) -> float:
        return -math.log(self.purity_reduced(region))

    def purity_swap(self, region: tuple[int, int], stream: Stream | None = None,
                    n_pairs: int | None = None) -> float:
        """Purity as the swap-operator expectation: a sum of phase factors
        over string pairs, exhaustive unless n_pairs is given."""
        a, b = self._check_region(region)
        mask_a = np.uint32(((1 << b) - 1) ^ ((1 << a) - 1))
        if n_pairs is None:
            n1 = np.repeat(self.strings, self.n_strings)
            n2 = np.tile(self.strings, self.n_strings)
            denom = float(self.n_strings) ** 2
        else:
            if stream is None:
                raise ValueError("sampled mode needs a stream")
            i1 = np.array([stream.below(self.n_strings) for _ in range(n_pairs)])
            i2 = np.array([stream.below(self.n_strings) for _ in range(n_pairs)])
            n1, n2 = self.strings[i1], self.strings[i2]
            denom = float(n_pairs)
        n1p = (n2 & mask_a) | (n1 & ~mask_a)
        n2p = (n1 & mask_a) | (n2 & ~mask_a)
        i1p = self.index[n1p]
        i2p = self.index[n2p]
        valid = i1p >= 0  # swapped strings outside the sector contribute zero
        d = (self.phases[self.index[n1]].astype(np.int64)
             + self.phases[self.index[n2]]
             - self.phases[np.where(valid, i1p, 0)]
             - self.phases[np.where(valid, i2p, 0)]) & 3
        re = np.array([1.0, 0.0, -1.0, 0.0])[d]
        return float(np.sum(re * valid) / denom)

    def _check_region(self, region: tuple[int, int]) -> tuple[int, int]:
        a, b = region
        if not (0 <= a <= b <= self.L):
            raise ValueError(f"region {region} out of range")
        return a, b

    def to_json(self) -> str:
        return json.dumps({
            "L": self.L,
            "parity": self.parity,
            "phases": {format(int(s), f"0{self.L}b")[::-1]: int(p)
                       for s, p in zip(self.strings, self.phases)},
        })


class RegionPhaseTracker:
    """Co-evolves a phase ledger counting only contributions generated
    inside the right segment [b_start, L).

    A gate straddling the cut is attributed to the region when its
    rightmost site lies inside it (flip ``attribute_leftmost`` for the
    alternate convention).  Labels are relabeled by every gate either
    way, so the ledger stays aligned with the state's basis.
    """

    def __init__(self, state: PhaseVector, b_start: int,
                 attribute_leftmost: bool = False):
        if not 0 < b_start < state.L:
            raise ValueError("cut must be interior")
        self.state = state
        self.b_start = b_start
        self.attribute_leftmost = attribute_leftmost
        self.theta_b = np.zeros(state.n_strings, dtype=np.uint8)
        mask = (1 << b_start) - 1
        diffs = [u for u in range(1 << b_start)
                 if bin(u).count("1") % 2 == 0]
        self._perms = [state.index[state.strings ^ np.uint32(u)] for u in diffs]
        del mask

    def _in_region(self, sites) -> bool:
        pivot = min(sites) if self.attribute_leftmost else max(sites)
        return pivot >= self.b_start

    def apply_gate(self, gate: GateSpec) -> None:
        s = gate.sites
        st = self.state
        if gate.kind in (GateKind.CNN_L, GateKind.CNN_R):
            control = s[0] if gate.kind is GateKind.CNN_L else s[2]
            targets = (s[1], s[2]) if gate.kind is GateKind.CNN_L else (s[0], s[1])
            flip = np.uint32((1 << targets[0]) | (1 << targets[1]))
            m = ((st.strings >> np.uint32(control)) & 1).astype(np.uint32)
            src = st.index[st.strings ^ (m * flip)]
            self.theta_b = self.theta_b[src]
            st.apply_gate(gate)
        elif gate.kind is GateKind.CZ:
            if self._in_region(s):
                self.theta_b = (self.theta_b + 2 * (st._bit(s[0]) & st._bit(s[1]))) & 3
            st.apply_gate(gate)
        else:
            raise ValueError("tracker supports CNN and CZ gates plus "
                             "composite_measure")

    def composite_measure(self, bond: tuple[int, int], side: str,
                          coin: int) -> int:
        a, b = bond
        st = self.state
        sigma = int(coin)
        proj = a if side == "L" else b
        partner = b if side == "L" else a
        src = st._tmap(proj, partner, sigma)
        theta = self.theta_b[src]
        if self._in_region(bond):
            extra = 2 * (st._bit(a) & (st._bit(proj) ^ sigma ^ 1))
            theta = (theta + extra) & 3
        self.theta_b = theta.astype(np.uint8)
        return st.composite_measure(bond, side, coin=coin)

    def q_value(self) -> float:
        """Average swap phase over pairs differing only left of the cut."""
        total = 0.0
        re_map = np.array([1.0, 0.0, -1.0, 0.0])
        for perm in self._perms:
            d = (self.theta_b.astype(np.int64) - self.theta_b[perm]) & 3
            total += float(np.mean(re_map[d]))
        return total / len(self._perms)


def dense_init(L: int) -> PhaseVector:
    return PhaseVector(L)


def expected_random_phase_purity(L: int, cut: int) -> float:
    """Ensemble-average purity of a random two-valued-phase sector state."""
    return 2.0 ** (-cut) + 2.0 ** (-(L - cut)) - 2.0 ** (1 - L)
