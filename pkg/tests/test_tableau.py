import math

import numpy as np
import pytest

from z2automaton import _tabkernels as tk
from z2automaton.rng import Stream
from z2automaton.tableau import (
    GateError, GateKind, GateSpec, PauliString, Tableau, tableau_init_plus)
from statevector_ref import StateVector

LN2 = math.log(2.0)


def all_cuts(L):
    return [(a, b) for a in range(L) for b in range(a + 1, L + 1)]


def assert_matches_statevector(t: Tableau, sv: StateVector, atol=1e-9):
    # every signed stabilizer generator must have expectation exactly +1
    for i in range(t.n, 2 * t.n):
        x_mask = z_mask = 0
        for s in range(t.n):
            x_mask |= int(tk.getbit(t.x[i], s)) << s
            z_mask |= int(tk.getbit(t.z[i], s)) << s
        sign = -1 if t.r[i] else 1
        val = sv.pauli_expectation(x_mask, z_mask, sign)
        assert abs(val - 1.0) < atol
    for cut in all_cuts(t.n):
        assert abs(t.renyi2(cut) - sv.renyi2(cut)) < atol


class TestInitPlus:
    def test_small_sizes_rejected(self):
        with pytest.raises(ValueError):
            tableau_init_plus(1)

    def test_generators_are_x(self):
        t = tableau_init_plus(2)
        assert sorted(t.stabilizer_strings()) == ["+IX", "+XI"]

    def test_x_measurement_deterministic(self):
        t = tableau_init_plus(4)
        out = t.measure_pauli(PauliString.single(4, 0, "X"), Stream(1))
        assert out == +1

    def test_product_state_has_zero_entropy(self):
        t = tableau_init_plus(4)
        for cut in all_cuts(4):
            assert t.renyi2(cut) == 0.0


class TestGates:
    def test_cz_heisenberg_action(self):
        t = Tableau(2)
        tk.apply_hadamard(t.x, t.z, t.r, 0)  # |+0>, stabilizers X I and I Z
        t.apply_gate(GateSpec(GateKind.CZ, (0, 1)))
        assert sorted(t.stabilizer_strings()) == ["+IZ", "+XZ"]

    def test_cnn_permutes_basis_states(self):
        sv = StateVector(3)
        sv.amp[:] = 0
        sv.amp[0b001] = 1.0  # site 0 set -> |100> reading sites left to right
        sv.apply_cnn(0, (1, 2))
        assert abs(sv.amp[0b111] - 1.0) < 1e-12
        sv2 = StateVector(3)
        sv2.amp[:] = 0
        sv2.amp[0b010] = 1.0
        sv2.apply_cnn(0, (1, 2))  # control clear: no flip
        assert abs(sv2.amp[0b010] - 1.0) < 1e-12

    def test_phase4_equals_middle_cz_on_all_basis_states(self):
        for n in range(16):
            sv = StateVector(4)
            sv.amp[:] = 0
            sv.amp[n] = 1.0
            sv.apply_phase4((0, 1, 2, 3))
            want = -1.0 if ((n >> 1) & 1) and ((n >> 2) & 1) else 1.0
            assert abs(sv.amp[n] - want) < 1e-12
        # the four pi-phased strings of the ordered tuple all have the two
        # middle bits set
        phased = [n for n in range(16) if ((n >> 1) & 1) and ((n >> 2) & 1)]
        assert len(phased) == 4

    def test_gate_validation(self):
        t = Tableau(4)
        with pytest.raises(GateError):
            t.apply_gate(GateSpec(GateKind.CZ, (0, 0)))
        with pytest.raises(GateError):
            t.apply_gate(GateSpec(GateKind.CNN_L, (0, 1, 4)))
        with pytest.raises(GateError):
            t.apply_gate(GateSpec(GateKind.CZ, (0, 1, 2)))


class TestMeasurement:
    def test_parity_projection_makes_bell_like_state(self):
        t = tableau_init_plus(4)
        stream = Stream(3)
        out = t.measure_pauli(PauliString.z_string(4), stream, forced=+1)
        assert out == +1
        for cut in all_cuts(4):
            if 0 < cut[1] - cut[0] < 4:
                assert abs(t.renyi2(cut) - LN2) < 1e-12

    def test_repeat_measurement_is_idempotent(self):
        t = tableau_init_plus(6)
        op = PauliString.z_string(6)
        s = Stream(9)
        first = t.measure_pauli(op, s)
        for _ in range(3):
            assert t.measure_pauli(op, s) == first

    def test_random_outcomes_are_uniformish(self):
        outs = []
        for k in range(200):
            t = tableau_init_plus(2)
            outs.append(t.measure_pauli(PauliString.z_string(2), Stream(k)))
        frac = outs.count(1) / len(outs)
        assert 0.35 < frac < 0.65

    def test_forced_deterministic_conflict_raises(self):
        t = Tableau(2)  # |00>, Z parity is deterministically +1
        with pytest.raises(ValueError):
            t.measure_pauli(PauliString.z_string(2), forced=-1)

    def test_minus_sign_operator(self):
        t = Tableau(2)  # stabilized by +Z1, +Z2
        out = t.measure_pauli(PauliString(2, 0, 0b11, sign=-1), Stream(0))
        assert out == -1


class TestCompositeMeasure:
    def test_left_projection_sigma0_fixes_bell_state(self):
        # (|00>+|11>)/sqrt2 is invariant under the sigma=0 left composite
        t = tableau_init_plus(2)
        t.measure_pauli(PauliString.z_string(2), forced=+1)
        sigma = t.composite_measure((0, 1), "L", coin=0)
        assert sigma == 0
        assert sorted(t.stabilizer_strings()) == ["+XX", "+ZZ"]

    def test_left_projection_sigma1_flips_sign(self):
        t = tableau_init_plus(2)
        t.measure_pauli(PauliString.z_string(2), forced=+1)
        sigma = t.composite_measure((0, 1), "L", coin=1)
        assert sigma == 1
        # (|00>-|11>)/sqrt2: stabilizers -XX, +ZZ
        assert sorted(t.stabilizer_strings()) == ["+ZZ", "-XX"]

    def test_parity_preserved_by_composites(self):
        stream = Stream(11)
        t = tableau_init_plus(8)
        t.measure_pauli(PauliString.z_string(8), stream, forced=+1)
        for rep in range(50):
            a = stream.below(7)
            side = "L" if stream.bit() == 0 else "R"
            t.composite_measure((a, a + 1), side, stream)
        out = t.measure_pauli(PauliString.z_string(8), stream)
        assert out == +1
        assert t.is_valid()

    def test_invalid_bond_rejected(self):
        t = tableau_init_plus(4)
        with pytest.raises(GateError):
            t.composite_measure((0, 2), "L", coin=0)
        with pytest.raises(GateError):
            t.composite_measure((3, 0), "L", coin=0, pbc=False)
        t.composite_measure((3, 0), "L", coin=0, pbc=True)


def random_coevolution(L, seed, n_ops=120, measure_frac=0.25):
    """Drive a Tableau and the reference statevector through the same
    random sequence of gates and measurements."""
    stream = Stream(seed)
    t = Tableau.all_plus(L)
    sv = StateVector.all_plus(L)
    for _ in range(n_ops):
        u = stream.u01()
        if u < measure_frac:
            site = stream.below(L)
            sigma = t.measure_z_site(site, stream.bit())
            prob = sv.project_z(site, sigma)
            assert prob > 0.49
        else:
            choice = stream.below(5)
            if choice == 0:
                a = stream.below(L - 1)
                t.apply_gate(GateSpec(GateKind.CZ, (a, a + 1)))
                sv.apply_cz(a, a + 1)
            elif choice == 1 and L >= 3:
                a = stream.below(L - 2)
                kind = GateKind.CNN_L if stream.bit() == 0 else GateKind.CNN_R
                t.apply_gate(GateSpec(kind, (a, a + 1, a + 2)))
                control = a if kind is GateKind.CNN_L else a + 2
                targets = (a + 1, a + 2) if kind is GateKind.CNN_L else (a, a + 1)
                sv.apply_cnn(control, targets)
            elif choice == 2:
                a = stream.below(L - 1)
                t.apply_gate(GateSpec(GateKind.ROT, (a, a + 1)))
                sv.apply_rot(a, a + 1)
            elif choice == 3:
                a = stream.below(L)
                tk.apply_hadamard(t.x, t.z, t.r, a)
                h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
                sv.apply_matrix(h, (a,))
            elif choice == 1:
                pass  # no room for a three-site gate
            else:
                a = stream.below(L)
                kind = "XZY"[stream.below(3)]
                t.apply_pauli_frame(a, kind)
                x_mask = (1 << a) if kind in ("X", "Y") else 0
                z_mask = (1 << a) if kind in ("Z", "Y") else 0
                sv.amp = sv.pauli_action(x_mask, z_mask, 1)
    return t, sv


@pytest.mark.parametrize("L,seed", [(2, 0), (3, 1), (4, 2), (5, 3), (6, 4)])
def test_random_circuits_match_statevector(L, seed):
    t, sv = random_coevolution(L, seed)
    assert t.is_valid()
    assert_matches_statevector(t, sv)


def test_many_small_random_circuits():
    for seed in range(5, 45):
        L = 2 + seed % 4
        t, sv = random_coevolution(L, seed, n_ops=40)
        assert_matches_statevector(t, sv)


def test_entropy_bounds_and_empty_region():
    t, _ = random_coevolution(5, 99)
    assert t.renyi2((2, 2)) == 0.0
    for cut in all_cuts(5):
        s = t.renyi2(cut)
        assert -1e-12 <= s <= (cut[1] - cut[0]) * LN2 + 1e-12
