import math

import numpy as np
import pytest

from z2automaton.oracle import (
    PhaseVector, RegionPhaseTracker, dense_init, expected_random_phase_purity)
from z2automaton.rng import Stream
from z2automaton.tableau import GateKind, GateSpec, PauliString, Tableau
from statevector_ref import StateVector

LN2 = math.log(2.0)


def make_sv_parity_plus(L):
    """Statevector for the parity-projected all-plus chain."""
    sv = StateVector.all_plus(L)
    sv.measure_pauli_forced(0, (1 << L) - 1, 1, +1)
    return sv


def random_qa_ops(L, stream, n_ops, p_measure=0.35):
    """Random schedule-free sequence of allowed ops with shared coins."""
    ops = []
    for _ in range(n_ops):
        if stream.u01() < p_measure:
            a = stream.below(L - 1)
            side = "L" if stream.bit() == 0 else "R"
            ops.append(("M", (a, a + 1), side, stream.bit()))
        else:
            which = stream.below(3)
            if which == 0:
                a = stream.below(L - 1)
                ops.append(("G", GateSpec(GateKind.CZ, (a, a + 1))))
            elif which == 1 and L >= 3:
                a = stream.below(L - 2)
                kind = GateKind.CNN_L if stream.bit() == 0 else GateKind.CNN_R
                ops.append(("G", GateSpec(kind, (a, a + 1, a + 2))))
            elif L >= 4:
                a = stream.below(L - 3)
                ops.append(("G", GateSpec(GateKind.PHASE4, (a, a + 1, a + 2, a + 3))))
    return ops


def apply_ops_pv(pv, ops):
    for op in ops:
        if op[0] == "G":
            pv.apply_gate(op[1])
        else:
            pv.composite_measure(op[1], op[2], coin=op[3])


def apply_ops_sv(sv, ops):
    for op in ops:
        if op[0] == "G":
            g = op[1]
            if g.kind is GateKind.CZ:
                sv.apply_cz(*g.sites)
            elif g.kind is GateKind.PHASE4:
                sv.apply_phase4(g.sites)
            elif g.kind is GateKind.CNN_L:
                sv.apply_cnn(g.sites[0], (g.sites[1], g.sites[2]))
            else:
                sv.apply_cnn(g.sites[2], (g.sites[0], g.sites[1]))
        else:
            prob = sv.composite_measure(op[1], op[2], op[3])
            assert abs(prob - 0.5) < 1e-9


class TestInit:
    def test_l2_phases(self):
        pv = dense_init(2)
        assert list(pv.strings) == [0b00, 0b11]
        assert list(pv.phases) == [0, 0]

    def test_l2_is_bell(self):
        pv = dense_init(2)
        assert abs(pv.purity_reduced((0, 1)) - 0.5) < 1e-12
        assert abs(pv.renyi2((0, 1)) - LN2) < 1e-12

    def test_sector_size(self):
        pv = dense_init(6)
        assert pv.n_strings == 2 ** 5

    def test_range_checks(self):
        with pytest.raises(ValueError):
            dense_init(1)
        with pytest.raises(ValueError):
            dense_init(15)


class TestCompositeExamples:
    def test_sigma0_keeps_first_phase(self):
        pv = dense_init(2)
        pv.phases[:] = [1, 3]  # e^{i pi/2}|00> + e^{i 3pi/2}|11>
        sigma = pv.composite_measure((0, 1), "L", coin=0)
        assert sigma == 0
        assert list(pv.phases) == [1, 1]  # global e^{i theta_0}, relative 0

    def test_sigma1_picks_second_phase_and_flips(self):
        pv = dense_init(2)
        pv.phases[:] = [1, 3]
        sigma = pv.composite_measure((0, 1), "L", coin=1)
        assert sigma == 1
        # e^{i theta_1} (|00> - |11>)/sqrt2
        assert list(pv.phases) == [3, (3 + 2) % 4]

    def test_cz_involution(self):
        pv = dense_init(4)
        stream = Stream(5)
        pv.set_random_phases(stream, (0, 1, 2, 3))
        before = pv.phases.copy()
        pv.apply_gate(GateSpec(GateKind.CZ, (1, 2)))
        pv.apply_gate(GateSpec(GateKind.CZ, (1, 2)))
        assert np.array_equal(pv.phases, before)

    def test_bare_rotation_rejected(self):
        pv = dense_init(4)
        with pytest.raises(ValueError):
            pv.apply_gate(GateSpec(GateKind.ROT, (0, 1)))


class TestAgainstStatevector:
    @pytest.mark.parametrize("L,seed", [(2, 0), (4, 1), (5, 2), (6, 3), (8, 4)])
    def test_amplitudes_match_up_to_global_phase(self, L, seed):
        stream = Stream(seed)
        ops = random_qa_ops(L, stream, 60)
        pv = dense_init(L)
        sv = make_sv_parity_plus(L)
        apply_ops_pv(pv, ops)
        apply_ops_sv(sv, ops)
        # equal-weight invariance of the true state
        mags = np.abs(sv.amp[pv.strings])
        assert np.allclose(mags, 1 / math.sqrt(pv.n_strings), atol=1e-9)
        assert np.allclose(np.abs(sv.amp)[pv.index < 0], 0.0, atol=1e-12)
        # full wave function agreement up to a global phase
        overlap = np.vdot(sv.amp, pv.amplitudes())
        assert abs(abs(overlap) - 1.0) < 1e-9

    @pytest.mark.parametrize("L,seed", [(4, 10), (6, 11), (8, 12)])
    def test_purities_match(self, L, seed):
        stream = Stream(seed)
        ops = random_qa_ops(L, stream, 80)
        pv = dense_init(L)
        sv = make_sv_parity_plus(L)
        apply_ops_pv(pv, ops)
        apply_ops_sv(sv, ops)
        for a in range(L):
            for b in range(a + 1, L + 1):
                assert abs(pv.purity_reduced((a, b)) - sv.purity((a, b))) < 1e-9


class TestPuritySwap:
    def test_initial_half_cut(self):
        pv = dense_init(4)
        assert abs(pv.purity_swap((0, 2)) - 0.5) < 1e-12

    def test_swap_equals_reduced_on_circuit_states(self):
        for seed in range(6):
            pv = dense_init(8)
            stream = Stream(100 + seed)
            apply_ops_pv(pv, random_qa_ops(8, stream, 60))
            for cut in [(0, 2), (0, 4), (2, 5), (3, 8)]:
                assert abs(pv.purity_swap(cut) - pv.purity_reduced(cut)) < 1e-9

    def test_swap_equals_reduced_on_random_phase_states(self):
        pv = dense_init(8)
        pv.set_random_phases(Stream(7), (0, 2))
        for cut in [(0, 1), (0, 4), (1, 6)]:
            assert abs(pv.purity_swap(cut) - pv.purity_reduced(cut)) < 1e-9

    def test_sampled_mode_close(self):
        pv = dense_init(10)
        pv.set_random_phases(Stream(8), (0, 2))
        exact = pv.purity_reduced((0, 3))
        est = pv.purity_swap((0, 3), stream=Stream(9), n_pairs=200_000)
        assert abs(est - exact) < 0.02


class TestRandomPhasePurity:
    def test_formula_small(self):
        # scaled-down version of the ensemble-average purity identity
        L, draws = 8, 150
        stream = Stream(21)
        acc = np.zeros(4)
        for _ in range(draws):
            pv = dense_init(L)
            pv.set_random_phases(stream, (0, 2))
            for i, cut in enumerate(range(1, 5)):
                acc[i] += pv.purity_reduced((0, cut))
        acc /= draws
        for i, cut in enumerate(range(1, 5)):
            want = expected_random_phase_purity(L, cut)
            assert abs(acc[i] - want) / want < 0.08

    def test_volume_law_entropy(self):
        pv = dense_init(12)
        pv.set_random_phases(Stream(31), (0, 2))
        for cut in (2, 3, 4):
            s = pv.renyi2((0, cut))
            assert abs(s - cut * LN2) < 0.35


def backward_region_phase(L, b_start, ops, labels, attribute_leftmost=False):
    """Independent scalar computation of the region-restricted phase
    accumulator: walk each bra label backward through the op list."""
    out = []
    for n0 in labels:
        n = int(n0)
        acc = 0
        for op in reversed(ops):
            if op[0] == "G":
                g = op[1]
                sites = g.sites
                pivot = min(sites) if attribute_leftmost else max(sites)
                if g.kind is GateKind.CZ:
                    if pivot >= b_start:
                        acc += 2 * (((n >> sites[0]) & 1) & ((n >> sites[1]) & 1))
                else:
                    control = sites[0] if g.kind is GateKind.CNN_L else sites[2]
                    targets = ((sites[1], sites[2]) if g.kind is GateKind.CNN_L
                               else (sites[0], sites[1]))
                    if (n >> control) & 1:
                        n ^= (1 << targets[0]) | (1 << targets[1])
            else:
                _, bond, side, sigma = op
                a, b = bond
                proj = a if side == "L" else b
                partner = b if side == "L" else a
                pivot = min(bond) if attribute_leftmost else max(bond)
                if pivot >= b_start and ((n >> proj) & 1) == sigma:
                    acc += 2 * ((n >> a) & 1)
                bp, bq = (n >> proj) & 1, (n >> partner) & 1
                nq = bp ^ bq ^ sigma
                n = (n & ~(1 << proj) & ~(1 << partner)) | (sigma << proj) | (nq << partner)
        out.append(acc % 4)
    return out


class TestRegionPhaseTracker:
    def test_q_is_one_initially(self):
        pv = dense_init(6)
        tr = RegionPhaseTracker(pv, 3)
        assert abs(tr.q_value() - 1.0) < 1e-12

    def test_cz_inside_region_alone_keeps_q_one(self):
        pv = dense_init(6)
        tr = RegionPhaseTracker(pv, 3)
        tr.apply_gate(GateSpec(GateKind.CZ, (3, 4)))
        assert abs(tr.q_value() - 1.0) < 1e-12

    @pytest.mark.parametrize("L,b_start,seed", [(4, 2, 0), (6, 3, 1), (6, 2, 2), (8, 4, 3)])
    def test_matches_backward_walk(self, L, b_start, seed):
        stream = Stream(40 + seed)
        ops = [op for op in random_qa_ops(L, stream, 50)
               if op[0] == "M" or op[1].kind is not GateKind.PHASE4]
        pv = dense_init(L)
        tr = RegionPhaseTracker(pv, b_start)
        for op in ops:
            if op[0] == "G":
                tr.apply_gate(op[1])
            else:
                tr.composite_measure(op[1], op[2], op[3])
        want = backward_region_phase(L, b_start, ops, pv.strings)
        got = [int(tr.theta_b[pv.index[n]]) for n in pv.strings]
        assert got == want

    def test_alternate_convention_differs_when_straddling(self):
        pv = dense_init(4)
        tr = RegionPhaseTracker(pv, 2)
        pv2 = dense_init(4)
        tr2 = RegionPhaseTracker(pv2, 2, attribute_leftmost=True)
        gate = GateSpec(GateKind.CZ, (1, 2))  # straddles the cut
        tr.apply_gate(gate)
        tr2.apply_gate(gate)
        assert np.any(tr.theta_b != 0)
        assert not np.any(tr2.theta_b != 0)


class TestCrossEngineEntropy:
    def test_tableau_matches_oracle_on_shared_ops(self):
        L = 6
        stream = Stream(77)
        ops = random_qa_ops(L, stream, 70)
        pv = dense_init(L)
        t = Tableau.all_plus(L)
        t.measure_pauli(PauliString.z_string(L), forced=+1)
        apply_ops_pv(pv, ops)
        for op in ops:
            if op[0] == "G":
                t.apply_gate(op[1])
            else:
                sigma = t.composite_measure(op[1], op[2], coin=op[3])
                assert sigma == op[3]
        for a in range(L):
            for b in range(a + 1, L + 1):
                assert abs(t.renyi2((a, b)) - pv.renyi2((a, b))) < 1e-9
