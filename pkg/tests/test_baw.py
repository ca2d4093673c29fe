import numpy as np
import pytest

from z2automaton.analysis import fit_powerlaw
from z2automaton.baw import (
    SeedSpec, UNIVERSALITY_CSV_HEADER, locate_pc, msd_exponent,
    run_universality)


class TestSeedSpec:
    def test_kinds(self):
        for kind in ("pair_adjacent", "single", "full", "random_half"):
            SeedSpec(kind)
        with pytest.raises(ValueError):
            SeedSpec("pair")


class TestUniversalityRecord:
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_absorbing_state_stays_absorbed(self):
        rec = run_universality(SeedSpec("pair_adjacent"), p=1.0, L=64,
                               t_max=60, ensemble=300, master_seed=1)
        # survival is monotone and the pair dies fast at full measurement
        assert np.all(np.diff(rec.p_survival) <= 1e-12)
        assert rec.p_survival[-1] < 0.2
        # dead samples never revive: survivor counts track survival exactly
        assert np.all(np.diff(rec.n_surviving) <= 0)

    def test_single_seed_never_dies(self):
        rec = run_universality(SeedSpec("single"), p=0.6, L=64, t_max=80,
                               ensemble=200, master_seed=2)
        assert np.all(rec.p_survival == 1.0)
        assert np.all(rec.n_mean >= 1.0)
        # particle number parity is conserved: always odd
        assert rec.n_surviving[-1] == rec.n_samples

    def test_pair_seed_parity_even(self):
        rec = run_universality(SeedSpec("pair_adjacent"), p=0.4, L=64,
                               t_max=40, ensemble=150, master_seed=3)
        assert rec.n_mean[0] == 2.0

    def test_csv_body(self):
        rec = run_universality(SeedSpec("pair_adjacent"), p=0.5, L=32,
                               t_max=10, ensemble=50, master_seed=4)
        body = rec.csv_body()
        lines = body.strip().split("\n")
        assert lines[0] == UNIVERSALITY_CSV_HEADER
        assert len(lines) == 12

    def test_edge_contact_warns_and_discards(self):
        with pytest.warns(RuntimeWarning):
            rec = run_universality(SeedSpec("pair_adjacent"), p=0.2, L=40,
                                   t_max=60, ensemble=100, master_seed=5)
        assert rec.n_discarded > 0
        assert rec.n_samples + rec.n_discarded == 100

    def test_all_discarded_raises(self):
        with pytest.raises(ValueError):
            run_universality(SeedSpec("pair_adjacent"), p=0.0, L=16,
                             t_max=60, ensemble=50, master_seed=5)

    def test_worker_invariance(self):
        a = run_universality(SeedSpec("pair_adjacent"), p=0.5, L=48,
                             t_max=30, ensemble=400, master_seed=6, workers=1)
        b = run_universality(SeedSpec("pair_adjacent"), p=0.5, L=48,
                             t_max=30, ensemble=400, master_seed=6, workers=3)
        assert np.array_equal(a.n_mean, b.n_mean)
        assert np.array_equal(a.r2_mean, b.r2_mean)


class TestSpreading:
    def test_pure_diffusion_exponent_one(self):
        # box kept far wider than the diffusive spread so the plateau at
        # L^2/12 stays out of the fit window
        rec = run_universality(SeedSpec("single"), p=0.5, L=256, t_max=300,
                               ensemble=2000, master_seed=7, no_cnn=True)
        fit = msd_exponent(rec, window=(20, 150))
        assert abs(fit.exponent - 1.0) < 0.1

    def test_branching_only_is_ballistic(self):
        # the filled light cone approaches (vt)^2/3 from below; the window
        # exponent must sit far above any diffusive value
        rec = run_universality(SeedSpec("single"), p=0.0, L=900, t_max=100,
                               ensemble=300, master_seed=8)
        fit = msd_exponent(rec, window=(30, 90), min_surviving=100)
        assert 1.7 < fit.exponent < 2.2

    def test_min_surviving_guard(self):
        rec = run_universality(SeedSpec("pair_adjacent"), p=0.9, L=64,
                               t_max=200, ensemble=200, master_seed=9)
        tab = rec.spread_series(min_surviving=100)
        assert tab.x.size < 201


class TestLocatePc:
    @pytest.mark.slow
    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_bracket_on_coarse_grid(self):
        est = locate_pc(SeedSpec("pair_adjacent"), [0.25, 0.45], L=300,
                        t_max=600, ensemble=2000, master_seed=10,
                        window=(60, 300))
        assert not est.inconclusive
        assert 0.25 < est.p_c < 0.45

    def test_inconclusive_without_sign_change(self):
        est = locate_pc(SeedSpec("pair_adjacent"), [0.6, 0.8], L=96,
                        t_max=200, ensemble=800, master_seed=11,
                        window=(20, 100))
        assert est.inconclusive
