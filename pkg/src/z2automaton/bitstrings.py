"""Classical bit-string pair dynamics: the difference field as particles.

The sitewise difference of a string pair evolves linearly under the
circuit: a branching layer block flips both target differences when the
control difference is set, and a measured bond forces the projected
site's difference to zero while its partner absorbs the XOR (pair
annihilation and hopping).  Phase gates never move particles.  On top of
this the module builds the two Monte Carlo estimators used for the
entanglement scaling: the single-species boundary-avoiding fraction and
the two-species meeting survival.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from . import _bawkernels as bk
from ._tabkernels import CNN_SECOND_TILING_PROB
from .parallel import pmap
from .rng import Stream, derive_seed
from .series import SeriesTable

CHUNK = 4096  # fixed accumulation chunk: results never depend on workers


@dataclass(frozen=True)
class LatticeConfig:
    L: int
    p: float
    t_max: int
    ensemble: int
    master_seed: int = 0
    no_cnn: bool = False

    def __post_init__(self):
        if self.L < 4 or self.L % 2:
            raise ValueError("L must be even and at least 4")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.t_max < 1 or self.ensemble < 1:
            raise ValueError("t_max and ensemble must be positive")

    def metadata(self) -> dict:
        from . import __version__
        cfg = asdict(self)
        key = derive_seed(0xBA11AD, repr(sorted(cfg.items())))
        return {"config": cfg, "provenance": f"z2automaton-{__version__}+cfg.{key:016x}"}


@dataclass
class BitPair:
    """A string pair with its running swap phase (quarter turns)."""

    n1: np.ndarray
    n2: np.ndarray
    relative_phase: int = 0
    alive: bool = True

    def __post_init__(self):
        self.n1 = np.asarray(self.n1, dtype=np.uint8)
        self.n2 = np.asarray(self.n2, dtype=np.uint8)
        if self.n1.shape != self.n2.shape:
            raise ValueError("string length mismatch")
        if int(self.n1.sum()) % 2 or int(self.n2.sum()) % 2:
            raise ValueError("strings must have even parity")


def h_field(pair: BitPair) -> np.ndarray:
    """Sitewise difference of the pair; its set sites are the particles."""
    return pair.n1 ^ pair.n2


@dataclass
class ParticleLattice:
    length: int
    occupancy: np.ndarray
    species: np.ndarray | None = None  # 0 none, 1 X, 2 Y, 3 both
    boundary: str = "open"

    def __post_init__(self):
        self.occupancy = np.asarray(self.occupancy, dtype=np.uint8)
        if self.occupancy.shape != (self.length,):
            raise ValueError("occupancy length mismatch")
        if self.boundary not in ("open", "periodic"):
            raise ValueError("boundary must be open or periodic")

    @classmethod
    def random_region(cls, L: int, region: tuple[int, int], stream: Stream,
                      boundary: str = "open") -> "ParticleLattice":
        occ = np.zeros(L, dtype=np.uint8)
        for i in range(*region):
            occ[i] = stream.bit()
        return cls(L, occ, boundary=boundary)

    @property
    def n_particles(self) -> int:
        return int(self.occupancy.sum())


# -- single-field dynamics (the Python mirror of the kernels) --------------

def cnn_block_update(h: np.ndarray, control: int, t1: int, t2: int) -> None:
    """Control-conditioned double flip on the difference field."""
    if h[control]:
        h[t1] ^= 1
        h[t2] ^= 1


def measured_bond_update(h: np.ndarray, a: int, b: int, side: str) -> None:
    """Projective bond update: the projected site empties, its partner
    takes the XOR (annihilation for a full bond, a hop for a single)."""
    if side == "L":
        h[b] ^= h[a]
        h[a] = 0
    else:
        h[a] ^= h[b]
        h[b] = 0


def _branch_tiling(h: np.ndarray, pbc: bool, stream: Stream) -> None:
    L = h.size
    off = stream.below(3)
    for k in range(L // 3):
        s = off + 3 * k
        if not pbc and s + 2 >= L:
            break
        kind = stream.bit()
        s0, s1, s2 = s % L, (s + 1) % L, (s + 2) % L
        if kind == 0:
            cnn_block_update(h, s0, s1, s2)
        else:
            cnn_block_update(h, s2, s0, s1)


def branch_layer(h: np.ndarray, pbc: bool, stream: Stream) -> None:
    _branch_tiling(h, pbc, stream)
    if stream.u01() < CNN_SECOND_TILING_PROB:
        _branch_tiling(h, pbc, stream)


def measured_layer(h: np.ndarray, p: float, pbc: bool, stream: Stream) -> None:
    L = h.size
    for rowoff in (0, 1):
        for i in range(L // 2):
            a = 2 * i + rowoff
            b = a + 1
            if b == L:
                if not pbc:
                    continue
                b = 0
            if stream.u01() < p:
                side = "L" if stream.bit() == 0 else "R"
                measured_bond_update(h, a, b, side)


def lattice_step(lat: ParticleLattice, p: float, stream: Stream,
                 no_cnn: bool = False) -> ParticleLattice:
    """One full time step on the difference field (in place): three
    branching and three measured layers mirroring the circuit schedule;
    phase-gate layers move nothing and are omitted here."""
    pbc = lat.boundary == "periodic"
    for _ in range(3):
        if not no_cnn:
            branch_layer(lat.occupancy, pbc, stream)
        measured_layer(lat.occupancy, p, pbc, stream)
    return lat


# -- ensemble estimators ----------------------------------------------------

def _seed_chunks(master_seed: int, key: str, n: int):
    for lo in range(0, n, CHUNK):
        hi = min(lo + CHUNK, n)
        yield np.array([derive_seed(master_seed, key, i) for i in range(lo, hi)],
                       dtype=np.uint64)


def _survival_table(event_times: np.ndarray, t_max: int, meta: dict,
                    floor_count: int = 10) -> SeriesTable:
    """P(t) = fraction of samples whose event happened after t (or never);
    truncated once fewer than floor_count survivors remain."""
    n = event_times.size
    died = event_times[event_times >= 0]
    deaths_at = np.bincount(died, minlength=t_max + 2)[: t_max + 1]
    survivors = n - np.cumsum(deaths_at)
    ts = np.arange(t_max + 1, dtype=float)
    pvals = survivors / n
    stderr = np.sqrt(np.maximum(pvals * (1 - pvals), 0.0) / n)
    keep = survivors >= floor_count
    truncated = not bool(keep.all())
    if truncated:
        stop = int(np.argmin(keep))
        ts, pvals, stderr = ts[:stop], pvals[:stop], stderr[:stop]
    meta = dict(meta)
    meta["truncated"] = truncated
    return SeriesTable("time", ts, pvals, stderr,
                       np.full(ts.size, n, dtype=np.int64), meta)


def _boundary_chunk(args):
    seeds, L, la, p, t_max, no_cnn = args
    return bk.pair_boundary_ensemble(seeds, L, la, p, t_max, no_cnn, 1, 2)


def evolve_pair_q(config: LatticeConfig, la: int, workers: int = 1,
                  phase_tracking: bool = False,
                  key: str = "pair_q") -> SeriesTable:
    """Boundary-avoiding fraction Q(t) for difference particles seeded in
    [0, la) on an open chain; with phase_tracking the estimator is the
    averaged swap-phase sign of an explicit string pair instead."""
    if not 0 < la < config.L:
        raise ValueError("cut must be interior")
    meta = config.metadata()
    meta.update({"la": la, "estimator": "phase" if phase_tracking else "boundary",
                 "experiment_key": key})
    if phase_tracking:
        sums = np.zeros(config.t_max + 1, dtype=np.float64)
        count = 0
        jobs = [(seeds, config.L, la, config.p, config.t_max, config.no_cnn)
                for seeds in _seed_chunks(config.master_seed, key, config.ensemble)]
        for part in pmap(_phase_chunk, jobs, workers):
            sums += part[0]
            count += part[1]
        q = sums / count
        stderr = np.sqrt(np.maximum(1.0 - q**2, 0.0) / count)
        ts = np.arange(config.t_max + 1, dtype=float)
        return SeriesTable("time", ts, q, stderr,
                           np.full(ts.size, count, dtype=np.int64), meta)
    jobs = [(seeds, config.L, la, config.p, config.t_max, config.no_cnn)
            for seeds in _seed_chunks(config.master_seed, key, config.ensemble)]
    death = np.concatenate(pmap(_boundary_chunk, jobs, workers))
    return _survival_table(death, config.t_max, meta)


def _phase_chunk(args):
    seeds, L, la, p, t_max, no_cnn = args
    sums = np.zeros(t_max + 1, dtype=np.float64)
    n = bk.pair_phase_ensemble(seeds, L, la, p, t_max, no_cnn, sums)
    return sums, n


def _two_species_chunk(args):
    seeds, L, la, p, t_max, no_cnn, strict = args
    return bk.two_species_ensemble(seeds, L, la, p, t_max, no_cnn, strict)


def _meet_times(config: LatticeConfig, la: int, workers: int, strict: bool,
                key: str) -> np.ndarray:
    if not 0 < la < config.L:
        raise ValueError("cut must be interior")
    jobs = [(seeds, config.L, la, config.p, config.t_max, config.no_cnn, strict)
            for seeds in _seed_chunks(config.master_seed, key, config.ensemble)]
    return np.concatenate(pmap(_two_species_chunk, jobs, workers))


def two_species_survival(config: LatticeConfig, la: int, workers: int = 1,
                         strict: bool = False,
                         key: str = "two_species") -> SeriesTable:
    """Fraction of samples in which the two species have not met by t."""
    meet = _meet_times(config, la, workers, strict, key)
    meta = config.metadata()
    meta.update({"la": la, "strict": strict, "experiment_key": key})
    return _survival_table(meet, config.t_max, meta)


def _parity_chunk(args):
    seeds, L, la, p, t_max, no_cnn = args
    sums = np.zeros(t_max + 1, dtype=np.float64)
    n = bk.two_species_parity_ensemble(seeds, L, la, p, t_max, no_cnn, sums)
    return sums, n


def two_species_parity(config: LatticeConfig, la: int, workers: int = 1,
                       key: str = "two_species_parity") -> SeriesTable:
    """Exact averaged swap-phase sign of the species pair: like the
    survival fraction, but configurations whose phase flips back and
    forth keep their sign instead of being retired."""
    if not 0 < la < config.L:
        raise ValueError("cut must be interior")
    sums = np.zeros(config.t_max + 1, dtype=np.float64)
    count = 0
    jobs = [(seeds, config.L, la, config.p, config.t_max, config.no_cnn)
            for seeds in _seed_chunks(config.master_seed, key, config.ensemble)]
    for part in pmap(_parity_chunk, jobs, workers):
        sums += part[0]
        count += part[1]
    q = sums / count
    stderr = np.sqrt(np.maximum(1.0 - q**2, 0.0) / count)
    ts = np.arange(config.t_max + 1, dtype=float)
    meta = config.metadata()
    meta.update({"la": la, "estimator": "parity", "experiment_key": key})
    return SeriesTable("time", ts, q, stderr,
                       np.full(ts.size, count, dtype=np.int64), meta)


def two_species_steady(config: LatticeConfig, la_values, workers: int = 1,
                       strict: bool = False,
                       key: str = "two_species_steady") -> SeriesTable:
    """Saturated -ln P against the chord length of each cut (t_max must
    sit past the relaxation of the largest cut)."""
    from .circuits import chord_length
    la_values = sorted(set(int(v) for v in la_values))
    if len({min(v, config.L - v) for v in la_values}) != len(la_values):
        raise ValueError("cuts map to duplicate chord lengths")
    xs, means, errs = [], [], []
    for la in la_values:
        meet = _meet_times(config, la, workers, strict, key=f"{key}:{la}")
        n = meet.size
        alive = int((meet < 0).sum())
        if alive < 10:
            raise ValueError(f"statistical floor at la={la}: "
                             f"{alive} survivors; raise the ensemble")
        p_inf = alive / n
        xs.append(chord_length(config.L, la))
        means.append(-math.log(p_inf))
        errs.append(math.sqrt(p_inf * (1 - p_inf) / n) / p_inf)
    order = np.argsort(xs)
    meta = config.metadata()
    meta.update({"la_values": la_values, "strict": strict,
                 "experiment_key": key})
    return SeriesTable("chord_length", np.array(xs)[order],
                       np.array(means)[order], np.array(errs)[order],
                       np.full(len(xs), config.ensemble, dtype=np.int64), meta)
