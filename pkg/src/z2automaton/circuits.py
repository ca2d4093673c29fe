"""Hybrid-circuit schedules and ensemble experiment drivers.

A time step of the full circuit interleaves three random CNOTNOT layers
(randomly placed three-site gates at a calibrated density), two brickwork
CZ layers and three measured layers in the fixed order CNN M CZ CNN M CZ
CNN M (a cz_early flag swaps each CZ before its measured layer; the
no_cnn variant drops the CNN layers, purification keeps only CNN and
measured layers and acts on half of a doubled register).

``draw_step`` produces the per-step random choices in exactly the order
the numba trajectory kernels consume their stream, so a Python-level run
and a kernel run with the same seed are bit-identical; this is what the
oracle co-simulation and the determinism tests lean on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import _circkernels as ck
from ._tabkernels import CNN_SECOND_TILING_PROB
from .oracle import PhaseVector
from .parallel import pmap
from .rng import Stream, derive_seed
from .series import SeriesTable, mean_stderr
from .tableau import ROT_NEWBITS, ROT_SIGN, GateKind, GateSpec, PauliString, Tableau

LN2 = math.log(2.0)

VARIANTS = ("full", "no_cnn", "purification")
BOUNDARIES = ("periodic", "open")

# transition points quoted for the two model families (finite-size drift
# makes the particle-model value slightly lower)
P_C_CIRCUIT = 0.34
P_C_PARTICLE = 0.335


@dataclass(frozen=True)
class CircuitConfig:
    L: int
    p: float
    boundary: str = "periodic"
    variant: str = "full"
    t_max: int = 100
    ensemble: int = 100
    master_seed: int = 0
    cz_early: bool = False

    def __post_init__(self):
        if self.L < 4 or self.L % 2:
            raise ValueError("L must be even and at least 4")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.t_max < 1 or self.ensemble < 1:
            raise ValueError("t_max and ensemble must be positive")

    @property
    def pbc(self) -> bool:
        return self.boundary == "periodic"

    @property
    def n_qubits(self) -> int:
        return 2 * self.L if self.variant == "purification" else self.L

    def metadata(self) -> dict:
        from . import __version__
        cfg = asdict(self)
        key = derive_seed(0xC0FFEE, repr(sorted(cfg.items())))
        return {"config": cfg, "provenance": f"z2automaton-{__version__}+cfg.{key:016x}"}


def default_t_max(config: CircuitConfig) -> int:
    """Steady-state horizon: past the slowest relaxation (z <= 2) when the
    chain is measurement-dominated, a few sweeps otherwise."""
    if config.p >= P_C_CIRCUIT:
        return 2 * config.L * config.L
    return 4 * config.L


# --------------------------------------------------------------------------
# schedule
# --------------------------------------------------------------------------

def layer_sequence(variant: str, cz_early: bool) -> tuple[str, ...]:
    if variant == "no_cnn":
        return ("m", "cz0", "m", "cz1", "m")
    if variant == "purification":
        return ("cnn", "m", "cnn", "m", "cnn", "m")
    if cz_early:
        return ("cnn", "cz0", "m", "cnn", "cz1", "m", "cnn", "m")
    return ("cnn", "m", "cz0", "cnn", "m", "cz1", "cnn", "m")


def cz_bonds(L: int, which: int, pbc: bool) -> list[tuple[int, int]]:
    bonds = []
    for i in range(L // 2):
        a = 2 * i + which
        b = a + 1
        if b == L:
            if not pbc:
                continue
            b = 0
        bonds.append((a, b))
    return bonds


def draw_step(L: int, p: float, pbc: bool, variant: str, cz_early: bool,
              stream: Stream) -> list[tuple]:
    """The random content of one time step, in kernel draw order."""
    layers = []

    def draw_tiling(blocks):
        off = stream.below(3)
        for k in range(L // 3):
            s = off + 3 * k
            if not pbc and s + 2 >= L:
                break
            kind = stream.bit()
            blocks.append((s % L, (s + 1) % L, (s + 2) % L, kind))

    for name in layer_sequence(variant, cz_early):
        if name == "cnn":
            blocks: list[tuple[int, int, int, int]] = []
            draw_tiling(blocks)
            if stream.u01() < CNN_SECOND_TILING_PROB:
                draw_tiling(blocks)
            layers.append(("cnn", blocks))
        elif name in ("cz0", "cz1"):
            layers.append((name, cz_bonds(L, int(name[-1]), pbc)))
        else:
            events = []
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
                        coin = stream.bit()
                        events.append((a, b, side, coin))
            layers.append(("m", events))
    return layers


def apply_step_tableau(t: Tableau, layers, pbc: bool,
                       chain_len: int | None = None) -> None:
    for name, content in layers:
        if name == "cnn":
            for s0, s1, s2, kind in content:
                g = GateKind.CNN_L if kind == 0 else GateKind.CNN_R
                t.apply_gate(GateSpec(g, (s0, s1, s2)))
        elif name in ("cz0", "cz1"):
            for a, b in content:
                t.apply_gate(GateSpec(GateKind.CZ, (a, b)))
        else:
            for a, b, side, coin in content:
                t.composite_measure((a, b), side, coin=coin, pbc=pbc,
                                    chain_len=chain_len)


def apply_step_oracle(pv: PhaseVector, layers, pbc: bool) -> None:
    for name, content in layers:
        if name == "cnn":
            for s0, s1, s2, kind in content:
                g = GateKind.CNN_L if kind == 0 else GateKind.CNN_R
                pv.apply_gate(GateSpec(g, (s0, s1, s2)))
        elif name in ("cz0", "cz1"):
            for a, b in content:
                pv.apply_gate(GateSpec(GateKind.CZ, (a, b)))
        else:
            for a, b, side, coin in content:
                pv.composite_measure((a, b), side, coin=coin, pbc=pbc)


def run_step(state: Tableau, config: CircuitConfig, stream: Stream) -> Tableau:
    """Advance the state by one full time step in place."""
    layers = draw_step(config.L, config.p, config.pbc, config.variant,
                       config.cz_early, stream)
    chain = config.L if config.variant == "purification" else None
    apply_step_tableau(state, layers, config.pbc, chain_len=chain)
    return state


def prepare_initial(config: CircuitConfig) -> Tableau:
    """Parity-projected all-plus chain; purification variant doubles the
    register and entangles the halves with one layer of four-site phase
    gates so that S_A = (L/2) ln 2."""
    L = config.L
    if config.variant == "purification":
        t = Tableau.all_plus(2 * L)
        t.measure_pauli(PauliString.z_string(2 * L, range(0, L)), forced=+1)
        t.measure_pauli(PauliString.z_string(2 * L, range(L, 2 * L)), forced=+1)
        for i in range(L // 2):
            t.apply_gate(GateSpec(
                GateKind.PHASE4, (2 * i, 2 * i + 1, L + 2 * i, L + 2 * i + 1)))
        return t
    t = Tableau.all_plus(L)
    t.measure_pauli(PauliString.z_string(L), forced=+1)
    return t


# --------------------------------------------------------------------------
# ensemble drivers
# --------------------------------------------------------------------------

def _chain_flags(config: CircuitConfig) -> tuple[bool, bool]:
    if config.variant == "purification":
        raise ValueError("chain driver called with purification variant")
    return config.variant == "no_cnn", config.cz_early


def _chain_traj(args):
    (seed, L, p, pbc, no_cnn, cz_early, t_max, sa, sb, record_ts,
     cuts_a, cuts_b, w_start, w_stride) = args
    return ck.chain_trajectory(
        np.uint64(seed), L, p, pbc, no_cnn, cz_early, t_max, sa, sb,
        record_ts, cuts_a, cuts_b, w_start, w_stride, ROT_NEWBITS, ROT_SIGN)


def run_entanglement(config: CircuitConfig, cut: int, workers: int = 1,
                     record_ts: np.ndarray | None = None,
                     key: str = "entanglement") -> SeriesTable:
    """Ensemble-averaged entropy of the leading cut of length `cut` vs t."""
    if not 0 < cut < config.L:
        raise ValueError("cut must be interior")
    no_cnn, cz_early = _chain_flags(config)
    if record_ts is None:
        record_ts = np.arange(1, config.t_max + 1, dtype=np.int64)
    record_ts = np.asarray(record_ts, dtype=np.int64)
    empty = np.empty(0, dtype=np.int64)
    jobs = [(derive_seed(config.master_seed, key, i), config.L, config.p,
             config.pbc, no_cnn, cz_early, config.t_max, 0, cut, record_ts,
             empty, empty, config.t_max + 1, 1)
            for i in range(config.ensemble)]
    rows = [res[0] for res in pmap(_chain_traj, jobs, workers)]
    mean, err = mean_stderr(np.stack(rows))
    meta = config.metadata()
    meta["cut"] = cut
    meta["experiment_key"] = key
    return SeriesTable("time", record_ts.astype(float), mean, err,
                       np.full(record_ts.size, config.ensemble), meta)


def run_steady_state(config: CircuitConfig, la_values, workers: int = 1,
                     window_frac: float = 0.25, window_stride: int = 5,
                     key: str = "steady_state") -> SeriesTable:
    """Late-window steady-state entropy against the chord length
    (L/pi) sin(pi L_A / L); regions all start at site 0."""
    la_values = sorted(set(int(v) for v in la_values))
    if any(not 0 < v < config.L for v in la_values):
        raise ValueError("subsystem sizes must be interior")
    if len({min(v, config.L - v) for v in la_values}) != len(la_values):
        raise ValueError("subsystem sizes map to duplicate chord lengths")
    no_cnn, cz_early = _chain_flags(config)
    cuts_a = np.zeros(len(la_values), dtype=np.int64)
    cuts_b = np.array(la_values, dtype=np.int64)
    w_start = max(1, int(round(config.t_max * (1.0 - window_frac))))
    empty_ts = np.empty(0, dtype=np.int64)
    jobs = [(derive_seed(config.master_seed, key, i), config.L, config.p,
             config.pbc, no_cnn, cz_early, config.t_max, 0, 1, empty_ts,
             cuts_a, cuts_b, w_start, window_stride)
            for i in range(config.ensemble)]
    per_traj = []
    for _, sums, nwin in pmap(_chain_traj, jobs, workers):
        per_traj.append(sums / nwin)
    mean, err = mean_stderr(np.stack(per_traj))
    x = np.array([chord_length(config.L, v) for v in la_values])
    order = np.argsort(x)
    meta = config.metadata()
    meta["la_values"] = la_values
    meta["window"] = [w_start, config.t_max, window_stride]
    meta["experiment_key"] = key
    return SeriesTable("chord_length", x[order], mean[order], err[order],
                       np.full(len(la_values), config.ensemble), meta)


def _purify_traj(args):
    seed, L, p, pbc, t_max, record_ts = args
    return ck.purify_trajectory(np.uint64(seed), L, p, pbc, t_max,
                                record_ts, ROT_NEWBITS, ROT_SIGN)


def log_spaced_times(t_max: int, dense_until: int = 32, n_log: int = 90) -> np.ndarray:
    ts = set(range(1, min(dense_until, t_max) + 1))
    if t_max > dense_until:
        for v in np.geomspace(dense_until, t_max, n_log):
            ts.add(int(round(v)))
    return np.array(sorted(ts), dtype=np.int64)


def run_purification(config: CircuitConfig, workers: int = 1,
                     record_ts: np.ndarray | None = None,
                     key: str = "purification") -> SeriesTable:
    """Entropy of system A under the purification schedule."""
    if config.variant != "purification":
        raise ValueError("config.variant must be 'purification'")
    if record_ts is None:
        record_ts = log_spaced_times(config.t_max)
    record_ts = np.asarray(record_ts, dtype=np.int64)
    jobs = [(derive_seed(config.master_seed, key, i), config.L, config.p,
             config.pbc, config.t_max, record_ts)
            for i in range(config.ensemble)]
    rows = list(pmap(_purify_traj, jobs, workers))
    mean, err = mean_stderr(np.stack(rows))
    meta = config.metadata()
    meta["experiment_key"] = key
    return SeriesTable("time", record_ts.astype(float), mean, err,
                       np.full(record_ts.size, config.ensemble), meta)


def chord_length(L: int, La: int | float) -> float:
    if not 0 < La < L:
        raise ValueError("subsystem length must be interior")
    return (L / math.pi) * math.sin(math.pi * La / L)


# --------------------------------------------------------------------------
# oracle co-simulation (exactness checks)
# --------------------------------------------------------------------------

def cosim_max_entropy_gap(L: int, p: float, t_max: int, seed: int,
                          pbc: bool = True, variant: str = "full") -> float:
    """Run one co-seeded trajectory on the tableau and the dense oracle;
    return the largest |S_tableau - S_oracle| over all contiguous cuts and
    all recorded times."""
    stream = Stream(seed)
    t = Tableau.all_plus(L)
    t.measure_pauli(PauliString.z_string(L), forced=+1)
    pv = PhaseVector(L)
    cuts = [(a, b) for a in range(L) for b in range(a + 1, L + 1)]
    gap = 0.0
    for _ in range(t_max):
        layers = draw_step(L, p, pbc, variant, False, stream)
        apply_step_tableau(t, layers, pbc)
        apply_step_oracle(pv, layers, pbc)
        for cut in cuts:
            gap = max(gap, abs(t.renyi2(cut) - pv.renyi2(cut)))
    return gap
