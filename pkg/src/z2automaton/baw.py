"""Universality experiments for the even-offspring branching-annihilating
walk that the circuit's difference field performs.

The microscopic update is the same layered dynamics as the bit-string
module (branching from the three-site blocks, annihilation/hopping from
measured bonds), not an abstract rate model; the absorbing-transition
exponents are measured from seeded, single-particle and filled initial
conditions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict, field

import numpy as np

from . import _bawkernels as bk
from .analysis import FitResult, default_powerlaw_window, fit_powerlaw
from .bitstrings import _seed_chunks
from .parallel import pmap
from .series import SeriesTable

SEED_KINDS = ("pair_adjacent", "single", "full", "random_half")
_KIND_CODE = {k: i for i, k in enumerate(SEED_KINDS)}

UNIVERSALITY_CSV_HEADER = ("t,N_mean,N_stderr,P,P_stderr,R2,R2_stderr,"
                           "n_surviving")


@dataclass(frozen=True)
class SeedSpec:
    kind: str
    position: int | None = None  # defaults to the chain center

    def __post_init__(self):
        if self.kind not in SEED_KINDS:
            raise ValueError(f"kind must be one of {SEED_KINDS}")


@dataclass
class UniversalityRecord:
    t: np.ndarray
    n_mean: np.ndarray
    n_stderr: np.ndarray
    p_survival: np.ndarray
    p_stderr: np.ndarray
    r2_mean: np.ndarray
    r2_stderr: np.ndarray
    n_surviving: np.ndarray
    n_samples: int
    n_discarded: int
    metadata: dict = field(default_factory=dict)

    def number_series(self) -> SeriesTable:
        m = self.t >= 0
        return SeriesTable("time", self.t[m].astype(float), self.n_mean[m],
                           self.n_stderr[m],
                           np.full(int(m.sum()), self.n_samples), dict(self.metadata))

    def survival_series(self) -> SeriesTable:
        return SeriesTable("time", self.t.astype(float), self.p_survival,
                           self.p_stderr, np.full(self.t.size, self.n_samples),
                           dict(self.metadata))

    def spread_series(self, min_surviving: int = 1) -> SeriesTable:
        m = self.n_surviving >= max(1, min_surviving)
        return SeriesTable("time", self.t[m].astype(float), self.r2_mean[m],
                           self.r2_stderr[m], self.n_surviving[m],
                           dict(self.metadata))

    def csv_body(self) -> str:
        lines = [UNIVERSALITY_CSV_HEADER]
        for i in range(self.t.size):
            lines.append(",".join([
                str(int(self.t[i])),
                repr(float(self.n_mean[i])), repr(float(self.n_stderr[i])),
                repr(float(self.p_survival[i])), repr(float(self.p_stderr[i])),
                repr(float(self.r2_mean[i])), repr(float(self.r2_stderr[i])),
                str(int(self.n_surviving[i])),
            ]))
        return "\n".join(lines) + "\n"


def _universality_chunk(args):
    seeds, L, p, t_max, kind_code, no_cnn = args
    t_len = t_max + 1
    sum_n = np.zeros(t_len)
    sum_n2 = np.zeros(t_len)
    surv = np.zeros(t_len, dtype=np.int64)
    sum_r2 = np.zeros(t_len)
    sum_r2sq = np.zeros(t_len)
    r2_count = np.zeros(t_len, dtype=np.int64)
    kept, discarded = bk.universality_ensemble(
        seeds, L, p, t_max, kind_code, no_cnn,
        sum_n, sum_n2, surv, sum_r2, sum_r2sq, r2_count)
    return kept, discarded, sum_n, sum_n2, surv, sum_r2, sum_r2sq, r2_count


def run_universality(seed: SeedSpec, p: float, L: int, t_max: int,
                     ensemble: int, master_seed: int = 0,
                     no_cnn: bool = False, workers: int = 1,
                     key: str = "universality") -> UniversalityRecord:
    """Evolve the layered walk from the given initial condition and record
    particle number, seed survival and spread from the chain center.

    Seeded runs are open-boundary; a sample touching either edge is
    discarded (and counted), with a warning past 1%."""
    if seed.position is not None and not 1 <= seed.position < L - 1:
        raise ValueError("seed position must be interior")
    code = _KIND_CODE[seed.kind]
    jobs = [(seeds, L, p, t_max, code, no_cnn)
            for seeds in _seed_chunks(master_seed, key, ensemble)]
    t_len = t_max + 1
    sum_n = np.zeros(t_len)
    sum_n2 = np.zeros(t_len)
    surv = np.zeros(t_len, dtype=np.int64)
    sum_r2 = np.zeros(t_len)
    sum_r2sq = np.zeros(t_len)
    r2_count = np.zeros(t_len, dtype=np.int64)
    kept = discarded = 0
    for part in pmap(_universality_chunk, jobs, workers):
        kept += part[0]
        discarded += part[1]
        sum_n += part[2]
        sum_n2 += part[3]
        surv += part[4]
        sum_r2 += part[5]
        sum_r2sq += part[6]
        r2_count += part[7]
    if kept == 0:
        raise ValueError("every sample was discarded; enlarge L")
    if discarded > 0.01 * (kept + discarded):
        warnings.warn(f"{discarded} of {kept + discarded} samples touched "
                      "the edge and were discarded; enlarge L or shorten "
                      "t_max", RuntimeWarning)
    t = np.arange(t_len)
    n_mean = sum_n / kept
    n_var = np.maximum(sum_n2 / kept - n_mean**2, 0.0)
    n_stderr = np.sqrt(n_var / kept)
    p_surv = surv / kept
    p_stderr = np.sqrt(np.maximum(p_surv * (1 - p_surv), 0.0) / kept)
    safe = np.maximum(r2_count, 1)
    r2_mean = sum_r2 / safe
    r2_var = np.maximum(sum_r2sq / safe - r2_mean**2, 0.0)
    r2_stderr = np.sqrt(r2_var / safe)
    meta = {
        "model": "layered_branching_annihilating_walk",
        "seed_kind": seed.kind, "L": L, "p": p, "t_max": t_max,
        "ensemble": ensemble, "master_seed": master_seed, "no_cnn": no_cnn,
        "n_kept": int(kept), "n_discarded": int(discarded),
        "experiment_key": key,
    }
    return UniversalityRecord(t, n_mean, n_stderr, p_surv, p_stderr,
                              r2_mean, r2_stderr, r2_count.astype(np.int64),
                              int(kept), int(discarded), meta)


@dataclass
class PcEstimate:
    p_c: float
    uncertainty: float
    slopes: dict
    inconclusive: bool


def locate_pc(seed: SeedSpec, p_grid, L: int, t_max: int, ensemble: int,
              master_seed: int = 0, workers: int = 1,
              window: tuple[float, float] | None = None) -> PcEstimate:
    """Bracket the absorbing transition as the measurement rate where the
    seeded mean particle number is flattest in log-log (its power-law
    slope changes sign)."""
    p_grid = sorted(float(p) for p in p_grid)
    if len(p_grid) < 2:
        raise ValueError("grid needs at least two rates")
    slopes: dict[float, tuple[float, float]] = {}
    for p in p_grid:
        rec = run_universality(seed, p, L, t_max, ensemble, master_seed,
                               workers=workers, key=f"locate_pc:{p:.6f}")
        tab = rec.number_series()
        win = window or default_powerlaw_window(tab)
        fit = fit_powerlaw(tab, win)
        slopes[p] = (fit.value, fit.stderr)
    ps = np.array(list(slopes))
    sl = np.array([slopes[p][0] for p in ps])
    sign_change = np.where(np.diff(np.sign(sl)) != 0)[0]
    if sign_change.size == 0:
        mid = float(ps[np.argmin(np.abs(sl))])
        return PcEstimate(mid, float(ps[-1] - ps[0]), slopes, True)
    i = int(sign_change[0])
    p0, p1 = ps[i], ps[i + 1]
    s0, s1 = sl[i], sl[i + 1]
    pc = float(p0 + (0.0 - s0) * (p1 - p0) / (s1 - s0))
    spacing = float(p1 - p0)
    serr = max(slopes[p0][1], slopes[p1][1])
    dslope = abs((s1 - s0) / (p1 - p0))
    stat = serr / dslope if dslope > 0 else spacing
    return PcEstimate(pc, 0.5 * spacing + stat, slopes, False)


def msd_exponent(record: UniversalityRecord,
                 window: tuple[float, float] | None = None,
                 min_surviving: int = 100) -> FitResult:
    """Power-law exponent of the surviving-sample spread; the dynamic
    exponent is 2 over the returned value."""
    tab = record.spread_series(min_surviving=min_surviving)
    win = window or default_powerlaw_window(tab)
    fit = fit_powerlaw(tab, win)
    if win[1] / max(win[0], 1.0) < 3.0:
        warnings.warn("fit window spans less than half a decade; "
                      "low confidence", RuntimeWarning)
    return fit
