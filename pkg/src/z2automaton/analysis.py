"""Fitting and scaling toolkit: power-law and logarithmic fits with
bootstrap errors, dynamic-exponent collapse scans, and the closed-form
coarsening persistence exponent.

Exponent convention: fit_powerlaw returns the signed exponent a of
y ~ x^a (decays are negative); quoted decay exponents are |a|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import chord_length  # re-exported: geometry lives with the fits
from .series import SeriesTable

__all__ = [
    "FitResult", "CollapseResult", "fit_powerlaw", "fit_log",
    "collapse_scan", "chord_length", "potts_persistence_exponent",
    "boundary_persistence_exponent", "ratio_lambda", "neg_log_table",
    "default_powerlaw_window", "default_log_window",
]


@dataclass
class FitResult:
    value: float
    stderr: float
    window: tuple[float, float]
    r_squared: float
    n_bootstrap: int
    kind: str = "powerlaw"

    @property
    def exponent(self) -> float:
        return self.value


class FitError(ValueError):
    pass


def _wls_line(u: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Weighted least squares for y = a*u + b; returns (a, b, var_a, r2)."""
    sw = w.sum()
    um = (w * u).sum() / sw
    ym = (w * y).sum() / sw
    du, dy = u - um, y - ym
    suu = (w * du * du).sum()
    if suu <= 0:
        raise FitError("degenerate abscissa in fit window")
    a = (w * du * dy).sum() / suu
    b = ym - a * um
    resid = y - (a * u + b)
    ss_res = (w * resid * resid).sum()
    ss_tot = (w * dy * dy).sum()
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    var_a = 1.0 / suu
    if y.size > 2 and ss_tot > 0:
        var_a *= max(ss_res / (y.size - 2), 1.0)
    return a, b, var_a, r2


def _prepare(series: SeriesTable, window, min_points: int, positive_mean: bool):
    lo, hi = window
    m = (series.x >= lo) & (series.x <= hi) & (series.x > 0)
    if positive_mean:
        m &= series.mean > 0
    x, y, s, n = series.x[m], series.mean[m], series.stderr[m], series.n[m]
    if x.size < min_points:
        raise FitError(f"only {x.size} usable points in window {window}")
    return x, y, s, n


def _bootstrap_slopes(u, y, sy, w, n_bootstrap, seed):
    rng = np.random.default_rng(seed)
    slopes = np.empty(n_bootstrap)
    for k in range(n_bootstrap):
        yk = y + rng.standard_normal(y.size) * sy
        sw = w.sum()
        um = (w * u).sum() / sw
        ym = (w * yk).sum() / sw
        du = u - um
        slopes[k] = (w * du * (yk - ym)).sum() / (w * du * du).sum()
    return float(np.std(slopes, ddof=1))


def fit_powerlaw(series: SeriesTable, window: tuple[float, float],
                 n_bootstrap: int = 200, seed: int = 1234) -> FitResult:
    """Weighted fit of ln(mean) against ln(x); nonpositive means are
    dropped (shrinking the window) before fitting."""
    x, y, s, _ = _prepare(series, window, 8, positive_mean=True)
    u = np.log(x)
    v = np.log(y)
    sv = np.where(y > 0, s / y, 0.0)
    w = np.where(sv > 0, 1.0 / sv**2, np.nan)
    w = np.where(np.isnan(w), np.nanmax(w) if np.any(np.isfinite(w)) else 1.0, w)
    if not np.any(np.isfinite(w)):
        w = np.ones_like(u)
    a, _, var_a, r2 = _wls_line(u, v, w)
    err = math.sqrt(var_a)
    if n_bootstrap > 0 and np.any(sv > 0):
        err = max(err, _bootstrap_slopes(u, v, sv, w, n_bootstrap, seed))
    return FitResult(float(a), err, (float(window[0]), float(window[1])),
                     float(r2), n_bootstrap, "powerlaw")


def fit_log(series: SeriesTable, window: tuple[float, float] | None = None,
            n_bootstrap: int = 200, seed: int = 1234) -> FitResult:
    """Weighted fit of mean against ln(x); returns the log prefactor."""
    if window is None:
        window = (float(series.x[series.x > 0].min()), float(series.x.max()))
    x, y, s, _ = _prepare(series, window, 6, positive_mean=False)
    u = np.log(x)
    w = np.where(s > 0, 1.0 / s**2, np.nan)
    w = np.where(np.isnan(w), np.nanmax(w) if np.any(np.isfinite(w)) else 1.0, w)
    if not np.any(np.isfinite(w)):
        w = np.ones_like(u)
    a, _, var_a, r2 = _wls_line(u, y, w)
    err = math.sqrt(var_a)
    if n_bootstrap > 0 and np.any(s > 0):
        err = max(err, _bootstrap_slopes(u, y, s, w, n_bootstrap, seed))
    return FitResult(float(a), err, (float(window[0]), float(window[1])),
                     float(r2), n_bootstrap, "log")


def fit_linear(series: SeriesTable, window: tuple[float, float],
               n_bootstrap: int = 0, seed: int = 1234) -> FitResult:
    """Plain weighted straight-line fit of mean against x (volume-law
    checks); value is the slope."""
    x, y, s, _ = _prepare(series, window, 3, positive_mean=False)
    w = np.where(s > 0, 1.0 / s**2, np.nan)
    w = np.where(np.isnan(w), np.nanmax(w) if np.any(np.isfinite(w)) else 1.0, w)
    if not np.any(np.isfinite(w)):
        w = np.ones_like(x)
    a, _, var_a, r2 = _wls_line(x, y, w)
    return FitResult(float(a), math.sqrt(var_a),
                     (float(window[0]), float(window[1])), float(r2),
                     n_bootstrap, "linear")


def default_powerlaw_window(series: SeriesTable) -> tuple[float, float]:
    """One decade ending at half the horizon, skipping the transient."""
    hi = float(series.x.max()) / 2
    return (max(20.0, hi / 10.0), hi)


def default_log_window(series: SeriesTable) -> tuple[float, float]:
    """Transient-clipped window ending where the curve plateaus (local
    slope under 10% of the window-average slope) or at half the horizon."""
    hi = float(series.x.max()) / 2
    lo = 20.0 if series.x.max() > 80 else float(series.x[series.x > 0].min())
    m = (series.x >= lo) & (series.x <= hi)
    x, y = series.x[m], series.mean[m]
    if x.size >= 8:
        u = np.log(x)
        global_slope = (y[-1] - y[0]) / (u[-1] - u[0] + 1e-12)
        k = max(2, x.size // 8)
        for j in range(x.size - k, k, -1):
            local = (y[j + k - 1] - y[j - k]) / (u[j + k - 1] - u[j - k])
            if abs(local) >= 0.1 * abs(global_slope):
                hi = float(x[min(j + k - 1, x.size - 1)])
                break
    return (lo, hi)


@dataclass
class CollapseResult:
    best_z: float
    z_stderr: float
    objective_curve: dict = field(default_factory=dict)

    def objective_at(self, z: float) -> float:
        return self.objective_curve[round(float(z), 10)]


def collapse_scan(curves: list[SeriesTable], z_grid, sizes=None,
                  n_grid: int = 60, min_overlap: int = 5) -> CollapseResult:
    """Scan the dynamic exponent: rescale each curve's abscissa by L^-z,
    interpolate log(mean) on a shared log grid and score the
    stderr-weighted spread between curves.

    sizes defaults to each curve's metadata config L."""
    if len(curves) < 3:
        raise ValueError("need at least three system sizes")
    if sizes is None:
        sizes = [c.metadata["config"]["L"] for c in curves]
    if len(set(sizes)) != len(sizes):
        raise ValueError("system sizes must be distinct")
    prepared = []
    for tab in curves:
        m = (tab.mean > 0) & (tab.x > 0)
        lx = np.log(tab.x[m])
        ly = np.log(tab.mean[m])
        ls = tab.stderr[m] / tab.mean[m]
        prepared.append((lx, ly, np.maximum(ls, 1e-9)))

    z_grid = np.asarray(list(z_grid), dtype=float)
    objective = np.empty(z_grid.size)
    for iz, z in enumerate(z_grid):
        lo = max(lx[0] - z * math.log(Lz) for (lx, _, _), Lz in zip(prepared, sizes))
        hi = min(lx[-1] - z * math.log(Lz) for (lx, _, _), Lz in zip(prepared, sizes))
        if hi <= lo:
            objective[iz] = np.inf
            continue
        grid = np.linspace(lo, hi, n_grid)
        ys = np.empty((len(prepared), n_grid))
        ws = np.empty((len(prepared), n_grid))
        for ci, ((lx, ly, ls), Lz) in enumerate(zip(prepared, sizes)):
            u = lx - z * math.log(Lz)
            ys[ci] = np.interp(grid, u, ly)
            ws[ci] = 1.0 / np.maximum(np.interp(grid, u, ls), 1e-9) ** 2
        wsum = ws.sum(axis=0)
        ybar = (ws * ys).sum(axis=0) / wsum
        cost = (ws * (ys - ybar) ** 2).sum(axis=0) / wsum
        objective[iz] = float(np.mean(cost))
    if not np.any(np.isfinite(objective)):
        raise ValueError("no overlap after rescaling anywhere on the z grid")
    k = int(np.argmin(objective))
    best = z_grid[k]
    # quadratic refinement and a curvature-based width estimate
    stderr = float(z_grid[1] - z_grid[0]) if z_grid.size > 1 else 0.0
    if 0 < k < z_grid.size - 1 and np.all(np.isfinite(objective[k - 1:k + 2])):
        zl, zc, zr = z_grid[k - 1:k + 2]
        yl, yc, yr = objective[k - 1:k + 2]
        denom = (yl - 2 * yc + yr)
        if denom > 0:
            best = zc + 0.5 * (yl - yr) / denom * (zr - zc)
            curv = denom / (zr - zc) ** 2
            stderr = math.sqrt(max(yc, 1e-12) / curv)
    curve = {round(float(z), 10): float(o) for z, o in zip(z_grid, objective)}
    return CollapseResult(float(best), float(stderr), curve)


def potts_persistence_exponent(q: float) -> float:
    """Closed-form persistence exponent of zero-temperature coarsening
    with q equivalent states."""
    if q < 1:
        raise ValueError("q must be at least 1")
    return -0.125 + (2.0 / math.pi**2) * math.acos((2.0 - q) / (math.sqrt(2.0) * q)) ** 2


def boundary_persistence_exponent(q: float) -> float:
    """Half the bulk exponent: the never-visited rate for a chain-end site."""
    return potts_persistence_exponent(q) / 2.0


def ratio_lambda(fit_num: FitResult, fit_den: FitResult) -> tuple[float, float]:
    """Ratio of two fitted prefactors with first-order error propagation."""
    if abs(fit_den.value) <= 2 * fit_den.stderr:
        raise FitError("denominator consistent with zero")
    r = fit_num.value / fit_den.value
    err = abs(r) * math.hypot(fit_num.stderr / fit_num.value if fit_num.value else 0.0,
                              fit_den.stderr / fit_den.value)
    return r, err


def neg_log_table(series: SeriesTable, floor: float = 1e-12) -> SeriesTable:
    """Map a probability series to -ln(mean) with delta-method errors,
    dropping nonpositive entries."""
    m = series.mean > floor
    mean = -np.log(series.mean[m])
    stderr = series.stderr[m] / series.mean[m]
    return SeriesTable(series.axis, series.x[m], mean, stderr, series.n[m],
                       dict(series.metadata))
