"""Finite-rank spectral-asymptotics estimators.

Dimension and volume come from least-squares fits of the eigenvalue counting
function N(lam) = #{|eigenvalue| <= lam} against the Weyl form

    N(lam) = C lam^d + e.

The staircase is sampled at its jump midpoints, N(level) - mult/2, and the
constant e absorbs the half-rank ambiguity of that convention (for the model
spectra here the midpoints then follow an exact shifted power law).  The
heat trace sum_i exp(-t lam_i^2) is fit to alpha/t + beta, whose subleading
coefficient beta carries the integrated curvature term.

Fits always exclude the top two |eigenvalue| levels, which truncation
distorts, and every report carries its fit residual.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

LEVEL_TOL = 1e-9


@dataclass(frozen=True)
class EstimateReport:
    dimension: float
    volume: float
    heat_leading: float
    heat_subleading: float
    fit_window: tuple
    t_grid: tuple
    residuals: dict


def _abs_levels(s):
    """Sorted distinct |eigenvalue| levels (grouped within LEVEL_TOL)."""
    vals = np.sort(np.abs(np.asarray(s, dtype=float)))
    if len(vals) == 0:
        raise ValueError("empty spectrum")
    levels = [vals[0]]
    for v in vals[1:]:
        if v - levels[-1] > LEVEL_TOL:
            levels.append(v)
    return np.array(levels)


def counting_function(s, lam):
    """#{eigenvalues of s with |value| <= lam}."""
    return int(np.count_nonzero(np.abs(np.asarray(s, dtype=float)) <= lam + LEVEL_TOL))


def default_window(s):
    """Full level span; the top-two exclusion is applied inside the fits."""
    levels = _abs_levels(s)
    if len(levels) < 3:
        raise ValueError("need at least 3 distinct |eigenvalue| levels")
    return float(levels[0]), float(levels[-1])


def _count_samples(s, window):
    """Sample points and staircase-midpoint N values inside the window.

    At a level of multiplicity m the counting staircase jumps by m; sampling
    N(level) - m/2 reads off its unbiased smooth envelope.  The global top
    two levels are excluded from the fit (truncation-distorted), but only
    after the window precondition (at least 5 distinct levels) is checked.
    """
    lo, hi = window
    if not hi > lo:
        raise ValueError(f"degenerate window {window!r}")
    vals = np.abs(np.asarray(s, dtype=float))
    levels = _abs_levels(s)
    inside = levels[(levels >= lo - LEVEL_TOL) & (levels <= hi + LEVEL_TOL)]
    if len(inside) < 5:
        raise ValueError(
            f"window {window!r} holds {len(inside)} distinct |eigenvalue| "
            "levels, need at least 5")
    if len(levels) > 2:
        inside = inside[inside <= levels[-3] + LEVEL_TOL]
    if len(inside) < 2:
        raise ValueError(f"window {window!r} leaves fewer than 2 fit points "
                         "after excluding the top two levels")
    counts = []
    for lev in inside:
        mult = int(np.count_nonzero(np.abs(vals - lev) <= LEVEL_TOL))
        counts.append(counting_function(s, lev) - mult / 2)
    counts = np.array(counts, dtype=float)
    if np.any(counts <= 0) or np.any(inside <= 0):
        raise ValueError("counting fit needs positive levels and counts")
    return inside, counts


def _loglog_slope(xs, ys):
    slope, inter = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope), float(inter)


def _power_fit(xs, ys):
    """Least-squares (C, d, e) for ys = C xs^d + e, seeded by the log-log
    slope."""
    d0, li = _loglog_slope(xs, ys)
    p0 = (np.exp(li), max(d0, 0.1), 0.0)
    try:
        popt, _ = curve_fit(lambda x, c, d, e: c * x ** d + e, xs, ys,
                            p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise ValueError(f"power-law fit did not converge: {exc}") from exc
    c, d, e = popt
    if c <= 0 or d <= 0:
        raise ValueError(f"power-law fit degenerated (C={c:.3e}, d={d:.3e})")
    return float(c), float(d), float(e)


def _prefactor_fit(xs, ys, d):
    """Least-squares (C, e) for ys = C xs^d + e with d fixed (closed form)."""
    design = np.column_stack([xs ** d, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    return float(coef[0]), float(coef[1])


def dimension_estimate(s, window=None):
    """Exponent of the least-squares Weyl fit N(lam) = C lam^d + e."""
    if window is None:
        window = default_window(s)
    xs, ys = _count_samples(s, window)
    if len(xs) < 4:
        raise ValueError("dimension fit needs at least 4 points in window")
    return _power_fit(xs, ys)[1]


def volume_estimate(s, d, window=None):
    """Volume from the Weyl prefactor of a fit N(lam) = C lam^d + e:

    volume = C (4 pi)^(d/2) Gamma(d/2 + 1) / 2^floor(d/2).
    """
    if d <= 0:
        raise ValueError("dimension d must be positive")
    if window is None:
        window = default_window(s)
    xs, ys = _count_samples(s, window)
    if len(xs) < 3:
        raise ValueError("volume fit needs at least 3 points in window")
    c, _ = _prefactor_fit(xs, ys, d)
    if c <= 0:
        raise ValueError(f"volume fit degenerated (C={c:.3e})")
    from math import gamma
    return float(c * (4 * np.pi) ** (d / 2) * gamma(d / 2 + 1) / 2 ** int(d // 2))


def default_t_grid(s, n=20):
    """20 logarithmic points on [t_lo, 4 t_lo] with exp(-t_lo lam_max^2) = 1e-6,
    so the truncated tail is negligible across the grid."""
    lam_max = float(np.max(np.abs(np.asarray(s, dtype=float))))
    if lam_max <= 0:
        raise ValueError("spectrum must contain a nonzero eigenvalue")
    t_lo = 6 * np.log(10.0) / lam_max ** 2
    return np.geomspace(t_lo, 4 * t_lo, n)


def heat_trace_fit(s, t_grid=None):
    """Least-squares fit of sum_i exp(-t lam_i^2) to alpha/t + beta.

    Returns (alpha, beta).  Rejects spectra with fewer than 3 distinct
    |eigenvalue| levels and ill-conditioned design matrices.
    """
    if len(_abs_levels(s)) < 3:
        raise ValueError("heat-trace fit needs at least 3 distinct "
                         "|eigenvalue| levels, design matrix is rank-deficient")
    if t_grid is None:
        t_grid = default_t_grid(s)
    t = np.asarray(t_grid, dtype=float)
    if len(t) < 2 or np.any(t <= 0):
        raise ValueError("t_grid must hold at least 2 positive points")
    lam2 = np.abs(np.asarray(s, dtype=float)) ** 2
    y = np.exp(-np.outer(t, lam2)).sum(axis=1)
    design = np.column_stack([1.0 / t, np.ones_like(t)])
    scale = np.linalg.norm(design, axis=0)
    cond = np.linalg.cond(design / scale)
    if cond > 1e10:
        raise ValueError(f"ill-conditioned heat-trace design matrix, "
                         f"condition number {cond:.3e}")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[0]), float(coef[1])


def _fit_residual(x, y, predict):
    return float(np.sqrt(np.mean((y - predict(x)) ** 2)))


def estimate_report(s, d=None, window=None, t_grid=None):
    """Full estimator bundle for one spectrum.

    d is the dimension used for the volume fit; by default the dimension
    estimate rounded to the nearest integer.
    """
    if window is None:
        window = default_window(s)
    dim = dimension_estimate(s, window)
    if d is None:
        d = max(round(dim), 1)
    vol = volume_estimate(s, d, window)
    if t_grid is None:
        t_grid = default_t_grid(s)
    alpha, beta = heat_trace_fit(s, t_grid)

    xs, ys = _count_samples(s, window)
    cd, dd, ed = _power_fit(xs, ys)
    res_dim = _fit_residual(xs, ys, lambda x: cd * x ** dd + ed)
    cv, ev = _prefactor_fit(xs, ys, d)
    res_vol = _fit_residual(xs, ys, lambda x: cv * x ** d + ev)
    t = np.asarray(t_grid, dtype=float)
    lam2 = np.abs(np.asarray(s, dtype=float)) ** 2
    y = np.exp(-np.outer(t, lam2)).sum(axis=1)
    res_heat = _fit_residual(t, y, lambda tt: alpha / tt + beta)

    return EstimateReport(
        dimension=dim,
        volume=vol,
        heat_leading=alpha,
        heat_subleading=beta,
        fit_window=(float(window[0]), float(window[1])),
        t_grid=tuple(float(x) for x in t),
        residuals={"dimension": res_dim, "volume": res_vol, "heat": res_heat},
    )
