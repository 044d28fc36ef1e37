"""
Stretched-exponential (Kohlrausch) lifetime fits.

    f(t; b, tau, alpha) = (1 - b) * exp(-(t / tau)**alpha) + b

The fitter runs Nelder-Mead in the unconstrained coordinates
``(logit b, log tau, log alpha)`` from a fixed schedule of starts, then
polishes the best simplex result with a bounded least-squares step. Both
stages are deterministic, so a given series always yields the same fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.special import expit, logit

from .errors import DegenerateSeries, DimensionMismatch
from .metrics import FidelitySeries

__all__ = ["KohlrauschFit", "kohlrausch", "fit", "ALPHA_SEEDS", "ALPHA_MAX"]

ALPHA_SEEDS = (0.7, 1.0, 1.5, 2.5)
ALPHA_MAX = 5.0
MIN_POINTS = 10
WINDOW_TAUS = 5.0
MAX_EVALS = 20000
SIMPLEX_TOL = 1e-10
_B_EDGE = 1e-9


@dataclass(frozen=True)
class KohlrauschFit:
    b: float
    tau: float
    alpha: float
    sse: float = 0.0
    converged: bool = True
    n_points: int = 0

    def __call__(self, t):
        return kohlrausch(t, self)


def kohlrausch(t, params: KohlrauschFit):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    out = (1.0 - params.b) * np.exp(-((t / params.tau) ** params.alpha)) + params.b
    return float(out) if out.ndim == 0 else out


def _validate(series: FidelitySeries) -> tuple[np.ndarray, np.ndarray]:
    t, y = series.t, series.values
    if len(t) < MIN_POINTS:
        raise DimensionMismatch(f"need at least {MIN_POINTS} points, got {len(t)}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t must be strictly increasing")
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    if not np.all(np.isfinite(y)) or y.min() < -1e-9 or y.max() > 1 + 1e-9:
        raise ValueError("values must lie in [0, 1]")
    if np.ptp(y) < 1e-12:
        raise DegenerateSeries("series is constant")
    return t, y


def _crossing_time(t: np.ndarray, y: np.ndarray, level: float) -> float:
    below = np.nonzero(y <= level)[0]
    if below.size == 0:
        return float(t[-1])
    i = int(below[0])
    if i == 0:
        return float(t[1])
    # linear interpolation between the bracketing samples
    t0, t1, y0, y1 = t[i - 1], t[i], y[i - 1], y[i]
    return float(t0 + (y0 - level) * (t1 - t0) / (y0 - y1))


def _unpack(z: np.ndarray) -> tuple[float, float, float]:
    return float(expit(z[0])), float(math.exp(z[1])), float(math.exp(z[2]))


def fit(series: FidelitySeries, window: float | None = None) -> KohlrauschFit:
    """Least-squares Kohlrausch fit of a decaying series.

    ``window`` caps the fitted time range; by default it is five times the
    seeded lifetime, limited to the series length.
    """
    t, y = _validate(series)
    b_hat = float(np.clip(y.min(), _B_EDGE, 1 - _B_EDGE))
    t_cross = _crossing_time(t, y, 0.5 * (1 + b_hat))
    tau_seed = max(t_cross / math.log(2.0), 1e-12)

    limit = WINDOW_TAUS * tau_seed if window is None else float(window)
    mask = t <= limit
    if mask.sum() < MIN_POINTS:
        mask = np.zeros_like(mask)
        mask[:MIN_POINTS] = True
    tw, yw = t[mask], y[mask]

    def residuals(b, tau, alpha):
        return (1.0 - b) * np.exp(-((tw / tau) ** alpha)) + b - yw

    def objective(z):
        b, tau, alpha = _unpack(z)
        if alpha > ALPHA_MAX or not np.isfinite(tau):
            return 1e30
        r = residuals(b, tau, alpha)
        return float(r @ r)

    results = []
    for alpha0 in ALPHA_SEEDS:
        tau0 = max(t_cross / math.log(2.0) ** (1.0 / alpha0), 1e-12)
        z0 = np.array([logit(b_hat), math.log(tau0), math.log(alpha0)])
        res = minimize(objective, z0, method="Nelder-Mead",
                       options={"xatol": SIMPLEX_TOL, "fatol": np.inf, "maxfev": MAX_EVALS})
        results.append((res.fun, res))
    # lowest sse wins; ties resolved by start order
    best_sse, best = min(results, key=lambda item: item[0])
    b, tau, alpha = _unpack(best.x)
    converged = bool(best.success)

    lo = [0.0, 1e-12, 1e-6]
    hi = [1.0, np.inf, ALPHA_MAX]
    x0 = np.clip([b, tau, alpha], [lo[0], lo[1], lo[2]], [hi[0], 1e300, hi[2]])
    try:
        pol = least_squares(lambda x: residuals(*x), x0, bounds=(lo, hi), method="trf",
                            x_scale=np.array([1.0, max(tau, 1.0), 1.0]),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=MAX_EVALS)
        pol_sse = float(pol.fun @ pol.fun)
        if pol_sse <= best_sse:
            b, tau, alpha = (float(v) for v in pol.x)
            best_sse = pol_sse
        converged = converged or pol.status > 0
    except ValueError:
        pass
    return KohlrauschFit(b=b, tau=tau, alpha=alpha, sse=float(best_sse),
                         converged=converged, n_points=int(mask.sum()))
