"""Blow-up rate fitting, lower-bound verdicts, and initial-data classification.

Singular norms of a collapsing solution grow like c/(T-t)^p; fitting runs
in log space where the model is linear in log c and p.  With p fixed to 1
the optimal T reduces to a one-dimensional root find.  Classification
scores a state against the mass window and the sign of the Hamiltonian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import Trajectory, hamiltonian, mass
from .errors import DomainError, FitFailure
from .fields import SystemState
from .groundstate import ThresholdWindow, threshold_window

_MODELS = ("fixed_exponent_1", "free_exponent")


@dataclass(frozen=True, eq=False)
class RateFit:
    """Result of fitting y ~ c/(T-t)^p to a growing norm series."""

    c: float
    T_est: float
    exponent: float
    rms_log_residual: float

    def __post_init__(self):
        if not (self.c > 0.0 and math.isfinite(self.T_est)
                and math.isfinite(self.rms_log_residual)):
            raise DomainError("rate fit fields must be finite with c > 0")


@dataclass(frozen=True, eq=False)
class Classification:
    mass: float
    window: ThresholdWindow
    in_window: bool
    hamiltonian: float
    negative_energy: bool
    radial: bool


class LowerBoundVerdict(NamedTuple):
    which: str
    passed: bool
    exponent: float
    super_rate: bool
    constant_ratio: float | None
    note: str


class SobolevRatioSeries(NamedTuple):
    times: np.ndarray
    ratio: np.ndarray
    skipped: int
    final_quarter_min: float
    final_quarter_max: float


def _windowed(series, window_fraction):
    pts = [(float(t), float(y)) for t, y in series]
    if any(not (math.isfinite(t) and math.isfinite(y)) for t, y in pts):
        raise FitFailure("non-finite samples in rate series", {})
    pts.sort(key=lambda p: p[0])
    keep = max(8, int(math.ceil(window_fraction * len(pts))))
    pts = pts[-keep:]
    if len(pts) < 8:
        raise FitFailure("need at least 8 samples to fit a rate",
                         {"n_samples": len(pts)})
    t = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.any(y <= 0.0):
        raise FitFailure("rate series must be positive", {})
    if y[-1] <= 1.05 * y[0]:
        raise FitFailure("tail is not increasing; series does not look singular",
                         {"y_first": float(y[0]), "y_last": float(y[-1])})
    return t, y


def fit_rate(series, model: str = "fixed_exponent_1",
             window_fraction: float = 0.5) -> RateFit:
    """Fit y ~ c/(T-t)^p over the trailing window_fraction of the series.

    model "fixed_exponent_1" pins p = 1 and finds T by bisection on the
    stationarity condition of the log-space least squares (c solved
    linearly at each T); "free_exponent" then polishes (c, T, p) jointly.
    """
    if model not in _MODELS:
        raise DomainError(f"model must be one of {_MODELS}, got {model!r}")
    if not 0.0 < window_fraction <= 1.0:
        raise DomainError("window_fraction must lie in (0, 1]")
    t, y = _windowed(series, window_fraction)
    logy = np.log(y)
    t_last = float(t[-1])
    span = max(t_last - float(t[0]), 1e-30)

    def grad_s(T):
        # d/dT of sum (z - mean z)^2 with z = log y + log(T - t)
        z = logy + np.log(T - t)
        zc = z - z.mean()
        return float(np.sum(zc / (T - t)))

    lo = t_last + 1e-12 * span
    hi = t_last + 2.0 * span
    glo = grad_s(lo)
    if glo > 0.0:
        # already past the minimum: T essentially at the last sample
        T_est = lo
    else:
        for _ in range(64):
            if grad_s(hi) > 0.0:
                break
            hi = t_last + 2.0 * (hi - t_last)
        else:
            raise FitFailure("no singular time in range; growth too slow for 1/(T-t)",
                             {"t_last": t_last, "T_probe": hi})
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if grad_s(mid) > 0.0:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-15 * max(1.0, abs(hi)):
                break
        T_est = 0.5 * (lo + hi)

    z = logy + np.log(T_est - t)
    logc = float(z.mean())
    p = 1.0
    if model == "free_exponent":
        from scipy.optimize import least_squares

        def resid(theta):
            lc, T, pe = theta
            if T <= t_last:
                return np.full(t.size, 1e6)
            return logy - (lc - pe * np.log(T - t))

        start = (logc, T_est, 1.0)
        fit = least_squares(resid, start, method="lm", xtol=1e-15, ftol=1e-15)
        if not fit.success:
            raise FitFailure(f"free-exponent fit did not converge: {fit.message}",
                             {"start": start})
        logc, T_est, p = (float(v) for v in fit.x)
        if T_est <= t_last:
            raise FitFailure("fitted singular time precedes the data",
                             {"T_est": T_est, "t_last": t_last})
        rms = float(np.sqrt(np.mean(fit.fun ** 2)))
    else:
        rms = float(np.sqrt(np.mean((z - logc) ** 2)))
    return RateFit(c=math.exp(logc), T_est=T_est, exponent=p, rms_log_residual=rms)


def check_lower_bound(fit: RateFit, which: str, mass_value: float | None = None,
                      q_mass_sq: float | None = None,
                      eta: float | None = None) -> LowerBoundVerdict:
    """Score a fit against the expected at-least-1/(T-t) growth.

    The empirical constant c over (mass - ||Q||^2/(1+eta))^(-1/2) is
    reported when the threshold data is supplied, never asserted: the
    theory guarantees existence of such a constant, not its value.
    """
    if which not in ("grad_E", "n_norm", "full_norm"):
        raise DomainError(f"unknown norm selector {which!r}")
    passed = fit.exponent >= 0.95
    super_rate = fit.exponent >= 1.5
    ratio = None
    if mass_value is not None and q_mass_sq is not None and eta is not None:
        excess = mass_value - q_mass_sq / (1.0 + eta)
        if excess > 0.0:
            ratio = fit.c * math.sqrt(excess)
    note = "super-rate" if super_rate else ("ok" if passed else "below expected rate")
    return LowerBoundVerdict(which=which, passed=passed, exponent=fit.exponent,
                             super_rate=super_rate, constant_ratio=ratio, note=note)


def classify_initial_data(state: SystemState, eta: float, q_mass_sq: float,
                          radial: bool = False) -> Classification:
    """Mass-window and energy-sign classification of initial data."""
    window = threshold_window(eta, q_mass_sq)
    m = mass(state)
    h = hamiltonian(state, eta)
    return Classification(mass=m, window=window, in_window=window.contains(m),
                          hamiltonian=h, negative_energy=h < 0.0, radial=radial)


def sobolev_ratio_monitor(traj: Trajectory) -> SobolevRatioSeries:
    """Series r(t) = ||grad E|| / ||n|| with min/max over the final quarter."""
    t = traj.column("t")
    grad = traj.column("grad_E")
    n = traj.column("n_norm")
    good = n > 0.0
    skipped = int(np.sum(~good))
    tt, rr = t[good], grad[good] / n[good]
    if rr.size == 0:
        return SobolevRatioSeries(times=tt, ratio=rr, skipped=skipped,
                                  final_quarter_min=math.nan,
                                  final_quarter_max=math.nan)
    q = max(1, rr.size // 4)
    tail = rr[-q:]
    return SobolevRatioSeries(times=tt, ratio=rr, skipped=skipped,
                              final_quarter_min=float(tail.min()),
                              final_quarter_max=float(tail.max()))
