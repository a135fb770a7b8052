"""Strang-split time stepping for the coupled Schrodinger / acoustic system.

The evolution equations are

    i dE1/dt + lap E1 - n E1 + eta E2 (E1 conj(E2) - conj(E1) E2) = 0
    i dE2/dt + lap E2 - n E2 + eta E1 (conj(E1) E2 - E1 conj(E2)) = 0
    dn/dt + div v = 0
    dv/dt + grad(n + |E1|^2 + |E2|^2) = 0

with eta > 0.  One step is the palindromic composition (a)(b)(c)(b)(a):

  (a) half step of the free Schrodinger flow, exact in Fourier space;
  (b) half step of the linear acoustic flow, exact in Fourier space through
      the longitudinal / transverse split of v;
  (c) full step of the pointwise coupling with n frozen (RK4 substeps)
      plus the acoustic forcing v <- v - dt grad(|E1|^2 + |E2|^2), whose
      source is constant during the substep because |E1|^2 + |E2|^2 is a
      pointwise invariant of (c).

(a) and (b) are exact flows, so the composition is second order in dt.
After every step the state is projected onto the retained spectral band;
the in-band fraction of the gradient energy is the resolution monitor, and
dropping below the configured threshold (or any NaN) raises BlowUpReached
with the last valid state attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import AccuracyError, BlowUpReached, DomainError, GridMismatchError
from .fields import (ComplexField2D, Grid2D, RealField2D, SystemState,
                     VectorField2D, gradient_norm_sq, l2_norm_sq,
                     state_from_arrays, vector_l2_norm_sq)

DIAG_COLUMNS = ("t", "dt", "mass", "hamiltonian", "grad_E", "n_norm", "v_norm",
                "lambda", "dealias_fraction_energy")


# ---------------------------------------------------------------------------
# configuration and results

@dataclass(frozen=True)
class StepperConfig:
    """Step size, coupling strength, and run-control knobs.

    nsub counts RK4 substeps inside the coupling stage (minimum 4).
    drift_tolerance, when set, bounds the relative Hamiltonian drift over a
    run; band_energy_min is the resolution-loss threshold on the in-band
    gradient-energy fraction.
    """

    dt: float
    eta: float
    adaptive: bool = False
    lambda_cap: float = math.inf
    drift_tolerance: float | None = None
    nsub: int = 4
    band_energy_min: float = 0.999

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise DomainError(f"dt must be positive and finite, got {self.dt!r}")
        if not (math.isfinite(self.eta) and self.eta > 0.0):
            raise DomainError(f"eta must be positive, got {self.eta!r}")
        if not self.lambda_cap > 0.0:
            raise DomainError(f"lambda_cap must be positive, got {self.lambda_cap!r}")
        if self.drift_tolerance is not None and not self.drift_tolerance > 0.0:
            raise DomainError(f"drift_tolerance must be positive or None, "
                              f"got {self.drift_tolerance!r}")
        if not (isinstance(self.nsub, int) and self.nsub >= 4):
            raise DomainError(f"nsub must be an integer >= 4, got {self.nsub!r}")
        if not (0.0 < self.band_energy_min < 1.0):
            raise DomainError(f"band_energy_min must lie in (0, 1), "
                              f"got {self.band_energy_min!r}")


@dataclass(frozen=True)
class ConservedQuantities:
    """Mass, Hamiltonian, and the Hamiltonian's individual contributions.

    hamiltonian = grad_E_sq + n_sq/2 + v_sq/2 + cross - magnetic, where
    cross = int n (|E1|^2 + |E2|^2) and magnetic = (eta/2) int
    |E1 conj(E2) - E2 conj(E1)|^2.
    """

    mass: float
    hamiltonian: float
    grad_E_sq: float
    n_sq: float
    v_sq: float
    cross: float
    magnetic: float


class StepDiagnostics(NamedTuple):
    mass: float
    hamiltonian: float
    grad_E_sq: float
    n_sq: float
    v_sq: float
    band_fraction: float
    drift_rho: float
    drift_m: float


@dataclass(eq=False)
class Trajectory:
    """Per-step diagnostics plus the last valid state of a run.

    rows follow DIAG_COLUMNS; the first row describes the initial state
    with the planned first dt.  stop_reason is 'horizon', 'lambda_cap' or
    'blow_up'.  max_drift_rho / max_drift_m are the worst per-step max-norm
    drifts of the pointwise coupling invariants |E1|^2 + |E2|^2 and
    Im(E1 conj E2) across the run.
    """

    rows: list
    stop_reason: str
    final: SystemState
    checkpoints: list
    eta: float
    max_drift_rho: float = 0.0
    max_drift_m: float = 0.0

    @property
    def times(self):
        return np.array([row[0] for row in self.rows])

    def column(self, name: str):
        try:
            j = DIAG_COLUMNS.index(name)
        except ValueError:
            raise DomainError(f"unknown diagnostics column {name!r}") from None
        return np.array([row[j] for row in self.rows])


# ---------------------------------------------------------------------------
# conserved quantities

def _dealiased_fft(arr, grid):
    return np.where(grid.dealias_mask, np.fft.fft2(arr), 0.0)


def mass(state: SystemState) -> float:
    """Total wave mass ||E1||^2 + ||E2||^2."""
    return l2_norm_sq(state.E1) + l2_norm_sq(state.E2)


def conserved_quantities(state: SystemState, eta: float) -> ConservedQuantities:
    """Evaluate mass and Hamiltonian with spectral gradients and dealiased products."""
    if not eta > 0.0:
        raise DomainError(f"eta must be positive, got {eta!r}")
    g = state.grid
    e1, e2 = state.E1.values, state.E2.values
    grad = gradient_norm_sq(state.E1) + gradient_norm_sq(state.E2)
    n_sq = l2_norm_sq(state.n)
    v_sq = vector_l2_norm_sq(state.v)
    rho = (e1.real ** 2 + e1.imag ** 2) + (e2.real ** 2 + e2.imag ** 2)
    rho_d = np.fft.ifft2(_dealiased_fft(rho, g)).real
    cross = float(np.sum(state.n.values * rho_d)) * g.cell_area
    # E1 conj(E2) - E2 conj(E1) = 2i m with real m, so its |.|^2 is 4 m^2
    m = e1.imag * e2.real - e1.real * e2.imag
    m_d = np.fft.ifft2(_dealiased_fft(m, g)).real
    magnetic = 2.0 * eta * float(np.sum(m_d * m_d)) * g.cell_area
    ham = grad + 0.5 * n_sq + 0.5 * v_sq + cross - magnetic
    return ConservedQuantities(mass=mass(state), hamiltonian=ham, grad_E_sq=grad,
                               n_sq=n_sq, v_sq=v_sq, cross=cross, magnetic=magnetic)


def hamiltonian(state: SystemState, eta: float) -> float:
    return conserved_quantities(state, eta).hamiltonian


def energy_seminorm(state: SystemState) -> float:
    """lambda = (||grad E1||^2 + ||grad E2||^2 + ||n||^2/2 + ||v||^2/2)^(1/2)."""
    return math.sqrt(gradient_norm_sq(state.E1) + gradient_norm_sq(state.E2)
                     + 0.5 * l2_norm_sq(state.n) + 0.5 * vector_l2_norm_sq(state.v))


def schrodinger_phase_ratio(grid: Grid2D, dt: float) -> float:
    """dt * max|k|^2 / (2 pi): informational phase-wrap bookkeeping for stage (a)."""
    return dt * float(np.max(grid.k_sq)) / (2.0 * math.pi)


def band_energy_fraction(state: SystemState) -> float:
    """In-band share of the gradient energy of (E1, E2); 1.0 for zero fields."""
    g = state.grid
    w = g.k_sq * (np.abs(np.fft.fft2(state.E1.values)) ** 2
                  + np.abs(np.fft.fft2(state.E2.values)) ** 2)
    total = float(np.sum(w))
    if total == 0.0:
        return 1.0
    return float(np.sum(w[g.dealias_mask])) / total


# ---------------------------------------------------------------------------
# residual of the evolution equations

class ResidualFields(NamedTuple):
    r1: ComplexField2D
    r2: ComplexField2D
    r3: RealField2D
    r4: VectorField2D


class TimeDerivatives(NamedTuple):
    """Analytic time derivatives of (E1, E2, n, vx, vy) as raw arrays."""

    dE1: np.ndarray
    dE2: np.ndarray
    dn: np.ndarray
    dvx: np.ndarray
    dvy: np.ndarray


def residual(state: SystemState, eta: float, time_derivatives: TimeDerivatives | None = None,
             neighbors: tuple[SystemState, SystemState] | None = None) -> ResidualFields:
    """Pointwise defect of the four evolution equations at `state`.

    Supply analytic `time_derivatives` when available, or `neighbors` =
    (state_before, state_after) for centered differencing in t.  Products
    are evaluated pointwise (no dealiasing): this is a verification
    operator, kept as close to the continuum equations as the grid allows.
    """
    if not eta > 0.0:
        raise DomainError(f"eta must be positive, got {eta!r}")
    if (time_derivatives is None) == (neighbors is None):
        raise DomainError("provide exactly one of time_derivatives or neighbors")
    g = state.grid
    if time_derivatives is not None:
        d = time_derivatives
    else:
        before, after = neighbors
        if before.grid != g or after.grid != g:
            raise GridMismatchError("neighbor states live on a different grid")
        span = after.t - before.t
        if not span > 0.0:
            raise DomainError("neighbors must satisfy after.t > before.t")
        d = TimeDerivatives(
            dE1=(after.E1.values - before.E1.values) / span,
            dE2=(after.E2.values - before.E2.values) / span,
            dn=(after.n.values - before.n.values) / span,
            dvx=(after.v.x - before.v.x) / span,
            dvy=(after.v.y - before.v.y) / span)

    e1, e2, n = state.E1.values, state.E2.values, state.n.values
    lap1 = np.fft.ifft2(-g.k_sq * np.fft.fft2(e1))
    lap2 = np.fft.ifft2(-g.k_sq * np.fft.fft2(e2))
    m = e1.imag * e2.real - e1.real * e2.imag  # Im(E1 conj E2)
    r1 = 1j * d.dE1 + lap1 - n * e1 + (2j * eta) * (m * e2)
    r2 = 1j * d.dE2 + lap2 - n * e2 - (2j * eta) * (m * e1)
    vh_x = np.fft.fft2(state.v.x)
    vh_y = np.fft.fft2(state.v.y)
    div_v = np.fft.ifft2(g.ikx * vh_x + g.iky * vh_y).real
    r3 = d.dn + div_v
    src = np.fft.fft2(n + (e1.real ** 2 + e1.imag ** 2) + (e2.real ** 2 + e2.imag ** 2))
    r4x = d.dvx + np.fft.ifft2(g.ikx * src).real
    r4y = d.dvy + np.fft.ifft2(g.iky * src).real
    return ResidualFields(r1=ComplexField2D(g, r1), r2=ComplexField2D(g, r2),
                          r3=RealField2D(g, r3), r4=VectorField2D(g, r4x, r4y))


def residual_norms(res: ResidualFields) -> tuple[float, float, float, float]:
    """L2 norms of the four equation defects."""
    return (math.sqrt(l2_norm_sq(res.r1)), math.sqrt(l2_norm_sq(res.r2)),
            math.sqrt(l2_norm_sq(res.r3)), math.sqrt(vector_l2_norm_sq(res.r4)))


# ---------------------------------------------------------------------------
# stepping

@lru_cache(maxsize=16)
def _wave_geometry(grid: Grid2D):
    k_abs = np.sqrt(grid.k_sq)
    with np.errstate(invalid="ignore", divide="ignore"):
        ukx = np.where(k_abs > 0.0, grid.kx / np.where(k_abs > 0.0, k_abs, 1.0), 0.0)
        uky = np.where(k_abs > 0.0, grid.ky / np.where(k_abs > 0.0, k_abs, 1.0), 0.0)
    for arr in (k_abs, ukx, uky):
        arr.setflags(write=False)
    return k_abs, ukx, uky


def _wave_half(nh, vxh, vyh, k_abs, ukx, uky, tau):
    """Exact acoustic flow over tau: rotate (n, longitudinal v) in Fourier space."""
    c = np.cos(k_abs * tau)
    s = np.sin(k_abs * tau)
    b = ukx * vxh + uky * vyh
    nh2 = c * nh - 1j * (s * b)
    b2 = c * b - 1j * (s * nh)
    db = b2 - b
    return nh2, vxh + db * ukx, vyh + db * uky


def _step_arrays(grid, e1, e2, n, vx, vy, dt, eta, nsub):
    """One Strang step on raw arrays; returns new arrays plus StepDiagnostics."""
    g = grid
    mask = g.dealias_mask
    k_abs, ukx, uky = _wave_geometry(g)
    sw = g.spectral_weight

    phase = np.exp(-0.5j * dt * g.k_sq)
    e1h = np.fft.fft2(e1) * phase
    e2h = np.fft.fft2(e2) * phase
    nh = np.fft.fft2(n)
    vxh = np.fft.fft2(vx)
    vyh = np.fft.fft2(vy)
    nh, vxh, vyh = _wave_half(nh, vxh, vyh, k_abs, ukx, uky, 0.5 * dt)

    e1p = np.fft.ifft2(e1h)
    e2p = np.fft.ifft2(e2h)
    n_mid = np.fft.ifft2(nh).real
    e1p, e2p, drift_rho, drift_m = kernels.coupling_substep(e1p, e2p, n_mid, eta, dt, nsub)
    rho = (e1p.real ** 2 + e1p.imag ** 2) + (e2p.real ** 2 + e2p.imag ** 2)
    src = np.where(mask, np.fft.fft2(rho), 0.0)
    vxh = vxh - dt * (g.ikx * src)
    vyh = vyh - dt * (g.iky * src)

    nh, vxh, vyh = _wave_half(nh, vxh, vyh, k_abs, ukx, uky, 0.5 * dt)
    e1h = np.fft.fft2(e1p) * phase
    e2h = np.fft.fft2(e2p) * phase

    # resolution monitor: in-band share of the gradient energy, before masking
    w1 = g.k_sq * (e1h.real ** 2 + e1h.imag ** 2)
    w2 = g.k_sq * (e2h.real ** 2 + e2h.imag ** 2)
    total = float(np.sum(w1) + np.sum(w2))
    in_band = float(np.sum(w1[mask]) + np.sum(w2[mask]))
    band_fraction = in_band / total if total > 0.0 else 1.0

    e1h = np.where(mask, e1h, 0.0)
    e2h = np.where(mask, e2h, 0.0)
    nh = np.where(mask, nh, 0.0)
    vxh = np.where(mask, vxh, 0.0)
    vyh = np.where(mask, vyh, 0.0)

    # Parseval bookkeeping on the masked spectra (no extra transforms)
    abs2 = lambda zh: zh.real ** 2 + zh.imag ** 2
    mass_val = (float(np.sum(abs2(e1h))) + float(np.sum(abs2(e2h)))) * sw
    grad_sq = in_band * sw
    n_sq = float(np.sum(abs2(nh))) * sw
    v_sq = (float(np.sum(abs2(vxh))) + float(np.sum(abs2(vyh)))) * sw

    e1 = np.fft.ifft2(e1h)
    e2 = np.fft.ifft2(e2h)
    n = np.fft.ifft2(nh).real
    vx = np.fft.ifft2(vxh).real
    vy = np.fft.ifft2(vyh).real

    # Hamiltonian pieces that need physical-space products
    rho_end = (e1.real ** 2 + e1.imag ** 2) + (e2.real ** 2 + e2.imag ** 2)
    rho_h = np.where(mask, np.fft.fft2(rho_end), 0.0)
    cross = float(np.sum((nh * np.conj(rho_h)).real)) * sw
    m_im = e1.imag * e2.real - e1.real * e2.imag
    m_h = np.where(mask, np.fft.fft2(m_im), 0.0)
    magnetic = 2.0 * eta * float(np.sum(abs2(m_h))) * sw
    ham = grad_sq + 0.5 * n_sq + 0.5 * v_sq + cross - magnetic

    diag = StepDiagnostics(mass=mass_val, hamiltonian=ham, grad_E_sq=grad_sq,
                           n_sq=n_sq, v_sq=v_sq, band_fraction=band_fraction,
                           drift_rho=drift_rho, drift_m=drift_m)
    return e1, e2, n, vx, vy, diag


def _advance(state: SystemState, config: StepperConfig, dt: float):
    """Step once; raise BlowUpReached (carrying `state`) on loss of resolution."""
    g = state.grid
    arrays = _step_arrays(g, state.E1.values, state.E2.values, state.n.values,
                          state.v.x, state.v.y, dt, config.eta, config.nsub)
    e1, e2, n, vx, vy, diag = arrays
    if not (diag.band_fraction >= config.band_energy_min) or not math.isfinite(diag.mass):
        raise BlowUpReached(
            f"resolution lost at t = {state.t:.6g}: in-band gradient-energy "
            f"fraction {diag.band_fraction:.6f}", state=state, t=state.t)
    new = state_from_arrays(g, e1, e2, n, vx, vy, t=state.t + dt)
    return new, diag


def step(state: SystemState, config: StepperConfig) -> SystemState:
    """One Strang step of size config.dt; pure function of the input state."""
    new, _ = _advance(state, config, config.dt)
    return new


def run(initial: SystemState, config: StepperConfig, horizon: float,
        checkpoint_interval: float | None = None) -> Trajectory:
    """Integrate from `initial` until the horizon, lambda_cap, or blow-up.

    With config.adaptive, the step size follows dt = dt0 (lambda0 /
    lambda)^2, evaluated on the current state.  Checkpoints (including the
    initial state) are collected every checkpoint_interval time units.
    """
    if not (math.isfinite(horizon) and horizon > initial.t):
        raise DomainError(f"horizon must exceed the initial time, got {horizon!r}")
    if checkpoint_interval is not None and not checkpoint_interval > 0.0:
        raise DomainError("checkpoint_interval must be positive or None")

    lam0 = energy_seminorm(initial)
    q0 = conserved_quantities(initial, config.eta)
    h_scale = max(abs(q0.hamiltonian), 1e-12)

    rows = []
    checkpoints = [initial] if checkpoint_interval is not None else []
    next_checkpoint = initial.t + checkpoint_interval if checkpoint_interval else math.inf

    state = initial
    lam = lam0
    drift_rho_max = 0.0
    drift_m_max = 0.0
    rows.append((initial.t, config.dt, q0.mass, q0.hamiltonian,
                 math.sqrt(q0.grad_E_sq), math.sqrt(q0.n_sq), math.sqrt(q0.v_sq),
                 lam0, band_energy_fraction(initial)))
    stop_reason = "horizon"
    if lam0 > config.lambda_cap:
        stop_reason = "lambda_cap"
    else:
        while state.t < horizon - 1e-12 * horizon:
            dt = config.dt * (lam0 / lam) ** 2 if config.adaptive else config.dt
            dt = min(dt, horizon - state.t)
            try:
                state, diag = _advance(state, config, dt)
            except BlowUpReached:
                stop_reason = "blow_up"
                break
            lam = math.sqrt(diag.grad_E_sq + 0.5 * diag.n_sq + 0.5 * diag.v_sq)
            drift_rho_max = max(drift_rho_max, diag.drift_rho)
            drift_m_max = max(drift_m_max, diag.drift_m)
            rows.append((state.t, dt, diag.mass, diag.hamiltonian,
                         math.sqrt(diag.grad_E_sq), math.sqrt(diag.n_sq),
                         math.sqrt(diag.v_sq), lam, diag.band_fraction))
            if config.drift_tolerance is not None:
                drift = abs(diag.hamiltonian - q0.hamiltonian) / h_scale
                if drift > config.drift_tolerance:
                    raise AccuracyError(
                        f"relative Hamiltonian drift {drift:.3e} exceeds "
                        f"{config.drift_tolerance:g} at t = {state.t:.6g}")
            if state.t >= next_checkpoint - 1e-12:
                checkpoints.append(state)
                while next_checkpoint <= state.t + 1e-12:
                    next_checkpoint += checkpoint_interval
            if lam > config.lambda_cap:
                stop_reason = "lambda_cap"
                break
    return Trajectory(rows=rows, stop_reason=stop_reason, final=state,
                      checkpoints=checkpoints, eta=config.eta,
                      max_drift_rho=drift_rho_max, max_drift_m=drift_m_max)
