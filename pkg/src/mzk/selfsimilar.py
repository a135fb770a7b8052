"""Self-similar profile pairs and the explicit collapsing family built on them.

The radial profile system for (P, N) at parameter omega is

    lap P - P + (eta/(eta+1)) P^3 = N P / (eta+1)
    (1/omega^2) (r^2 N'' + 6 r N' + 6 N) - lap N = lap(P^2)

whose omega -> infinity limit is (P, N) = (Q, -Q^2).  A profile pair plus a
collapse time T and phase theta generates the explicit solution

    E1 = mu e^{i(theta - r^2/(4(T-t)) + omega^2/(T-t))} Ptilde(mu r)/sqrt(2)
    E2 = -i E1,  n = mu^2 Ntilde(mu r),  mu = omega/(T-t),

with Ptilde = P/sqrt(eta+1), Ntilde = N/(eta+1).  The velocity is the
unique curl-free mean-free field with div v = -dn/dt, obtained spectrally
from the analytic time derivative of n.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .dynamics import TimeDerivatives
from .errors import DomainError, ResolutionWarning, SolverFailure
from .fields import (ComplexField2D, Grid2D, RealField2D, SystemState,
                     VectorField2D, gradient_norm_sq, l2_norm_sq,
                     vector_l2_norm_sq)
from .groundstate import RadialProfile
from .parallel import worker_count


# ---------------------------------------------------------------------------
# profile pairs

@dataclass(frozen=True, eq=False)
class ProfilePair:
    """Radial pair (P, N) at coupling eta and scale parameter omega.

    residual_norms holds the max-norm defects of the two profile equations;
    solver output reports them on its own finite-difference discretization,
    seeded/limit pairs on high-order stencils (see the producing function).
    """

    P: RadialProfile
    N: RadialProfile
    omega: float
    eta: float
    residual_norms: tuple

    def __post_init__(self):
        if not self.omega > 0.0:
            raise DomainError(f"omega must be positive, got {self.omega!r}")
        if not (math.isfinite(self.eta) and self.eta > 0.0):
            raise DomainError(f"eta must be positive, got {self.eta!r}")


def _stencil_d1_d2(v, dr):
    """Interior first/second derivatives by 7-point stencils (order 6)."""
    i = np.arange(3, v.size - 3)
    w = [v[i + k] for k in (-3, -2, -1, 0, 1, 2, 3)]
    d1 = (-w[0] + 9 * w[1] - 45 * w[2] + 45 * w[4] - 9 * w[5] + w[6]) / (60 * dr)
    d2 = (2 * w[0] - 27 * w[1] + 270 * w[2] - 490 * w[3]
          + 270 * w[4] - 27 * w[5] + 2 * w[6]) / (180 * dr * dr)
    return i, d1, d2


def _pair_residuals(r, p, n, omega, eta, dr):
    """Max-norm defects of the two profile equations, high-order stencils."""
    i, p1, p2 = _stencil_d1_d2(p, dr)
    _, n1, n2 = _stencil_d1_d2(n, dr)
    ri = r[i]
    lap_p = p2 + p1 / ri
    res1 = lap_p - p[i] + (eta / (eta + 1.0)) * p[i] ** 3 - n[i] * p[i] / (eta + 1.0)
    p_sq = p * p
    _, q1, q2 = _stencil_d1_d2(p_sq, dr)
    lap_n = n2 + n1 / ri
    lap_psq = q2 + q1 / ri
    inv_w2 = 0.0 if math.isinf(omega) else 1.0 / (omega * omega)
    res2 = inv_w2 * (ri * ri * n2 + 6.0 * ri * n1 + 6.0 * n[i]) - lap_n - lap_psq
    return float(np.max(np.abs(res1))), float(np.max(np.abs(res2)))


def limit_profile(Q: RadialProfile, eta: float = 1.0) -> ProfilePair:
    """The omega -> infinity pair (P, N) = (Q, -Q^2).

    The first profile equation then reduces to the Q equation identically,
    and the second to lap(N + Q^2) = 0, which holds exactly.
    """
    N = RadialProfile(r=Q.r, values=-(Q.values ** 2), decay_rate=2.0 * Q.decay_rate)
    res = _pair_residuals(Q.r, Q.values, N.values, math.inf, eta, Q.dr)
    return ProfilePair(P=Q, N=N, omega=math.inf, eta=eta, residual_norms=res)


def seeded_profile(omega: float, eta: float, Q: RadialProfile) -> ProfilePair:
    """Limit shapes tagged with a finite omega, residuals measured, no iteration.

    The only defect is the
    (1/omega^2)(r^2 N'' + 6 r N' + 6 N) term of the second equation, so
    residual_norms shrink like 1/omega^2 as omega grows.
    """
    if not (math.isfinite(omega) and omega > 0.0):
        raise DomainError(f"omega must be positive and finite, got {omega!r}")
    N = RadialProfile(r=Q.r, values=-(Q.values ** 2), decay_rate=2.0 * Q.decay_rate)
    res = _pair_residuals(Q.r, Q.values, N.values, omega, eta, Q.dr)
    return ProfilePair(P=Q, N=N, omega=omega, eta=eta, residual_norms=res)


# ---------------------------------------------------------------------------
# profile solver: fixed point of (N-solve, P-relax) on Q's radial grid

def _radial_lap_banded(nq, dr, r):
    """Tridiagonal radial Laplacian with parity at r=0 and Dirichlet at r_max.

    Returns (lower, diag, upper) arrays of length nq; the last row is the
    identity (boundary condition row).
    """
    lower = np.zeros(nq)
    diag = np.zeros(nq)
    upper = np.zeros(nq)
    inv2 = 1.0 / (dr * dr)
    diag[0] = -4.0 * inv2        # lap f(0) ~ 4 (f1 - f0)/dr^2
    upper[0] = 4.0 * inv2
    i = np.arange(1, nq - 1)
    lower[i] = inv2 - 1.0 / (2.0 * dr * r[i])
    diag[i] = -2.0 * inv2
    upper[i] = inv2 + 1.0 / (2.0 * dr * r[i])
    diag[nq - 1] = 1.0
    return lower, diag, upper


def _banded_solve(lower, diag, upper, rhs):
    nq = diag.size
    ab = np.zeros((3, nq))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs)


def _apply_tridiag(lower, diag, upper, v):
    out = diag * v
    out[:-1] += upper[:-1] * v[1:]
    out[1:] += lower[1:] * v[:-1]
    return out


def solve_profile(omega: float, eta: float, Q: RadialProfile,
                  tol: float = 1e-8, max_iter: int = 80) -> ProfilePair:
    """Fixed-point solve of the profile system on Q's radial grid.

    Alternates a banded linear solve of the second equation for N (given P)
    with damped Newton steps on the first equation for P (given N), seeded
    from the limit shapes.  The P Jacobian carries the leading N response
    dN/dP ~ -2P so that only the O(1/omega^2) remainder lags behind; the N
    update is under-relaxed when the plain alternation oscillates, retrying
    with factors 1, 1/2, 1/4.  residual_norms are the max-norm defects of
    this finite-difference discretization; convergence is not guaranteed
    for small omega and failure is reported rather than silently absorbed.
    """
    if not (math.isfinite(omega) and omega > 0.0):
        raise DomainError(f"omega must be positive and finite, got {omega!r}")
    if not (math.isfinite(eta) and eta > 0.0):
        raise DomainError(f"eta must be positive, got {eta!r}")
    if not 0.0 < tol < 1.0:
        raise DomainError(f"tol must lie in (0, 1), got {tol!r}")

    r, dr = Q.r, Q.dr
    nq = r.size
    low, dia, upp = _radial_lap_banded(nq, dr, r)
    inv_w2 = 1.0 / (omega * omega)

    # wave-side operator (1/w^2)(r^2 D2 + 6 r D1 + 6 I) - lap, same stencils
    wl = np.zeros(nq)
    wd = np.zeros(nq)
    wu = np.zeros(nq)
    inv2 = 1.0 / (dr * dr)
    i = np.arange(1, nq - 1)
    wl[i] = inv_w2 * (r[i] ** 2 * inv2 - 6.0 * r[i] / (2.0 * dr)) - low[i]
    wd[i] = inv_w2 * (-2.0 * r[i] ** 2 * inv2 + 6.0) - dia[i]
    wu[i] = inv_w2 * (r[i] ** 2 * inv2 + 6.0 * r[i] / (2.0 * dr)) - upp[i]
    # r = 0 row: r^2 D2 and 6 r D1 vanish, parity Laplacian survives
    wd[0] = inv_w2 * 6.0 - dia[0]
    wu[0] = -upp[0]
    wd[nq - 1] = 1.0
    wl[nq - 1] = 0.0

    frac = eta / (eta + 1.0)

    def eq1_defect(pv, nv):
        out = _apply_tridiag(low, dia, upp, pv) - pv + frac * pv ** 3 - nv * pv / (eta + 1.0)
        out[-1] = pv[-1]  # boundary row enforces decay
        return out

    def eq2_defect(pv, nv):
        rhs = _apply_tridiag(low, dia, upp, pv * pv)
        rhs[-1] = 0.0
        return _apply_tridiag(wl, wd, wu, nv) - rhs

    def n_of(pv):
        rhs = _apply_tridiag(low, dia, upp, pv * pv)
        rhs[-1] = 0.0
        return _banded_solve(wl, wd, wu, rhs)

    def attempt(relax):
        p = Q.values.copy()
        n = n_of(p)
        res1 = res2 = math.inf
        for sweep in range(max_iter):
            f = eq1_defect(p, n)
            res1 = float(np.max(np.abs(f)))
            if res1 >= tol:
                jl = low.copy()
                jd = dia - 1.0 + 3.0 * frac * p ** 2 - (n - 2.0 * p * p) / (eta + 1.0)
                ju = upp.copy()
                jd[-1] = 1.0
                jl[-1] = 0.0
                ju[-1] = 0.0
                try:
                    delta = _banded_solve(jl, jd, ju, -f)
                except Exception as exc:
                    raise SolverFailure(f"linearized profile solve failed: {exc}",
                                        {"omega": omega, "res1": res1}) from exc
                # descent is judged with the N response included: the
                # Jacobian above targets the reduced system, not eq1 at
                # frozen N, and the two disagree by O(P^2) terms
                alpha = 1.0
                while alpha >= 1.0 / 32.0:
                    cand = p + alpha * delta
                    if float(np.max(np.abs(eq1_defect(cand, n_of(cand))))) < res1:
                        break
                    alpha *= 0.5
                else:
                    raise SolverFailure(
                        "profile iteration stagnated (no descent direction)",
                        {"omega": omega, "res1": res1, "relax": relax})
                p = cand
            n = n + relax * (n_of(p) - n)
            res1 = float(np.max(np.abs(eq1_defect(p, n))))
            res2 = float(np.max(np.abs(eq2_defect(p, n))))
            if not (math.isfinite(res1) and math.isfinite(res2)):
                raise SolverFailure("profile iteration diverged",
                                    {"omega": omega, "res1": res1, "res2": res2})
            if res1 < tol and res2 < tol:
                return p, n, res1, res2
        raise SolverFailure(
            f"profile iteration did not reach tol = {tol:g} in {max_iter} sweeps",
            {"omega": omega, "res1": res1, "res2": res2, "relax": relax})

    failure = None
    for relax in (1.0, 0.5, 0.25):
        try:
            p, n, res1, res2 = attempt(relax)
            break
        except SolverFailure as exc:
            failure = exc
    else:
        raise failure

    profile_p = RadialProfile(r=r, values=p, decay_rate=Q.decay_rate)
    profile_n = RadialProfile(r=r, values=n, decay_rate=2.0 * Q.decay_rate)
    return ProfilePair(P=profile_p, N=profile_n, omega=omega, eta=eta,
                       residual_norms=(res1, res2))


# ---------------------------------------------------------------------------
# explicit solutions

@dataclass(frozen=True, eq=False)
class ExplicitSolution:
    """A profile pair promoted to a collapsing solution with time T and phase theta."""

    profile: ProfilePair
    T: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0.0):
            raise DomainError(f"T must be positive and finite, got {self.T!r}")
        if not math.isfinite(self.profile.omega):
            raise DomainError("explicit solutions need a finite-omega profile pair")
        if not math.isfinite(self.theta):
            raise DomainError(f"theta must be finite, got {self.theta!r}")


def _geometry(sol: ExplicitSolution, t: float, grid: Grid2D, center):
    if not t < sol.T:
        raise DomainError(f"t = {t!r} is not before the collapse time T = {sol.T!r}")
    cx, cy = (0.5 * grid.L, 0.5 * grid.L) if center is None else center
    rr = np.hypot(grid.xs - cx, grid.ys - cy)
    mu = sol.profile.omega / (sol.T - t)
    return rr, mu


def evaluate(sol: ExplicitSolution, t: float, grid: Grid2D, center=None) -> SystemState:
    """Sample the closed-form state at time t on the grid.

    v is reconstructed spectrally as the curl-free mean-free solution of
    div v = -dn/dt with the analytic dn/dt of the family.
    """
    rr, mu = _geometry(sol, t, grid, center)
    pair = sol.profile
    eta, omega = pair.eta, pair.omega
    tm = sol.T - t
    s = mu * rr

    half_width = 1.176 / mu  # P falls to half its peak near mu r = 1.18
    if half_width < 3.0 * grid.dx:
        warnings.warn(
            f"profile half-width {half_width:.3g} under 3 grid cells "
            f"(dx = {grid.dx:.3g})", ResolutionWarning, stacklevel=2)

    p_t = pair.P(s) / math.sqrt(eta + 1.0)
    n_t = pair.N(s) / (eta + 1.0)
    phase = sol.theta - rr * rr / (4.0 * tm) + omega * omega / tm
    e1 = (mu / math.sqrt(2.0)) * p_t * np.exp(1j * phase)
    e2 = -1j * e1
    n = mu * mu * n_t

    dn = _dn_dt(pair, s, mu)
    vx, vy = _velocity_from(dn, grid)
    return SystemState(E1=ComplexField2D(grid, e1), E2=ComplexField2D(grid, e2),
                       n=RealField2D(grid, n), v=VectorField2D(grid, vx, vy),
                       t=max(t, 0.0))


def _dn_dt(pair: ProfilePair, s, mu):
    """Analytic dn/dt = (mu^3/omega) (2 Ntilde + s Ntilde') at s = mu r."""
    scale = mu ** 3 / (pair.omega * (pair.eta + 1.0))
    return scale * (2.0 * pair.N(s) + s * pair.N.derivative(s))


def _velocity_from(dn, grid):
    """Solve div v = -dn for the curl-free mean-free v: vhat = i k dnhat/|k|^2."""
    g = grid
    dnh = np.fft.fft2(dn)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_k2 = np.where(g.k_sq > 0.0, 1.0 / np.where(g.k_sq > 0.0, g.k_sq, 1.0), 0.0)
    vxh = 1j * g.kx * dnh * inv_k2
    vyh = 1j * g.ky * dnh * inv_k2
    return np.fft.ifft2(vxh).real, np.fft.ifft2(vyh).real


def time_derivatives_of(sol: ExplicitSolution, t: float, grid: Grid2D,
                        center=None) -> TimeDerivatives:
    """Analytic time derivatives of the family's fields, for residual checks."""
    rr, mu = _geometry(sol, t, grid, center)
    pair = sol.profile
    eta, omega = pair.eta, pair.omega
    tm = sol.T - t
    s = mu * rr
    rt = math.sqrt(eta + 1.0)

    p_t = pair.P(s) / rt
    dp_t = pair.P.derivative(s) / rt
    phase = sol.theta - rr * rr / (4.0 * tm) + omega * omega / tm
    eip = np.exp(1j * phase)
    amp = (mu / math.sqrt(2.0)) * p_t
    damp = (mu * mu / (omega * math.sqrt(2.0))) * (p_t + s * dp_t)
    dphase = (omega * omega - rr * rr / 4.0) / (tm * tm)
    de1 = (damp + 1j * dphase * amp) * eip
    de2 = -1j * de1

    dn = _dn_dt(pair, s, mu)
    # d2n/dt2 = (mu^4/omega^2)(6 Nt + 6 s Nt' + s^2 Nt'') at s = mu r
    scale = mu ** 4 / (omega * omega * (eta + 1.0))
    d2n = scale * (6.0 * pair.N(s) + 6.0 * s * pair.N.derivative(s)
                   + s * s * pair.N.derivative(s, order=2))
    dvx, dvy = _velocity_from(d2n, grid)
    return TimeDerivatives(dE1=de1, dE2=de2, dn=dn, dvx=dvx, dvy=dvy)


# ---------------------------------------------------------------------------
# rate identities

@dataclass(frozen=True, eq=False)
class ScalingReport:
    """Rows (t, (T-t)||grad E1||, (T-t)||grad E2||, (T-t)||n||, (T-t)||v||)."""

    times: np.ndarray
    table: np.ndarray
    grad_norms_equal: bool

    def column_spread(self, j: int) -> float:
        """max/min - 1 along column j of the table (0-based, excludes t)."""
        col = self.table[:, j + 1]
        return float(np.max(col) / np.min(col) - 1.0)


def scaling_check(sol: ExplicitSolution, times, grid: Grid2D) -> ScalingReport:
    """Tabulate (T-t) * norms across times; all columns should be flat.

    Sampling parallelizes across times (MZK_THREADS caps the pool); results
    are ordered by the input sequence, so output does not depend on the
    worker count.
    """
    ts = [float(t) for t in times]
    if not ts:
        raise DomainError("need at least one sample time")
    if any(t >= sol.T for t in ts):
        raise DomainError("all sample times must precede T")

    def row(t):
        st = evaluate(sol, t, grid)
        g1 = gradient_norm_sq(st.E1)
        g2 = gradient_norm_sq(st.E2)
        tm = sol.T - t
        return (t, tm * math.sqrt(g1), tm * math.sqrt(g2),
                tm * math.sqrt(l2_norm_sq(st.n)),
                tm * math.sqrt(vector_l2_norm_sq(st.v)), g1 == g2)

    workers = min(worker_count(), len(ts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, ts))
    else:
        rows = [row(t) for t in ts]
    table = np.array([r[:5] for r in rows])
    equal = all(r[5] for r in rows)
    return ScalingReport(times=np.array(ts), table=table, grad_norms_equal=equal)
