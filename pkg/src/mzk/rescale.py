"""Space-time rescaling of states and verification of its exact identities.

With lam = (||grad E1||^2 + ||grad E2||^2 + ||n||^2/2 + ||v||^2/2)^(1/2),
the transform

    E~(x) = E(x/lam)/lam,  n~(x) = n(x/lam)/lam^2,  v~(x) = v(x/lam)/lam^2

on a periodic box rebooks the side as L -> lam L.  Grid nodes map
index-to-index under x -> x/lam, so no interpolation happens: the arrays
are scaled in place and only the grid metadata changes.  This keeps the
identities exact to roundoff: the transformed state has unit energy
seminorm when lam is its own, mass is preserved, and the Hamiltonian
scales as 1/lam^2.

In rescaled time s = lam * (t' - t) the fields satisfy the same system
with an extra 1/lam on the i d/ds terms of the two field equations; that
system is verified a posteriori on transformed snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import TimeDerivatives, energy_seminorm, residual, residual_norms
from .errors import DegenerateStateError, DomainError
from .fields import (ComplexField2D, Grid2D, RealField2D, SystemState,
                     VectorField2D)


@dataclass(frozen=True, eq=False)
class RescaledState:
    """A transformed snapshot: fields plus (base time, rescaled time, scale)."""

    state: SystemState
    base_t: float
    s: float
    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise DomainError(f"lambda must be positive, got {self.lam!r}")
        if not (math.isfinite(self.base_t) and math.isfinite(self.s)):
            raise DomainError("base_t and s must be finite")
        if self.s < 0.0:
            raise DomainError(f"rescaled time must be nonnegative, got {self.s!r}")


def lambda_of(state: SystemState) -> float:
    """Scale factor lambda; rejects states with zero energy seminorm."""
    lam = energy_seminorm(state)
    if not lam > 0.0:
        raise DegenerateStateError("state has zero energy seminorm; "
                                   "the rescaling is undefined")
    return lam


def rescale_state(state: SystemState, lam: float) -> SystemState:
    """Apply the scaling with factor lam; the box side becomes lam * L."""
    if not (math.isfinite(lam) and lam > 0.0):
        raise DomainError(f"lam must be positive and finite, got {lam!r}")
    g = state.grid
    if lam == 1.0:
        return state
    new_grid = Grid2D(nx=g.nx, ny=g.ny, L=lam * g.L,
                      dealias_fraction=g.dealias_fraction)
    inv = 1.0 / lam
    inv2 = inv * inv
    return SystemState(
        E1=ComplexField2D(new_grid, state.E1.values * inv),
        E2=ComplexField2D(new_grid, state.E2.values * inv),
        n=RealField2D(new_grid, state.n.values * inv2),
        v=VectorField2D(new_grid, state.v.x * inv2, state.v.y * inv2),
        t=state.t)


def rescaled_window(states, base_index: int = 0) -> list:
    """Transform a run of snapshots with the scale of the base snapshot.

    All snapshots share lam = lambda_of(states[base_index]); rescaled times
    are s = lam * (t - base_t), so the window samples the transformed
    system at one frozen scale.
    """
    states = list(states)
    if not states:
        raise DomainError("need at least one snapshot")
    if not 0 <= base_index < len(states):
        raise DomainError(f"base_index {base_index} out of range")
    base = states[base_index]
    lam = lambda_of(base)
    out = []
    for st in states:
        s = lam * (st.t - base.t)
        if s < 0.0:
            raise DomainError("snapshots must not precede the base snapshot")
        out.append(RescaledState(state=rescale_state(st, lam),
                                 base_t=base.t, s=s, lam=lam))
    return out


def rescaled_residual(window, eta: float) -> tuple[float, float, float, float]:
    """L2 defects of the transformed system on >= 3 equally spaced snapshots.

    d/ds is centered at the middle snapshot; the 1/lam factor on the two
    i d/ds field terms is folded into the supplied derivatives.
    """
    window = list(window)
    if len(window) < 3 or len(window) % 2 == 0:
        raise DomainError("need an odd number (>= 3) of rescaled snapshots")
    lam = window[0].lam
    base_t = window[0].base_t
    for w in window:
        if w.lam != lam or w.base_t != base_t:
            raise DomainError("window mixes different base snapshots")
    ds = np.diff([w.s for w in window])
    if not np.all(ds > 0.0) or not np.allclose(ds, ds[0], rtol=1e-9, atol=0.0):
        raise DomainError("rescaled times must be strictly increasing and "
                          "uniformly spaced")
    mid = len(window) // 2
    lo, hi = window[mid - 1].state, window[mid + 1].state
    h = window[mid + 1].s - window[mid - 1].s
    de1 = (hi.E1.values - lo.E1.values) / h
    de2 = (hi.E2.values - lo.E2.values) / h
    dn = (hi.n.values - lo.n.values) / h
    dvx = (hi.v.x - lo.v.x) / h
    dvy = (hi.v.y - lo.v.y) / h
    td = TimeDerivatives(dE1=de1 / lam, dE2=de2 / lam, dn=dn, dvx=dvx, dvy=dvy)
    return residual_norms(residual(window[mid].state, eta, time_derivatives=td))
