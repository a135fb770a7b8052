"""Pure numpy implementation of the pointwise coupling substep.

The compiled twin in _kernels.pyx mirrors the floating-point operation
order of this module expression by expression, so both backends produce
bit-identical output.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _rhs(a, b, n, two_eta):
    # dE1/dt = -i n E1 - 2 eta m E2,  dE2/dt = -i n E2 + 2 eta m E1,
    # with m = Im(E1 conj E2); the coupling reduces to a real rotation rate.
    m = a.imag * b.real - a.real * b.imag
    c = two_eta * m
    fa = -1j * (n * a) - c * b
    fb = -1j * (n * b) + c * a
    return fa, fb


def coupling_substep(e1, e2, n, eta, dt, nsub):
    """Advance the frozen-n pointwise coupling by RK4 with nsub substeps.

    Returns (E1', E2', drift_rho, drift_m): new arrays plus the max-norm
    drift of the pointwise invariants rho = |E1|^2 + |E2|^2 and
    m = Im(E1 conj E2) across the whole substep.
    """
    a, b = e1, e2
    rho0 = ((a.real ** 2 + a.imag ** 2) + b.real ** 2) + b.imag ** 2
    m0 = a.imag * b.real - a.real * b.imag
    two_eta = 2.0 * eta
    h = dt / nsub
    hh = 0.5 * h
    h6 = h / 6.0
    for _ in range(nsub):
        k1a, k1b = _rhs(a, b, n, two_eta)
        k2a, k2b = _rhs(a + hh * k1a, b + hh * k1b, n, two_eta)
        k3a, k3b = _rhs(a + hh * k2a, b + hh * k2b, n, two_eta)
        k4a, k4b = _rhs(a + h * k3a, b + h * k3b, n, two_eta)
        a = a + h6 * (((k1a + 2.0 * k2a) + 2.0 * k3a) + k4a)
        b = b + h6 * (((k1b + 2.0 * k2b) + 2.0 * k3b) + k4b)
    rho1 = ((a.real ** 2 + a.imag ** 2) + b.real ** 2) + b.imag ** 2
    m1 = a.imag * b.real - a.real * b.imag
    drift_rho = float(np.max(np.abs(rho1 - rho0)))
    drift_m = float(np.max(np.abs(m1 - m0)))
    return a, b, drift_rho, drift_m
