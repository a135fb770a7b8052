# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise coupling substep.

Mirrors the floating-point operation order of _kernels_py expression by
expression (complex values are handled as interleaved re/im doubles), so
the two backends produce bit-identical results.  Build with
-ffp-contract=off so no fused multiply-adds sneak in.
"""

import numpy as np

from libc.math cimport fabs

BACKEND = "cython"


cdef inline void _rhs_pt(double ar, double ai, double br, double bi,
                         double nv, double two_eta,
                         double *far, double *fai, double *fbr, double *fbi) noexcept nogil:
    # dE1/dt = -i n E1 - c E2, dE2/dt = -i n E2 + c E1, c = 2 eta Im(E1 conj E2)
    cdef double m = ai * br - ar * bi
    cdef double c = two_eta * m
    far[0] = nv * ai - c * br
    fai[0] = -(nv * ar) - c * bi
    fbr[0] = nv * bi + c * ar
    fbi[0] = -(nv * br) + c * ai


def coupling_substep(e1, e2, n, double eta, double dt, int nsub):
    """Advance the frozen-n pointwise coupling by RK4 with nsub substeps.

    Same contract as the numpy twin: returns (E1', E2', drift_rho, drift_m).
    """
    e1c = np.ascontiguousarray(e1, dtype=np.complex128)
    e2c = np.ascontiguousarray(e2, dtype=np.complex128)
    out1 = np.empty_like(e1c)
    out2 = np.empty_like(e2c)
    cdef const double[:, ::1] av = e1c.view(np.float64)
    cdef const double[:, ::1] bv = e2c.view(np.float64)
    cdef double[:, ::1] o1 = out1.view(np.float64)
    cdef double[:, ::1] o2 = out2.view(np.float64)
    cdef const double[:, ::1] nv2 = np.ascontiguousarray(n, dtype=np.float64)

    cdef Py_ssize_t nx = nv2.shape[0], ny = nv2.shape[1], i, j
    cdef int s
    cdef double two_eta = 2.0 * eta
    cdef double h = dt / nsub
    cdef double hh = 0.5 * h
    cdef double h6 = h / 6.0
    cdef double drift_rho = 0.0, drift_m = 0.0
    cdef double ar, ai, br, bi, nv, rho0, m0, rho1, m1, d
    cdef double k1ar, k1ai, k1br, k1bi, k2ar, k2ai, k2br, k2bi
    cdef double k3ar, k3ai, k3br, k3bi, k4ar, k4ai, k4br, k4bi

    with nogil:
        for i in range(nx):
            for j in range(ny):
                ar = av[i, 2 * j]
                ai = av[i, 2 * j + 1]
                br = bv[i, 2 * j]
                bi = bv[i, 2 * j + 1]
                nv = nv2[i, j]
                rho0 = ((ar * ar + ai * ai) + br * br) + bi * bi
                m0 = ai * br - ar * bi
                for s in range(nsub):
                    _rhs_pt(ar, ai, br, bi, nv, two_eta,
                            &k1ar, &k1ai, &k1br, &k1bi)
                    _rhs_pt(ar + hh * k1ar, ai + hh * k1ai,
                            br + hh * k1br, bi + hh * k1bi, nv, two_eta,
                            &k2ar, &k2ai, &k2br, &k2bi)
                    _rhs_pt(ar + hh * k2ar, ai + hh * k2ai,
                            br + hh * k2br, bi + hh * k2bi, nv, two_eta,
                            &k3ar, &k3ai, &k3br, &k3bi)
                    _rhs_pt(ar + h * k3ar, ai + h * k3ai,
                            br + h * k3br, bi + h * k3bi, nv, two_eta,
                            &k4ar, &k4ai, &k4br, &k4bi)
                    ar = ar + h6 * (((k1ar + 2.0 * k2ar) + 2.0 * k3ar) + k4ar)
                    ai = ai + h6 * (((k1ai + 2.0 * k2ai) + 2.0 * k3ai) + k4ai)
                    br = br + h6 * (((k1br + 2.0 * k2br) + 2.0 * k3br) + k4br)
                    bi = bi + h6 * (((k1bi + 2.0 * k2bi) + 2.0 * k3bi) + k4bi)
                rho1 = ((ar * ar + ai * ai) + br * br) + bi * bi
                m1 = ai * br - ar * bi
                d = fabs(rho1 - rho0)
                if d > drift_rho:
                    drift_rho = d
                d = fabs(m1 - m0)
                if d > drift_m:
                    drift_m = d
                o1[i, 2 * j] = ar
                o1[i, 2 * j + 1] = ai
                o2[i, 2 * j] = br
                o2[i, 2 * j + 1] = bi
    return out1, out2, drift_rho, drift_m
