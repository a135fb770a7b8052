"""Reference shooting computation for the cubic ground state.

Solves Q'' + Q'/r - Q + Q^3 = 0, Q'(0) = 0, Q(r) -> 0, with a hand-rolled
fixed-step RK4 integrator and bisection on Q(0).  Deliberately shares no
code with the package so the constants it produces are an independent
check.  Run it to regenerate frozen_values.py:

    python tests/oracles/shooting_oracle.py
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import k0, k1

R0 = 1e-6       # series start, avoids the coordinate singularity
R_END = 16.0
DR = 5e-4
R_MATCH = 11.0  # graft radius for the K0 far-field tail


# ---------------------------------------------------------------------------
# shooting

def _series_start(a):
    # Q(r) = a + (a - a^3) r^2/4 + O(r^4) near r = 0
    c = a - a ** 3
    return a + 0.25 * c * R0 * R0, 0.5 * c * R0


def _rhs(r, q, p):
    return p, q - q * q * q - p / r


def shoot(a, record=False):
    """Integrate outward from Q(0) = a.

    Returns (verdict, rs, qs, ps) where verdict is 'low' (solution turned
    back up: a below the ground state), 'high' (crossed zero: a above), or
    'flat' (no event before R_END, bracket exhausted at this resolution).
    """
    q, p = _series_start(a)
    r = R0
    n = int(round((R_END - R0) / DR))
    rs = np.empty(n + 1)
    qs = np.empty(n + 1)
    ps = np.empty(n + 1)
    rs[0], qs[0], ps[0] = r, q, p
    verdict = "flat"
    m = n
    for i in range(n):
        k1q, k1p = _rhs(r, q, p)
        k2q, k2p = _rhs(r + 0.5 * DR, q + 0.5 * DR * k1q, p + 0.5 * DR * k1p)
        k3q, k3p = _rhs(r + 0.5 * DR, q + 0.5 * DR * k2q, p + 0.5 * DR * k2p)
        k4q, k4p = _rhs(r + DR, q + DR * k3q, p + DR * k3p)
        q += DR * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
        p += DR * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        r = R0 + (i + 1) * DR
        rs[i + 1], qs[i + 1], ps[i + 1] = r, q, p
        if q <= 0.0:
            verdict, m = "high", i + 1
            break
        if p >= 0.0 and r > 1.0:
            verdict, m = "low", i + 1
            break
    if record:
        return verdict, rs[: m + 1], qs[: m + 1], ps[: m + 1]
    return verdict, None, None, None


def bisect_ground_state(lo=2.0, hi=3.0):
    assert shoot(lo)[0] == "low" and shoot(hi)[0] == "high"
    while hi - lo > 1e-15:
        mid = 0.5 * (lo + hi)
        verdict = shoot(mid)[0]
        if verdict == "high":
            hi = mid
        elif verdict == "low":
            lo = mid
        else:
            break  # unresolvable at this r_end / step size
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# quadrature: corrected trapezoid on [R0, R_MATCH] plus analytic K0 tail

def _trapz_em(rs, g):
    """Trapezoid with Euler-Maclaurin endpoint correction, uniform grid."""
    core = np.trapezoid(g, rs)
    ga = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * DR)
    gb = (3.0 * g[-1] - 4.0 * g[-2] + g[-3]) / (2.0 * DR)
    return core + DR * DR / 12.0 * (ga - gb)


def main():
    a_star = bisect_ground_state()
    _, rs, qs, ps = shoot(a_star, record=True)
    sel = rs <= R_MATCH + 1e-12
    rs, qs, ps = rs[sel], qs[sel], ps[sel]
    c_tail = qs[-1] / k0(rs[-1])

    two_pi = 2.0 * math.pi
    mass = _trapz_em(rs, two_pi * rs * qs ** 2) + math.pi * R0 ** 2 * a_star ** 2
    mass += two_pi * c_tail ** 2 * quad(lambda r: k0(r) ** 2 * r, R_MATCH, np.inf)[0]
    grad = _trapz_em(rs, two_pi * rs * ps ** 2)
    grad += two_pi * c_tail ** 2 * quad(lambda r: k1(r) ** 2 * r, R_MATCH, np.inf)[0]
    l4 = _trapz_em(rs, two_pi * rs * qs ** 4) + math.pi * R0 ** 2 * a_star ** 4
    l4 += two_pi * c_tail ** 4 * quad(lambda r: k0(r) ** 4 * r, R_MATCH, np.inf)[0]

    fit = rs >= 9.0
    decay = -np.polyfit(rs[fit], np.log(qs[fit]), 1)[0]

    print("# consistency: both should sit at rounding level")
    print(f"#   |mass - grad|/mass      = {abs(mass - grad) / mass:.3e}")
    print(f"#   |l4 - 2*mass|/l4        = {abs(l4 - 2.0 * mass) / l4:.3e}")
    print(f"#   Q(0) vs 2.20620086      = {a_star - 2.20620086:+.3e}")
    print(f"#   mass vs 11.7008         = {mass - 11.7008:+.3e}")
    print()
    print('"""Frozen ground-state constants; regenerate with shooting_oracle.py."""')
    print()
    print(f"Q0 = {a_star:.17g}")
    print(f"Q_MASS = {mass:.17g}")
    print(f"Q_GRAD_SQ = {grad:.17g}")
    print(f"Q_L4_4 = {l4:.17g}")
    print(f"Q_DECAY_RATE = {decay:.17g}")
    print(f"Q_TAIL_K0_COEF = {c_tail:.17g}")
    print(f"N0_LIMIT = {-a_star ** 2:.17g}")


if __name__ == "__main__":
    main()
