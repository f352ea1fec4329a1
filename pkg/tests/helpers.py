"""Independent oracles shared by the test modules.

Everything here recomputes from first principles (grid search, exhaustive
enumeration, plain rational arithmetic) and never calls the closed-form
production paths it is used to check.
"""

from fractions import Fraction

import numpy as np
from mpmath import mp

from slitflow.contfrac import theta_enclosure


def theta_float(surface, i):
    return float(surface.theta(i))


def theta_rational(surface, i, digits=80):
    """Midpoint of a moderate-denominator rational bracket of theta^i."""
    lo, hi = theta_enclosure(surface.expansion(i), digits)
    return (lo + hi) / 2


def length_sq_curve(theta, p, q, t):
    """Squared flat length from the defining formula, any numeric type."""
    return ((q + theta * p) ** 2 / mp.e ** (2 * t)
            + (p - theta * q) ** 2 * mp.e ** (2 * t)) / (1 + theta ** 2)


def grid_argmin_balanced(surface, curve, step=1e-6):
    """Grid-search argmin of the squared-length formula, refined to `step`.

    Coarse pass over a wide window, then a fine pass at the requested step
    around the coarse minimum; the function is strictly convex in t, so the
    two-stage grid finds the global grid minimizer.
    """
    i, p, q = curve.torus, curve.p, curve.q
    theta = theta_float(surface, i)
    nsq = 1.0 + theta * theta
    A = (q + theta * p) ** 2 / nsq
    B = (p - theta * q) ** 2 / nsq
    center = 0.25 * np.log(A / B)

    def sweep(lo, hi, h):
        ts = np.arange(lo, hi + h / 2, h)
        vals = A * np.exp(-2 * ts) + B * np.exp(2 * ts)
        return ts[int(np.argmin(vals))]

    coarse = sweep(center - 4.0, center + 4.0, 1e-3)
    return float(sweep(coarse - 2e-3, coarse + 2e-3, step))


class BruteForceBox:
    """Exhaustive flat-length minimizer over coprime (p, q) with |p|,|q| <= box.

    Stage 1 scans every canonical coprime pair in float64 with certified
    slack for the cancellation-prone linear forms; stage 2 re-evaluates the
    surviving candidates in exact rational + high-precision arithmetic.
    """

    def __init__(self, box):
        self.box = box
        ps, qs = np.meshgrid(np.arange(-box, box + 1, dtype=np.int64),
                             np.arange(0, box + 1, dtype=np.int64),
                             indexing="ij")
        ps, qs = ps.ravel(), qs.ravel()
        keep = np.gcd(np.abs(ps), qs) == 1
        keep &= ~((qs == 0) & (ps != 1))
        self.p = ps[keep]
        self.q = qs[keep]

    def shortest(self, surface, i, t):
        theta = theta_float(surface, i)
        nsq = 1.0 + theta * theta
        u = self.p - theta * self.q           # horizontal form
        v = self.q + theta * self.p           # vertical form
        slack = 1e-11 * (1.0 + np.abs(self.p) + np.abs(self.q))
        u_lo = np.maximum(np.abs(u) - slack, 0.0)
        u_hi = np.abs(u) + slack
        v_lo = np.maximum(np.abs(v) - slack, 0.0)
        v_hi = np.abs(v) + slack
        e2t = float(np.exp(2 * t))
        l2_lo = (u_lo ** 2 * e2t + v_lo ** 2 / e2t) / nsq * (1 - 1e-9)
        l2_hi = (u_hi ** 2 * e2t + v_hi ** 2 / e2t) / nsq * (1 + 1e-9)
        cut = l2_hi.min()
        idx = np.nonzero(l2_lo <= cut)[0]
        assert len(idx) <= 64, "stage-1 prefilter unexpectedly loose"

        theta_star = theta_rational(surface, i)
        best_pq, best_val = None, None
        for k in idx:
            p, q = int(self.p[k]), int(self.q[k])
            uex = Fraction(p) - theta_star * q
            vex = Fraction(q) + theta_star * p
            val = (mp.mpf(uex.numerator) / mp.mpf(uex.denominator)) ** 2 * mp.e ** (2 * t) \
                + (mp.mpf(vex.numerator) / mp.mpf(vex.denominator)) ** 2 / mp.e ** (2 * t)
            if best_val is None or val < best_val:
                best_pq, best_val = (p, q), val
        return best_pq, best_val / (1 + mp.mpf(theta_star.numerator) ** 2
                                    / mp.mpf(theta_star.denominator) ** 2)
