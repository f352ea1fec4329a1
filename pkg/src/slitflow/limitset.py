"""Probe times along the ray and projective ratio / decay reports.

At level n the even convergent curves of all tori get short at roughly the
same time; probes sample the midpoint t_n of the window spanned by their
balanced times and assemble the pants system {alpha_2n^i} + {beta^i} there.
Length ratios of test curves computed through the pants estimator are then
compared against the projective target built from the level's integer tuple
u_n and the foliation normalizers: w_n^i = u_n^i sqrt(1 + (theta^i)^2).

Convergence is always reported as finite-sample trends: a sequence "reaches"
a target when the last value is within tolerance and the absolute gaps are
non-increasing over the final three samples.  Exact-arithmetic legs
(intersection numbers, denominator ratios) carry zero tolerance.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from mpmath import mp

from . import numeric
from .geodesic import (
    balanced_time,
    collar_width,
    extremal_estimate,
    hyperbolic_surrogate,
    pants_length_estimate,
    shortest_torus_curve,
    standard_pants,
    RELIABLE_EXT_CEILING,
)
from .numeric import Enclosure, enclosure_sum
from .surface import (
    BoundaryCurve,
    BridgeCurve,
    Curve,
    SlitSurface,
    TorusCurve,
)


class InvalidTestCurveError(ValueError):
    """A test curve of the wrong kind was passed to a report."""


class IncompletePanelError(ValueError):
    """The sweep panel leaves some torus without a test curve."""


# -- trend acceptance semantics -------------------------------------------------

def trend_reached(values: Sequence[float], target: float, tol: float) -> bool:
    """Finite-sample reading of 'tends to target'.

    True when the final value is within tol of the target and the absolute
    gaps are non-increasing over the final three samples.
    """
    gaps = [abs(v - target) for v in values]
    if not gaps:
        return False
    tail_ok = True
    if len(gaps) >= 3:
        tail_ok = gaps[-2] <= gaps[-3] and gaps[-1] <= gaps[-2]
    return gaps[-1] <= tol and tail_ok


# -- probe times ------------------------------------------------------------------

@dataclass(frozen=True)
class SampleTime:
    level: int
    time: Enclosure                       # midpoint of the window
    window: tuple[Enclosure, Enclosure]
    spread: Enclosure                     # max_ij |t_2n^i - t_2n^j|
    per_torus: tuple[Enclosure, ...]      # balanced times t_2n^i
    close_ratios: tuple[Enclosure, ...]   # e^{2|t_n - t_2n^i|} / log a_{2n+1}^i


def sample_time(surface: SlitSurface, n: int) -> SampleTime:
    """Level-n probe time: the midpoint of [min_i t_2n^i, max_i t_2n^i]."""
    times = tuple(balanced_time(surface, surface.convergent_curve(i, 2 * n))
                  for i in range(surface.d + 1))
    low = times[0]
    high = times[0]
    for t in times[1:]:
        if t.hi < low.hi:
            low = t
        if t.lo > high.lo:
            high = t
    mid = (low + high) / 2
    spread = high - low
    ratios = []
    for i, t in enumerate(times):
        log_a = numeric.log(Enclosure.from_int(
            surface.expansion(i).coeff(2 * n + 1)))
        ratios.append(numeric.exp(2 * abs(mid - t)) / log_a)
    return SampleTime(level=n, time=mid, window=(low, high), spread=spread,
                      per_torus=times, close_ratios=tuple(ratios))


@dataclass(frozen=True)
class LimitProbe:
    """One level's pants system with reliability and collar data."""

    level: int
    sample: SampleTime
    pants: tuple[Curve, ...]
    pants_ext: tuple[Enclosure, ...]
    widths: tuple[Enclosure, ...]         # collar widths of the alpha curves
    collar_gap: float                     # max_ij |width^i / width^j - 1|
    reliable: bool


_probe_memo = weakref.WeakKeyDictionary()


def build_probe(surface: SlitSurface, n: int) -> LimitProbe:
    memo = _probe_memo.setdefault(surface, {})
    key = (n, numeric.precision_epoch())
    hit = memo.get(key)
    if hit is not None:
        return hit
    probe = _build_probe(surface, n)
    memo[key] = probe
    return probe


def _build_probe(surface: SlitSurface, n: int) -> LimitProbe:
    sample = sample_time(surface, n)
    pants = tuple(standard_pants(surface, n))
    exts = []
    reliable = True
    for curve in pants:
        est = extremal_estimate(surface, curve, sample.time)
        exts.append(est.value)
        if not (est.reliable and est.value.hi <= RELIABLE_EXT_CEILING):
            reliable = False
    widths = tuple(collar_width(surface, surface.convergent_curve(i, 2 * n),
                                sample.time).value
                   for i in range(surface.d + 1))
    gap = 0.0
    for i in range(len(widths)):
        for j in range(len(widths)):
            if i != j:
                gap = max(gap, abs(float(widths[i] / widths[j]) - 1.0))
    return LimitProbe(level=n, sample=sample, pants=pants,
                      pants_ext=tuple(exts), widths=widths,
                      collar_gap=gap, reliable=reliable)


# -- projective ratio report -------------------------------------------------------

@dataclass(frozen=True)
class RatioRow:
    level: int
    time: Enclosure
    lhs: Enclosure            # pants-estimate ratio, width-only variant
    lhs_twist: Enclosure      # width + unit-constant twist variant
    mid_logged: Enclosure     # intersection sums weighted by log a_{2n+1}
    mid_plain: Fraction       # bare intersection sums, exact
    rhs: Enclosure            # projective target from (w_n^i, foliation)
    reliable: bool

    @property
    def lhs_rhs_gap(self) -> float:
        return abs(float(self.lhs / self.rhs) - 1.0)

    @property
    def lhs_mid_gap(self) -> float:
        return abs(float(self.lhs / self.mid_logged) - 1.0)

    @property
    def mid_rhs_gap(self) -> float:
        return abs(float(self.mid_logged / self.rhs) - 1.0)


def _check_test_curve(c: Curve) -> None:
    if isinstance(c, BoundaryCurve):
        raise InvalidTestCurveError("dividing curves cannot serve as test curves")


def ratio_report(surface: SlitSurface, gamma1: Curve, gamma2: Curve,
                 levels: Sequence[int]) -> list[RatioRow]:
    """Three-way length-ratio comparison per probe level.

    lhs: ratio of pants length estimates at t_n.  mid: ratio of intersection
    sums against the level's even convergent curves (logged and plain).
    rhs: ratio of the projective targets sum_i w_n^i I(gamma, nu^i).
    """
    _check_test_curve(gamma1)
    _check_test_curve(gamma2)
    rows = []
    for n in levels:
        probe = build_probe(surface, n)
        t = probe.sample.time
        est1 = pants_length_estimate(surface, gamma1, t, probe.pants)
        est2 = pants_length_estimate(surface, gamma2, t, probe.pants)
        lhs = est1.width_only / est2.width_only
        lhs_twist = est1.with_twist / est2.with_twist

        alphas = [surface.convergent_curve(i, 2 * n) for i in range(surface.d + 1)]
        i1 = [surface.intersection_number(gamma1, a) for a in alphas]
        i2 = [surface.intersection_number(gamma2, a) for a in alphas]
        logs = [numeric.log(Enclosure.from_int(
            surface.expansion(i).coeff(2 * n + 1))) for i in range(surface.d + 1)]
        mid_logged = (enclosure_sum(c * L for c, L in zip(i1, logs))
                      / enclosure_sum(c * L for c, L in zip(i2, logs)))
        mid_plain = Fraction(sum(i1), sum(i2))

        u = surface.family.u(n)
        weights = [u[i] * surface.foliation_normalizer(i)
                   for i in range(surface.d + 1)]
        rhs_num = enclosure_sum(
            w * surface.foliation_intersection(gamma1, i)
            for i, w in enumerate(weights))
        rhs_den = enclosure_sum(
            w * surface.foliation_intersection(gamma2, i)
            for i, w in enumerate(weights))
        rhs = rhs_num / rhs_den

        rows.append(RatioRow(level=n, time=t, lhs=lhs, lhs_twist=lhs_twist,
                             mid_logged=mid_logged, mid_plain=mid_plain,
                             rhs=rhs, reliable=probe.reliable))
    return rows


# -- dividing-curve decay report ------------------------------------------------------

@dataclass(frozen=True)
class BetaDecayRow:
    time: Enclosure
    crossing_number: int          # I(gamma, beta^i), constant 2
    beta_width_only: Enclosure    # I * width(beta)
    beta_with_twist: Enclosure    # I * (width + unit-constant bound)
    alpha_curve: TorusCurve
    alpha_contribution: Enclosure
    ratio: float                  # beta (width-only) over alpha contribution
    beta_over_log_t: float
    reliable: bool


@dataclass(frozen=True)
class BetaDecayReport:
    gamma: BridgeCurve
    rows: list[BetaDecayRow]
    alpha_slope: float            # least-squares slope of alpha contribution vs t

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.rows]


def beta_decay_report(surface: SlitSurface, gamma: BridgeCurve,
                      levels: Optional[Sequence[int]] = None,
                      times: Optional[Sequence] = None) -> BetaDecayReport:
    """Contribution of the crossed dividing curve vs the current shortest curve.

    Sampled by default at the balanced times of the crossed torus's convergent
    curves.  The ratio column must trend to 0; the alpha contributions must
    grow (fitted slope positive), the shape of the lower bound 'at least
    linear in t'.
    """
    if not isinstance(gamma, BridgeCurve):
        raise InvalidTestCurveError("decay report needs a curve crossing one dividing curve")
    i = gamma.torus
    beta = BoundaryCurve(i)
    if times is None:
        if levels is None:
            levels = range(2, surface.expansion(i).depth)
        times = [balanced_time(surface, surface.convergent_curve(i, n))
                 for n in levels]
    rows = []
    ts, ys = [], []
    for t in times:
        t = numeric.as_enclosure(t)
        cross = surface.intersection_number(gamma, beta)
        wb = collar_width(surface, beta, t)
        beta_w = cross * wb.value
        beta_tw = cross * (wb.value + 1)
        alpha = shortest_torus_curve(surface, i, t)
        wa = collar_width(surface, alpha, t)
        inter = surface.intersection_number(gamma, alpha)
        alpha_contrib = inter * wa.value
        ratio = float(mp.mpf(beta_w.mid) / mp.mpf(alpha_contrib.mid))
        over_log = float(beta_w.mid / mp.log(mp.mpf(t.mid))) if float(t) > 1 else float("nan")
        rows.append(BetaDecayRow(time=t, crossing_number=cross,
                                 beta_width_only=beta_w, beta_with_twist=beta_tw,
                                 alpha_curve=alpha, alpha_contribution=alpha_contrib,
                                 ratio=ratio, beta_over_log_t=over_log,
                                 reliable=wb.reliable and wa.reliable))
        ts.append(mp.mpf(t.mid))
        ys.append(mp.mpf(alpha_contrib.mid))
    slope = _mp_slope(ts, ys)
    return BetaDecayReport(gamma=gamma, rows=rows, alpha_slope=slope)


def _mp_slope(xs, ys) -> float:
    """Least-squares slope sign-safe for astronomically large values."""
    n = len(xs)
    if n < 2:
        return float("nan")
    xbar = sum(xs) / n
    ybar = sum(ys) / n
    num = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    den = sum((x - xbar) ** 2 for x in xs)
    slope = num / den
    if slope > mp.mpf(10) ** 300:
        return float("inf")
    if slope < -mp.mpf(10) ** 300:
        return float("-inf")
    return float(slope)


# -- simplex sweep ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    level: int
    curve: TorusCurve
    empirical: Enclosure      # normalized pants-estimate weight
    target: Enclosure         # normalized projective target weight
    reliable: bool


def simplex_sweep(surface: SlitSurface, panel: Sequence[TorusCurve],
                  levels: Sequence[int]) -> list[SweepRow]:
    """Empirical vs target projective weight vectors over a curve panel.

    Both vectors are normalized to sum to 1; the empirical point should track
    the moving target point as the levels walk the dense tuple sequence.
    """
    if not panel:
        raise IncompletePanelError("empty curve panel")
    covered = set()
    for c in panel:
        if not isinstance(c, TorusCurve):
            raise InvalidTestCurveError("sweep panels take torus curves only")
        covered.add(c.torus)
    missing = set(range(surface.d + 1)) - covered
    if missing:
        raise IncompletePanelError(f"panel misses tori {sorted(missing)}")

    rows = []
    for n in levels:
        probe = build_probe(surface, n)
        t = probe.sample.time
        emp = [pants_length_estimate(surface, c, t, probe.pants).width_only
               for c in panel]
        u = surface.family.u(n)
        weights = [u[i] * surface.foliation_normalizer(i)
                   for i in range(surface.d + 1)]
        tgt = [enclosure_sum(w * surface.foliation_intersection(c, i)
                             for i, w in enumerate(weights))
               for c in panel]
        emp_total = enclosure_sum(emp)
        tgt_total = enclosure_sum(tgt)
        for c, e, g in zip(panel, emp, tgt):
            rows.append(SweepRow(level=n, curve=c,
                                 empirical=e / emp_total, target=g / tgt_total,
                                 reliable=probe.reliable))
    return rows
