"""Flow analytics: balanced times, length surrogates, widths, twists, pants sums.

The length ladder goes flat -> extremal -> hyperbolic.  Extremal length of a
torus curve is estimated by the reciprocal of its flat-cylinder modulus (the
cylinder dominates once the curve is short); for a dividing curve the
one-sided expanding-annulus modulus log((l_alpha - l_beta) / (2 l_beta))
takes over.  Hyperbolic lengths are never computed exactly: the extremal
estimate stands in for them, and it is flagged `reliable` only in the short
regime (Ext <= 0.1) where Maskit's two-sided comparison pins the hyperbolic
length within fixed multiplicative bounds.

Twist bounds follow the two-regime estimate along the flow: before the
balanced time |twist| <= c/Hyp, after it twist overshoots by the cylinder
pairing number.  The curve-dependent constant c is NOT computable; every
twist output here is a per-unit-constant bound and is reported separately
from width-only sums so the constant sensitivity stays visible.
"""

from __future__ import annotations

import csv
import io
import weakref
from dataclasses import dataclass
from typing import Optional, Sequence

from . import numeric
from .contfrac import InsufficientDepthError
from .numeric import Enclosure, as_enclosure
from .surface import (
    BoundaryCurve,
    BridgeCurve,
    Curve,
    SlitSurface,
    TorusCurve,
    UnsupportedCurveError,
)

# Maskit comparability ceiling: surrogates with Ext above this are excluded
# from verification statistics and flagged in reports.
RELIABLE_EXT_CEILING = 0.1

_ext_memo = weakref.WeakKeyDictionary()


@dataclass(frozen=True)
class SurrogateValue:
    value: Enclosure
    reliable: bool


@dataclass(frozen=True)
class WidthValue:
    value: Enclosure
    asymptote: Enclosure      # 2*log(4/Hyp), the additive-error form
    reliable: bool


@dataclass(frozen=True)
class TwistData:
    pairing: Enclosure        # leaf-crossing count surrogate: cylinder modulus at balance
    bound_before: Enclosure   # per-unit-constant bound, t before balance
    bound_after: Enclosure    # per-unit-constant bound, t after balance
    after_balance: bool


@dataclass(frozen=True)
class ActiveInterval:
    """Times where the curve's flat length is below 2."""

    curve: TorusCurve
    lower: Enclosure
    balanced: Enclosure
    upper: Enclosure
    # (balanced - lower) - log(a_next)/2 when the curve is a convergent
    log_coeff_offset: Optional[Enclosure] = None


def balanced_time(surface: SlitSurface, c: TorusCurve) -> Enclosure:
    """The unique time where horizontal and vertical lengths agree.

    t = (1/2) log(v_0 / h_0); the flat length is minimal there.
    """
    if not isinstance(c, TorusCurve):
        raise UnsupportedCurveError("balanced time is defined for torus curves")
    h0, v0 = surface.components0(c)
    return numeric.log(v0 / h0) / 2


def active_interval(surface: SlitSurface, c: TorusCurve) -> Optional[ActiveInterval]:
    """Solve flat length = 2 exactly (quadratic in e^{2t}); None if min >= 2.

    With A = v_0^2 and B = h_0^2 the roots of B x^2 - 4x + A are
    x = (2 +- sqrt(4 - AB)) / B; the lower root is evaluated in the stable
    form A / (2 + sqrt(4 - AB)).  The two roots are symmetric about the
    balanced time.
    """
    h0, v0 = surface.components0(c)
    A = v0 ** 2
    B = h0 ** 2
    disc = 4 - A * B
    if not disc.is_positive:
        return None
    root = numeric.sqrt(disc)
    x_hi = (2 + root) / B
    x_lo = A / (2 + root)
    lower = numeric.log(x_lo) / 2
    upper = numeric.log(x_hi) / 2
    t_bal = balanced_time(surface, c)
    offset = None
    n = surface.convergent_index(c.torus, c.p, c.q)
    if n is not None and 0 <= n < surface.expansion(c.torus).depth:
        half_log_a = numeric.log(
            Enclosure.from_int(surface.expansion(c.torus).coeff(n + 1))) / 2
        offset = (t_bal - lower) - half_log_a
    return ActiveInterval(curve=c, lower=lower, balanced=t_bal, upper=upper,
                          log_coeff_offset=offset)


def shortest_torus_curve(surface: SlitSurface, i: int, t) -> TorusCurve:
    """Flat-shortest curve on torus i at time t, among convergent curves.

    The flat-shortest simple closed curve on a torus with irrational vertical
    slope is always a convergent curve, so scanning the family's table
    suffices; tests cross-check against exhaustive search over a (p, q) box.
    """
    t = as_enclosure(t)
    e = surface.expansion(i)
    deepest = e.depth - 1
    if deepest < 0:
        raise InsufficientDepthError(f"torus {i} carries no usable convergents")
    last = surface.convergent_curve(i, deepest)
    window = active_interval(surface, last)
    horizon = window.upper if window is not None else balanced_time(surface, last)
    if not t.certainly_lt(horizon):
        raise InsufficientDepthError(
            f"time {float(t):.6g} is beyond the depth-{deepest} horizon of torus {i}")
    best = None
    best_len = None
    for n in range(-1, deepest + 1):
        curve = surface.convergent_curve(i, n)
        length = surface.flat_length(curve, t)
        if best_len is None or length.hi < best_len.hi:
            best, best_len = curve, length
    return best


def extremal_estimate(surface: SlitSurface, c: Curve, t) -> SurrogateValue:
    """Extremal-length estimate from flat annuli.

    Torus curve: reciprocal of the flat-cylinder modulus, Ext = l_t^2 / area
    (for a degenerate cylinder the unslit value l_t^2 is returned, flagged
    unreliable).  Dividing curve: reciprocal of the expanding-annulus log
    estimate; flagged unreliable when the log argument cannot be certified
    above 1.
    """
    t = as_enclosure(t)
    memo = _ext_memo.setdefault(surface, {})
    key = (c, t.ival._mpi_, numeric.precision_epoch())
    hit = memo.get(key)
    if hit is not None:
        return hit
    value = _extremal_estimate(surface, c, t)
    memo[key] = value
    return value


def _extremal_estimate(surface: SlitSurface, c: Curve, t: Enclosure) -> SurrogateValue:
    if isinstance(c, TorusCurve):
        geom = surface.cylinder_geometry(c, t)
        if geom.degenerate:
            return SurrogateValue(value=geom.core_length ** 2, reliable=False)
        return SurrogateValue(value=geom.core_length ** 2 / geom.area, reliable=True)
    if isinstance(c, BoundaryCurve):
        alpha = shortest_torus_curve(surface, c.torus, t)
        la = surface.flat_length(alpha, t)
        lb = surface.flat_length(c, t)
        arg = (la - lb) / (2 * lb)
        if not arg.resolves_above(1):
            return SurrogateValue(value=Enclosure.from_int(1), reliable=False)
        return SurrogateValue(value=1 / numeric.log(arg), reliable=True)
    raise UnsupportedCurveError(f"no extremal estimate for {c!r}")


def hyperbolic_surrogate(surface: SlitSurface, c: Curve, t) -> SurrogateValue:
    """Extremal estimate standing in for hyperbolic length.

    Reliable only in the short regime Ext <= 0.1 where the two lengths are
    comparable with fixed constants; the value itself is always the extremal
    estimate, never a claimed exact hyperbolic length.
    """
    ext = extremal_estimate(surface, c, t)
    short = ext.value.hi <= RELIABLE_EXT_CEILING
    return SurrogateValue(value=ext.value, reliable=ext.reliable and short)


def width_from_hyp(hyp: Enclosure) -> Enclosure:
    """Collar-lemma width 2 asinh(1/sinh(Hyp/2)) of a hyperbolic length."""
    return 2 * numeric.asinh(1 / numeric.sinh(hyp / 2))


def width_asymptote(hyp: Enclosure) -> Enclosure:
    """-2 log(Hyp) + 2 log 4: the additive form the exact width approaches."""
    return 2 * numeric.log(4 / hyp)


def collar_width(surface: SlitSurface, c: Curve, t) -> WidthValue:
    """Collar width of the curve's length surrogate at time t."""
    hyp = hyperbolic_surrogate(surface, c, t)
    return WidthValue(value=width_from_hyp(hyp.value),
                      asymptote=width_asymptote(hyp.value),
                      reliable=hyp.reliable)


def twist_data(surface: SlitSurface, c: Curve, t) -> TwistData:
    """Per-unit-constant twist bounds about c at time t.

    The pairing surrogate (max crossings of horizontal and vertical leaves in
    the flat cylinder) is the cylinder modulus at the balanced time; dividing
    curves have no flat cylinder, so their pairing is 0 and the bound is flat
    in t.
    """
    t = as_enclosure(t)
    hyp = hyperbolic_surrogate(surface, c, t)
    recip = 1 / hyp.value
    if isinstance(c, BoundaryCurve):
        zero = Enclosure.zero()
        return TwistData(pairing=zero, bound_before=recip, bound_after=recip,
                         after_balance=False)
    if not isinstance(c, TorusCurve):
        raise UnsupportedCurveError(f"no twist data for {c!r}")
    t_bal = balanced_time(surface, c)
    geom = surface.cylinder_geometry(c, t_bal)
    pairing = geom.modulus if not geom.degenerate else Enclosure.zero()
    after = t_bal.certainly_lt(t)
    return TwistData(pairing=pairing, bound_before=recip,
                     bound_after=pairing + recip, after_balance=after)


# -- pants-decomposition length estimator -------------------------------------

@dataclass(frozen=True)
class PantsContribution:
    curve: Curve
    intersections: int
    width: Enclosure
    twist_term: Enclosure     # per-unit-constant bound for twist * Hyp
    reliable: bool


@dataclass(frozen=True)
class PantsEstimate:
    """Length of a transversal as a sum of per-collar contributions."""

    width_only: Enclosure
    with_twist: Enclosure
    error_budget: int         # sum of intersection numbers (the O-term scale)
    reliable: bool
    contributions: tuple[PantsContribution, ...]


def pants_length_estimate(surface: SlitSurface, gamma: Curve, t,
                          pants: Sequence[Curve]) -> PantsEstimate:
    """Sum over pants curves of I(gamma, alpha) * (width + twist term).

    Two variants are produced: width-only, and width plus the bounded twist
    term with unit constant.  The error budget (sum of intersection numbers)
    is reported alongside, never folded in.
    """
    t = as_enclosure(t)
    rows = []
    width_sum = Enclosure.zero()
    twist_sum = Enclosure.zero()
    budget = 0
    reliable = True
    for alpha in pants:
        inter = surface.intersection_number(gamma, alpha)
        width = collar_width(surface, alpha, t)
        reliable = reliable and width.reliable
        if isinstance(alpha, TorusCurve):
            tw = twist_data(surface, alpha, t)
            hyp = hyperbolic_surrogate(surface, alpha, t)
            if tw.after_balance:
                term = tw.pairing * hyp.value + 1
            else:
                term = Enclosure.from_int(1)
        else:
            term = Enclosure.from_int(1)   # pairing 0: twist*Hyp stays bounded
        rows.append(PantsContribution(curve=alpha, intersections=inter,
                                      width=width.value, twist_term=term,
                                      reliable=width.reliable))
        if inter:
            width_sum = width_sum + inter * width.value
            twist_sum = twist_sum + inter * (width.value + term)
            budget += inter
    return PantsEstimate(width_only=width_sum, with_twist=twist_sum,
                         error_budget=budget, reliable=reliable,
                         contributions=tuple(rows))


def standard_pants(surface: SlitSurface, n: int) -> list[Curve]:
    """The level-n pants system: the even convergent curve of each torus plus
    all dividing curves."""
    curves: list[Curve] = [surface.convergent_curve(i, 2 * n)
                           for i in range(surface.d + 1)]
    curves.extend(BoundaryCurve(i) for i in range(surface.d + 1))
    return curves


# -- per-curve, per-time report -------------------------------------------------

@dataclass(frozen=True)
class LengthReport:
    """Bundle of every length-type quantity for one curve at one time."""

    curve: Curve
    time: Enclosure
    flat: Enclosure
    mod_cylinder: Optional[Enclosure]
    mod_expanding: Optional[Enclosure]   # dividing curves: the log-annulus estimate
    ext: Optional[Enclosure]
    hyp: Optional[Enclosure]
    width: Optional[Enclosure]
    twist_bound: Optional[Enclosure]
    balanced: bool
    reliable: bool


def build_length_report(surface: SlitSurface, c: Curve, t) -> LengthReport:
    t = as_enclosure(t)
    flat = surface.flat_length(c, t)
    if isinstance(c, BridgeCurve):
        return LengthReport(curve=c, time=t, flat=flat, mod_cylinder=None,
                            mod_expanding=None, ext=None, hyp=None, width=None,
                            twist_bound=None, balanced=False, reliable=False)
    ext = extremal_estimate(surface, c, t)
    hyp = hyperbolic_surrogate(surface, c, t)
    width = collar_width(surface, c, t)
    tw = twist_data(surface, c, t)
    bound = tw.bound_after if tw.after_balance else tw.bound_before
    if isinstance(c, TorusCurve):
        geom = surface.cylinder_geometry(c, t)
        modF = geom.modulus if not geom.degenerate else None
        modE = None
        balanced = t.overlaps(balanced_time(surface, c))
    else:
        modF = None
        modE = 1 / ext.value if ext.reliable else None
        balanced = False
    return LengthReport(curve=c, time=t, flat=flat, mod_cylinder=modF,
                        mod_expanding=modE, ext=ext.value, hyp=hyp.value,
                        width=width.value, twist_bound=bound,
                        balanced=balanced, reliable=hyp.reliable)


CSV_HEADER = ["curve", "t", "flat", "modF", "ext", "hyp", "width",
              "twist_bound", "reliable", "enc_width"]


def report_csv_row(report: LengthReport, sig: int = 17) -> list[str]:
    def cell(x: Optional[Enclosure]) -> str:
        return "" if x is None else numeric.fmt_mid(x, sig)

    fields = [report.flat, report.mod_cylinder, report.ext, report.hyp,
              report.width, report.twist_bound]
    widths = [f.width for f in fields if f is not None] + [report.time.width]
    return [
        report.curve.literal(),
        numeric.fmt_mid(report.time, sig),
        cell(report.flat),
        cell(report.mod_cylinder),
        cell(report.ext),
        cell(report.hyp),
        cell(report.width),
        cell(report.twist_bound),
        "1" if report.reliable else "0",
        numeric.mp_str(max(widths), 3),
    ]


def reports_to_csv(reports: Sequence[LengthReport], sig: int = 17) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rep in reports:
        writer.writerow(report_csv_row(rep, sig))
    return buf.getvalue()
