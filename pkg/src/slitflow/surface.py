"""The slit-torus translation surface and its curve bookkeeping.

The surface glues d+1 unit-area square tori in a cycle along vertical slits
of flat length s0.  Torus i is rotated so that its vertical foliation
direction has irrational slope theta^i taken from a SlopeFamily.  The
diagonal flow scales horizontal lengths by e^t and vertical ones by e^-t.

Curves are tracked by homotopy data only:

  * TorusCurve(i, p, q): the simple closed curve on torus i with slope p/q
    (holonomy in flow-adapted coordinates: horizontal |p - theta q| and
    vertical |q + theta p|, both over sqrt(1 + theta^2)).
  * BoundaryCurve(i): the curve around torus i's slit pair, flat length
    2 s0 e^-t (two vertical slit sides).
  * BridgeCurve(i, p, q): a curve crossing BoundaryCurve(i) exactly twice
    whose arc inside torus i runs in direction (p, q).  Its flat length is a
    documented reporting surrogate (slit crossings plus the closed-up arc),
    never used in verification suites.

Slit placement along the tori is not fixed; every quantity computed here is
placement-independent at the homotopy level.

The cylinder of a torus curve loses a parallel band of area s0 * h0 to the
slit, where h0 is the curve's time-0 horizontal length: the band swept by
the curve's direction across the slit has area |det(slit vector, unit
direction)| * core length = s0 * h0, and the unit-determinant flow preserves
this cross product, so the cylinder area 1 - s0 * h0 is time-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from . import numeric
from .contfrac import (
    CFExpansion,
    InsufficientDepthError,
    SlopeFamily,
    read_family,
    write_family,
)
from .numeric import Enclosure, as_enclosure


class UnsupportedCurveError(ValueError):
    """Operation asked for a curve kind it does not support."""


@dataclass(frozen=True)
class TorusCurve:
    """Simple closed curve of slope p/q on torus i; coprime, q >= 0."""

    torus: int
    p: int
    q: int

    def __post_init__(self):
        p, q = self.p, self.q
        if (p, q) == (0, 0):
            raise ValueError("curve (0, 0) is not a curve")
        if math.gcd(abs(p), abs(q)) != 1:
            raise ValueError(f"curve data ({p}, {q}) must be coprime")
        if q < 0 or (q == 0 and p < 0):
            object.__setattr__(self, "p", -p)
            object.__setattr__(self, "q", -q)

    def literal(self) -> str:
        return f"T {self.torus} {self.p}/{self.q}"


@dataclass(frozen=True)
class BoundaryCurve:
    """The dividing curve around torus i's slits."""

    torus: int

    def literal(self) -> str:
        return f"B {self.torus}"


@dataclass(frozen=True)
class BridgeCurve:
    """A curve crossing BoundaryCurve(torus) twice; inner arc direction (p, q)."""

    torus: int
    p: int
    q: int

    def __post_init__(self):
        if (self.p, self.q) == (0, 0):
            raise ValueError("bridge arc (0, 0) is not a direction")
        if math.gcd(abs(self.p), abs(self.q)) != 1:
            raise ValueError(f"bridge arc ({self.p}, {self.q}) must be coprime")
        if self.q < 0 or (self.q == 0 and self.p < 0):
            object.__setattr__(self, "p", -self.p)
            object.__setattr__(self, "q", -self.q)

    def literal(self) -> str:
        return f"G {self.torus} {self.p}/{self.q}"


Curve = Union[TorusCurve, BoundaryCurve, BridgeCurve]


def parse_curve(text: str) -> Curve:
    """Parse a curve literal: 'T i p/q', 'B i', or 'G i p/q'."""
    parts = text.split()
    try:
        kind = parts[0].upper()
        if kind == "B":
            return BoundaryCurve(int(parts[1]))
        num, _, den = parts[2].partition("/")
        p = int(num)
        q = int(den) if den else 1
        if kind == "T":
            return TorusCurve(int(parts[1]), p, q)
        if kind == "G":
            return BridgeCurve(int(parts[1]), p, q)
    except (IndexError, ValueError) as err:
        raise ValueError(f"bad curve literal {text!r}") from err
    raise ValueError(f"bad curve literal {text!r} (kind must be T, B, or G)")


@dataclass(frozen=True)
class FoliationWeight:
    """Per-torus transverse scale of the vertical foliation."""

    torus: int
    normalizer: Enclosure    # sqrt(1 + theta^2); intersection formulas divide by it


@dataclass(frozen=True)
class CylinderGeometry:
    """Maximal flat cylinder data of a torus curve at one time."""

    core_length: Enclosure
    height: Optional[Enclosure]
    modulus: Optional[Enclosure]
    area: Enclosure            # 1 - s0*h0, time-independent
    degenerate: bool


class SlitSurface:
    """Glued translation surface: d, slit size, slope family, curve math."""

    def __init__(self, family: SlopeFamily, s0: Fraction = Fraction(1, 100)):
        s0 = Fraction(s0)
        if not 0 < s0 < Fraction(1, 2):
            raise ValueError(f"slit size s0 = {s0} must satisfy 0 < s0 < 1/2")
        self.family = family
        self.s0 = s0
        self.d = family.d
        self.total_area = family.d + 1
        self._theta: dict[int, tuple[int, Enclosure]] = {}
        self._norm_sq: dict[int, tuple[int, Enclosure]] = {}
        self._gap: dict[tuple[int, int], tuple[int, Enclosure]] = {}
        self._comp: dict[tuple, tuple[int, tuple[Enclosure, Enclosure]]] = {}
        self._curves: dict[tuple[int, int], TorusCurve] = {}
        self._conv_index = []
        for i in range(self.d + 1):
            table = {}
            for n, pq in enumerate(family.expansion(i).convergent_pairs()):
                table[pq] = n
            table[(1, 0)] = -1
            self._conv_index.append(table)

    # -- persistence --------------------------------------------------------

    @classmethod
    def load(cls, fp) -> "SlitSurface":
        family, s0 = read_family(fp)
        return cls(family, s0 if s0 is not None else Fraction(1, 100))

    def save(self, fp) -> None:
        write_family(self.family, fp, s0=self.s0)

    # -- per-torus cached enclosures -----------------------------------------

    def _cached(self, cache, key, build):
        epoch = numeric.precision_epoch()
        hit = cache.get(key)
        if hit is not None and hit[0] == epoch:
            return hit[1]
        value = build()
        cache[key] = (epoch, value)
        return value

    def expansion(self, i: int) -> CFExpansion:
        if not 0 <= i <= self.d:
            raise ValueError(f"torus index {i} out of range 0..{self.d}")
        return self.family.expansion(i)

    def theta(self, i: int) -> Enclosure:
        """Certified enclosure of theta^i at full family depth."""
        self.expansion(i)
        return self._cached(self._theta, i, lambda: Enclosure.from_endpoints(
            *self.family.expansion(i).theta_interval()))

    def norm_sq(self, i: int) -> Enclosure:
        """1 + (theta^i)^2."""
        return self._cached(self._norm_sq, i, lambda: self.theta(i) ** 2 + 1)

    def foliation_normalizer(self, i: int) -> Enclosure:
        return numeric.sqrt(self.norm_sq(i))

    def foliation_weights(self) -> list[FoliationWeight]:
        return [FoliationWeight(i, self.foliation_normalizer(i))
                for i in range(self.d + 1)]

    def convergent_index(self, i: int, p: int, q: int) -> Optional[int]:
        """n with (p, q) = (p_n, q_n) on torus i, or None."""
        return self._conv_index[i].get((p, q))

    def convergent_curve(self, i: int, n: int) -> TorusCurve:
        key = (i, n)
        curve = self._curves.get(key)
        if curve is None:
            e = self.expansion(i)
            curve = TorusCurve(i, e.p(n), e.q(n))
            self._curves[key] = curve
        return curve

    def _convergent_gap(self, i: int, n: int) -> Enclosure:
        """|p_n - q_n theta^i| through the exact tail formula (cached)."""
        def build():
            lo, hi = self.expansion(i).gap_bounds(n)
            return Enclosure.from_endpoints(lo, hi)
        return self._cached(self._gap, (i, n), build)

    def linear_form_abs(self, i: int, x: int, y: int) -> Enclosure:
        """Certified |x + y * theta^i| for integers x, y.

        Convergent-shaped forms go through the exact continued-fraction tail,
        which resolves the catastrophic cancellation |p_n - q_n theta|; other
        forms are evaluated in interval arithmetic, with an exact rational
        fallback at full depth when the working precision cannot fix the sign.
        """
        if y == 0:
            return Enclosure.from_int(abs(x))
        if x == 0:
            return Enclosure.from_int(abs(y)) * self.theta(i)
        # x + y*theta = sign * (p - q*theta) with (p, q) = (|x|, |y|) when signs differ
        if (x > 0) != (y > 0):
            n = self.convergent_index(i, abs(x), abs(y))
            if n is not None and n >= 0:
                if n > self.expansion(i).depth - 1:
                    raise InsufficientDepthError(
                        f"deepest convergent curve needs one extra coefficient (torus {i})")
                return self._convergent_gap(i, n)
        value = Enclosure.from_int(x) + Enclosure.from_int(y) * self.theta(i)
        if not value.straddles_zero:
            return abs(value)
        # exact fallback: x + y*theta is monotone in theta
        tlo, thi = self.family.expansion(i).theta_interval()
        a = x + y * tlo
        b = x + y * thi
        if a > b:
            a, b = b, a
        if a > 0 or b < 0:
            return Enclosure.from_endpoints(min(abs(a), abs(b)), max(abs(a), abs(b)))
        raise InsufficientDepthError(
            f"cannot resolve the sign of {x} + {y}*theta^{i} at available depth")

    # -- curve components ------------------------------------------------------

    def components0(self, c: TorusCurve) -> tuple[Enclosure, Enclosure]:
        """Time-0 (horizontal, vertical) lengths of a torus curve."""
        if not isinstance(c, TorusCurve):
            raise UnsupportedCurveError(f"{c!r} is not a torus curve")

        def build():
            norm = self.foliation_normalizer(c.torus)
            h0 = self.linear_form_abs(c.torus, c.p, -c.q) / norm
            v0 = self.linear_form_abs(c.torus, c.q, c.p) / norm
            return h0, v0

        return self._cached(self._comp, (c.torus, c.p, c.q), build)

    def horizontal_vertical(self, c: TorusCurve, t) -> tuple[Enclosure, Enclosure]:
        """(h_t, v_t) = (e^t h_0, e^-t v_0)."""
        h0, v0 = self.components0(c)
        et = numeric.exp(as_enclosure(t))
        return h0 * et, v0 / et

    def flat_length(self, c: Curve, t) -> Enclosure:
        """Flat geodesic length at flow time t.

        Torus curves use sqrt(h_t^2 + v_t^2); boundary curves are exactly
        2 s0 e^-t; bridge curves get the reporting surrogate of two slit
        crossings plus the inner closed-up arc.
        """
        t = as_enclosure(t)
        if isinstance(c, TorusCurve):
            h0, v0 = self.components0(c)
            e2t = numeric.exp(t * 2)
            return numeric.sqrt(h0 ** 2 * e2t + v0 ** 2 / e2t)
        if isinstance(c, BoundaryCurve):
            self.expansion(c.torus)
            return Enclosure.from_fraction(2 * self.s0) * numeric.exp(-t)
        if isinstance(c, BridgeCurve):
            arc = self.flat_length(TorusCurve(c.torus, c.p, c.q), t)
            return Enclosure.from_fraction(2 * self.s0) * numeric.exp(-t) + arc
        raise UnsupportedCurveError(f"unknown curve {c!r}")

    # -- intersections -----------------------------------------------------------

    def intersection_number(self, c1: Curve, c2: Curve) -> int:
        """Geometric intersection number from homotopy data (exact integer)."""
        for c in (c1, c2):
            torus = c.torus
            if not 0 <= torus <= self.d:
                raise ValueError(f"curve {c!r} lives on no torus of this surface")
        return _intersection(c1, c2)

    def foliation_intersection(self, c: Curve, i: int) -> Enclosure:
        """Intersection of the curve with the vertical foliation piece on torus i."""
        self.expansion(i)
        if isinstance(c, BoundaryCurve):
            return Enclosure.zero()
        if c.torus != i:
            return Enclosure.zero()
        norm = self.foliation_normalizer(i)
        return self.linear_form_abs(i, c.p, -c.q) / norm

    # -- cylinders ------------------------------------------------------------------

    def cylinder_geometry(self, c: TorusCurve, t) -> CylinderGeometry:
        """Core length, height, modulus and area of the maximal flat cylinder."""
        if not isinstance(c, TorusCurve):
            raise UnsupportedCurveError("only torus curves carry flat cylinders here")
        h0, _ = self.components0(c)
        area = 1 - h0 * Enclosure.from_fraction(self.s0)
        core = self.flat_length(c, t)
        if not area.is_positive:
            return CylinderGeometry(core_length=core, height=None, modulus=None,
                                    area=area, degenerate=True)
        height = area / core
        return CylinderGeometry(core_length=core, height=height,
                                modulus=height / core, area=area, degenerate=False)

    def slit_ok_at(self, t) -> bool:
        """Constructive smallness check for s0 at one flow time.

        Each torus must carry a curve of flat length <= 2 whose cylinder is
        non-degenerate; candidates are the convergent curves.
        """
        for i in range(self.d + 1):
            ok = False
            for n in range(-1, self.expansion(i).depth):
                curve = self.convergent_curve(i, n)
                if not self.flat_length(curve, t).resolves_below(2):
                    continue
                if not self.cylinder_geometry(curve, t).degenerate:
                    ok = True
                    break
            if not ok:
                return False
        return True


def _det(p1: int, q1: int, p2: int, q2: int) -> int:
    return abs(p1 * q2 - q1 * p2)


def _intersection(c1: Curve, c2: Curve) -> int:
    if isinstance(c1, BoundaryCurve):
        if isinstance(c2, BridgeCurve):
            return 2 if c1.torus == c2.torus else 0
        return 0
    if isinstance(c2, BoundaryCurve):
        return _intersection(c2, c1)
    # both carry (p, q) data now
    if c1.torus != c2.torus:
        return 0
    return _det(c1.p, c1.q, c2.p, c2.q)
