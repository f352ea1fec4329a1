"""Rigorous enclosure arithmetic on top of mpmath's interval context.

Every real-valued quantity this package reports is an Enclosure: a pair of
directed-rounded endpoints certified to contain the true value.  Exact
integers and rationals enter through `from_int` / `from_fraction`; from then
on all arithmetic is outward-rounded interval arithmetic at the working
precision, so enclosure widths are honest error bars, not estimates.

The working precision is global (mpmath keeps one interval context).  It is
set once at configuration time; callers must not change it mid-computation.
Caches keyed on enclosures should also key on `precision_epoch()`.
"""

from __future__ import annotations

from fractions import Fraction

from mpmath import iv, libmp, mp

DEFAULT_DPS = 120

_epoch = 0


def set_precision(dps: int) -> None:
    """Set the working precision (decimal digits) for all enclosure math."""
    global _epoch
    if dps < 30:
        raise ValueError("working precision below 30 digits is not supported")
    iv.dps = dps
    mp.dps = dps
    _epoch += 1


def working_dps() -> int:
    return iv.dps


def precision_epoch() -> int:
    """Bumped on every precision change; used to invalidate caches."""
    return _epoch


set_precision(DEFAULT_DPS)


class Enclosure:
    """A closed interval [lo, hi] containing one (unknown) real number."""

    __slots__ = ("ival",)

    def __init__(self, ival):
        self.ival = ival

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_int(cls, n: int) -> "Enclosure":
        lo = libmp.from_int(n, iv.prec, "f")
        hi = libmp.from_int(n, iv.prec, "c")
        return cls(iv.make_mpf((lo, hi)))

    @classmethod
    def from_fraction(cls, fr) -> "Enclosure":
        fr = Fraction(fr)
        lo = libmp.from_rational(fr.numerator, fr.denominator, iv.prec, "f")
        hi = libmp.from_rational(fr.numerator, fr.denominator, iv.prec, "c")
        return cls(iv.make_mpf((lo, hi)))

    @classmethod
    def from_endpoints(cls, lo, hi) -> "Enclosure":
        """Enclosure from exact rational/integer endpoints lo <= hi."""
        flo = Fraction(lo)
        fhi = Fraction(hi)
        if flo > fhi:
            raise ValueError("endpoints out of order")
        a = libmp.from_rational(flo.numerator, flo.denominator, iv.prec, "f")
        b = libmp.from_rational(fhi.numerator, fhi.denominator, iv.prec, "c")
        return cls(iv.make_mpf((a, b)))

    @classmethod
    def zero(cls) -> "Enclosure":
        return cls.from_int(0)


def as_enclosure(x) -> Enclosure:
    """Coerce int / Fraction / float / Enclosure to an Enclosure."""
    if isinstance(x, Enclosure):
        return x
    if isinstance(x, int):
        return Enclosure.from_int(x)
    if isinstance(x, Fraction):
        return Enclosure.from_fraction(x)
    if isinstance(x, float):
        # floats are exact binary rationals; no rounding happens here
        return Enclosure.from_fraction(Fraction(x))
    raise TypeError(f"cannot coerce {type(x).__name__} to an enclosure")


def _lift(x):
    return as_enclosure(x).ival


# -- arithmetic (all outward rounded) -------------------------------------

def _wrap(op):
    def method(self, other):
        return Enclosure(op(self.ival, _lift(other)))

    return method


def _rwrap(op):
    def method(self, other):
        return Enclosure(op(_lift(other), self.ival))

    return method


Enclosure.__add__ = _wrap(lambda a, b: a + b)
Enclosure.__radd__ = _rwrap(lambda a, b: a + b)
Enclosure.__sub__ = _wrap(lambda a, b: a - b)
Enclosure.__rsub__ = _rwrap(lambda a, b: a - b)
Enclosure.__mul__ = _wrap(lambda a, b: a * b)
Enclosure.__rmul__ = _rwrap(lambda a, b: a * b)
Enclosure.__truediv__ = _wrap(lambda a, b: a / b)
Enclosure.__rtruediv__ = _rwrap(lambda a, b: a / b)


def _neg(self):
    return Enclosure(-self.ival)


def _abs(self):
    return Enclosure(abs(self.ival))


def _pow(self, n):
    if not isinstance(n, int):
        raise TypeError("only integer powers are supported")
    return Enclosure(self.ival ** n)


Enclosure.__neg__ = _neg
Enclosure.__abs__ = _abs
Enclosure.__pow__ = _pow


# -- endpoint access -------------------------------------------------------

def _lo(self):
    return mp.make_mpf(self.ival._mpi_[0])


def _hi(self):
    return mp.make_mpf(self.ival._mpi_[1])


def _mid(self):
    return mp.make_mpf(libmp.mpi_mid(self.ival._mpi_, iv.prec))


def _width(self):
    return mp.make_mpf(libmp.mpi_delta(self.ival._mpi_, iv.prec))


Enclosure.lo = property(_lo)
Enclosure.hi = property(_hi)
Enclosure.mid = property(_mid)
Enclosure.width = property(_width)


def _float(self):
    return float(self.mid)


Enclosure.__float__ = _float


# -- certified predicates --------------------------------------------------

def contains_fraction(self, fr) -> bool:
    """True iff the exact rational fr lies inside this enclosure."""
    fr = Fraction(fr)
    point = Enclosure.from_fraction(fr)
    return self.lo <= point.lo and point.hi <= self.hi


Enclosure.contains = contains_fraction


def _resolves_above(self, c) -> bool:
    """Certified: every value in the enclosure is > c."""
    return self.lo > as_enclosure(c).hi


def _resolves_below(self, c) -> bool:
    """Certified: every value in the enclosure is < c."""
    return self.hi < as_enclosure(c).lo


def _is_positive(self) -> bool:
    return self.lo > 0


def _is_negative(self) -> bool:
    return self.hi < 0


def _straddles_zero(self) -> bool:
    return self.lo <= 0 <= self.hi


Enclosure.resolves_above = _resolves_above
Enclosure.resolves_below = _resolves_below
Enclosure.is_positive = property(_is_positive)
Enclosure.is_negative = property(_is_negative)
Enclosure.straddles_zero = property(_straddles_zero)


def _certainly_lt(self, other) -> bool:
    other = as_enclosure(other)
    return self.hi < other.lo


def _certainly_le(self, other) -> bool:
    other = as_enclosure(other)
    return self.hi <= other.lo


def _overlaps(self, other) -> bool:
    other = as_enclosure(other)
    return not (self.hi < other.lo or other.hi < self.lo)


Enclosure.certainly_lt = _certainly_lt
Enclosure.certainly_le = _certainly_le
Enclosure.overlaps = _overlaps


# -- elementary functions ---------------------------------------------------

def sqrt(x: Enclosure) -> Enclosure:
    return Enclosure(iv.sqrt(x.ival))


def exp(x: Enclosure) -> Enclosure:
    return Enclosure(iv.exp(x.ival))


def log(x: Enclosure) -> Enclosure:
    if not x.is_positive:
        raise ValueError("log of an enclosure that is not certainly positive")
    return Enclosure(iv.log(x.ival))


def log_fraction(fr) -> Enclosure:
    """log of an exact positive rational, safe for astronomically large ones."""
    fr = Fraction(fr)
    if fr <= 0:
        raise ValueError("log of a nonpositive rational")
    return log(Enclosure.from_int(fr.numerator)) - log(Enclosure.from_int(fr.denominator))


def sinh(x: Enclosure) -> Enclosure:
    """sinh with series bounds for small nonnegative arguments.

    (e^x - e^-x)/2 cancels catastrophically for tiny x; there the certified
    bounds x + x^3/6 <= sinh x <= x + x^3/6 + x^5/60 (valid on [0, 1]) keep
    the enclosure tight.
    """
    if x.lo >= 0 and x.hi <= 0.25:
        lower = x + x ** 3 / 6
        upper = lower + x ** 5 / 60
        return Enclosure(iv.make_mpf((lower.ival._mpi_[0], upper.ival._mpi_[1])))
    e = exp(x)
    out = (e - 1 / e) / 2
    if x.lo > 0 and not out.is_positive:
        out = Enclosure(iv.make_mpf((x.ival._mpi_[0], out.ival._mpi_[1])))
    return out


def cosh(x: Enclosure) -> Enclosure:
    e = exp(x)
    return (e + 1 / e) / 2


def asinh(x: Enclosure) -> Enclosure:
    return log(x + sqrt(x ** 2 + 1))


# -- formatting --------------------------------------------------------------

def fmt(x: Enclosure, sig: int = 17) -> str:
    """Deterministic 'midpoint ± width' rendering."""
    return f"{mp.nstr(x.mid, sig)} ± {mp.nstr(x.width, 3)}"


def fmt_mid(x: Enclosure, sig: int = 17) -> str:
    return mp.nstr(x.mid, sig)


def fmt_width(x: Enclosure, sig: int = 3) -> str:
    return mp.nstr(x.width, sig)


def mp_str(x, sig: int = 17) -> str:
    """Deterministic rendering of a plain mpf value."""
    return mp.nstr(x, sig)


def _repr(self):
    return f"Enclosure({fmt(self)})"


Enclosure.__repr__ = _repr
Enclosure.__str__ = _repr


def enclosure_min(values):
    """Smallest enclosure by certified comparison; ties broken by position."""
    best = None
    for v in values:
        if best is None or v.hi < best.hi:
            best = v
    return best


def enclosure_sum(values) -> Enclosure:
    total = Enclosure.zero()
    for v in values:
        total = total + v
    return total
