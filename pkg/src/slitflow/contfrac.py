"""Exact continued-fraction arithmetic and the coupled slope-family generator.

A slope is encoded by its expansion [0; a1, a2, ...] with positive integer
coefficients.  Convergents p_n/q_n obey

    p_n = a_n p_{n-1} + p_{n-2},   q_n = a_n q_{n-1} + q_{n-2},

seeded with p_{-1}=1, p_0=0, q_{-1}=0, q_0=1.  All of this is exact integer
arithmetic; real-valued outputs are rational intervals or Enclosures.

A SlopeFamily couples d+1 expansions theta^0..theta^d so that, level by
level, the even coefficients realize a prescribed projective tuple u_k and
the odd coefficients align all denominators q_{2k+1} to a common exact value.
Growth conditions per level k (checked exactly on the generated integers):

    (i)   a_{2k}^i  >  k * max(a_{2k-1}^i, u_k^0, ..., u_k^d)
    (ii)  (a_{2k}^0, ..., a_{2k}^d) = m_k * (u_k^0, ..., u_k^d)
    (iii) a_{2k+1}^i > exp(k * a_{2k}^i)          (strict mode)
          a_{2k+1}^i > (k * a_{2k}^i)^pow + a_{2k}^i   (scaled mode)
    (iv)  a_{2k+1}^i * q_{2k}^i equal for all i

Strict mode is doubly exponential and infeasible past two levels on a desk
budget; scaled mode substitutes polynomial growth so deeper levels are
reachable.  Scaled-mode asymptotic reports are heuristic and labeled so.
"""

from __future__ import annotations

import io
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from mpmath import libmp

from .numeric import Enclosure, log as enc_log

DEFAULT_BIT_BUDGET = 2 ** 20

# the construction's integers outgrow CPython's default str-conversion guard
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(max(sys.get_int_max_str_digits(), 2_000_000))


class InvalidCoefficientError(ValueError):
    """A continued-fraction coefficient is zero, negative, or not an integer."""


class InsufficientDepthError(LookupError):
    """The expansion does not carry enough coefficients for the request."""


class BudgetExceededError(RuntimeError):
    """Generation produced an integer beyond the configured bit budget."""

    def __init__(self, level: int, message: str, partial: "SlopeFamily | None" = None):
        super().__init__(message)
        self.level = level
        self.partial = partial


def _check_coeffs(coeffs: Sequence[int]) -> list[int]:
    out = []
    for j, a in enumerate(coeffs, start=1):
        if not isinstance(a, int) or isinstance(a, bool) or a < 1:
            raise InvalidCoefficientError(f"coefficient a_{j} = {a!r} must be a positive integer")
        out.append(a)
    return out


class CFExpansion:
    """One slope's coefficient list with its exact convergent table."""

    def __init__(self, coeffs: Sequence[int]):
        self._coeffs = _check_coeffs(coeffs)
        # index 0 holds n = -1, index 1 holds n = 0, index n+1 holds n
        self._p = [1, 0]
        self._q = [0, 1]
        for a in self._coeffs:
            self._p.append(a * self._p[-1] + self._p[-2])
            self._q.append(a * self._q[-1] + self._q[-2])

    @property
    def depth(self) -> int:
        return len(self._coeffs)

    @property
    def coeffs(self) -> list[int]:
        return list(self._coeffs)

    def coeff(self, j: int) -> int:
        """a_j, 1-based."""
        if not 1 <= j <= self.depth:
            raise InsufficientDepthError(f"coefficient a_{j} not available (depth {self.depth})")
        return self._coeffs[j - 1]

    def p(self, n: int) -> int:
        if not -1 <= n <= self.depth:
            raise InsufficientDepthError(f"p_{n} not available (depth {self.depth})")
        return self._p[n + 1]

    def q(self, n: int) -> int:
        if not -1 <= n <= self.depth:
            raise InsufficientDepthError(f"q_{n} not available (depth {self.depth})")
        return self._q[n + 1]

    def convergent(self, n: int) -> Fraction:
        return Fraction(self.p(n), self.q(n))

    def convergent_pairs(self) -> list[tuple[int, int]]:
        """[(p_n, q_n)] for n = 0..depth."""
        return [(self._p[n + 1], self._q[n + 1]) for n in range(self.depth + 1)]

    def extended(self, extra: Sequence[int]) -> "CFExpansion":
        return CFExpansion(self._coeffs + _check_coeffs(extra))

    # -- enclosures ---------------------------------------------------------

    def complete_quotient_bounds(self, n: int) -> tuple[Fraction, Optional[Fraction]]:
        """Exact bounds for zeta_n = [a_n; a_{n+1}, ...] given known coefficients.

        The unknown continuation beyond depth contributes a complete quotient
        in (1, oo).  Returns (lo, hi) with hi = None meaning +oo (only when
        n = depth + 1, i.e. nothing at all is known about zeta_n).
        """
        if n < 1 or n > self.depth + 1:
            raise InsufficientDepthError(f"complete quotient zeta_{n} out of range")
        if n == self.depth + 1:
            return Fraction(1), None
        # convergents of the tail [a_n; a_{n+1}, ..., a_N]
        P1, P0 = 1, 0
        Q1, Q0 = 0, 1
        for a in self._coeffs[n - 1:]:
            P1, P0 = a * P1 + P0, P1
            Q1, Q0 = a * Q1 + Q0, Q1
        # true zeta_n = (P1*z + P0)/(Q1*z + Q0) for the unknown z in (1, oo)
        end_inf = Fraction(P1, Q1)
        end_one = Fraction(P1 + P0, Q1 + Q0)
        return (end_one, end_inf) if end_one <= end_inf else (end_inf, end_one)

    def gap_bounds(self, n: int) -> tuple[Fraction, Fraction]:
        """Sharp exact bounds for |p_n - q_n*theta| from the known tail.

        Uses |p_n - q_n*theta| = 1/(q_n*zeta_{n+1} + q_{n-1}).  Requires at
        least one coefficient beyond depth n.
        """
        if n < 0 or n > self.depth - 1:
            raise InsufficientDepthError(
                f"gap at depth {n} needs coefficient a_{n + 1} (depth {self.depth})"
            )
        zlo, zhi = self.complete_quotient_bounds(n + 1)
        qn, qprev = self.q(n), self.q(n - 1)
        hi = Fraction(1, qn * zlo + qprev)
        lo = Fraction(0) if zhi is None else Fraction(1, qn * zhi + qprev)
        return lo, hi

    def theta_interval(self) -> tuple[Fraction, Fraction]:
        """Exact rational interval containing theta at max depth."""
        if self.depth < 1:
            raise InsufficientDepthError("no coefficients")
        a = self.convergent(self.depth)
        b = Fraction(self.p(self.depth) + self.p(self.depth - 1),
                     self.q(self.depth) + self.q(self.depth - 1))
        return (a, b) if a <= b else (b, a)

    def theta_enclosure_enc(self) -> Enclosure:
        lo, hi = self.theta_interval()
        return Enclosure.from_endpoints(lo, hi)


def extend_convergents(coeffs: Sequence[int], up_to: Optional[int] = None) -> CFExpansion:
    """Build the exact convergent table for the given coefficients."""
    cf = CFExpansion(coeffs)
    if up_to is not None and up_to > cf.depth:
        raise InsufficientDepthError(f"only {cf.depth} coefficients given, need {up_to}")
    return cf


def approximation_gap(cf: CFExpansion, n: int) -> tuple[Fraction, Fraction]:
    """The classical two-sided bound [1/(q_n + q_{n+1}), 1/q_{n+1}] for |p_n - q_n*theta|."""
    if n + 1 > cf.depth:
        raise InsufficientDepthError(f"gap at depth {n} needs q_{n + 1} (depth {cf.depth})")
    qn, qn1 = cf.q(n), cf.q(n + 1)
    return Fraction(1, qn + qn1), Fraction(1, qn1)


def theta_enclosure(cf: CFExpansion, precision: int) -> tuple[Fraction, Fraction]:
    """Rational interval of width < 10^-precision containing theta.

    Consecutive convergents bracket theta (even below, odd above), and the
    bracket width 1/(q_n q_{n+1}) shrinks doubly fast in n.  At the last
    available depth the bracket tightens to the full-knowledge interval
    between p_N/q_N and the mediant with its predecessor.
    """
    target = Fraction(1, 10 ** precision) if precision > 0 else Fraction(10 ** -precision)
    for n in range(cf.depth):
        width = Fraction(1, cf.q(n) * cf.q(n + 1))
        if width < target:
            if n + 1 == cf.depth:
                break   # bracket would use the last convergent: tighten below
            a, b = cf.convergent(n), cf.convergent(n + 1)
            return (a, b) if a <= b else (b, a)
    lo, hi = cf.theta_interval()
    if hi - lo < target:
        return lo, hi
    raise InsufficientDepthError(
        f"depth {cf.depth} cannot bracket theta to width 10^-{precision}"
    )


# -- dense target sequence ---------------------------------------------------

def default_dense_sequence(d: int, k: int) -> tuple[int, ...]:
    """k-th tuple of the fixed projectively dense enumeration of N^(d+1).

    Tuples are grouped by their maximum entry m = 1, 2, 3, ...; within the
    group with maximum m they are listed lexicographically.  Every tuple of
    positive integers appears exactly once, so every rational projective
    direction occurs infinitely often up to scale.
    """
    if d < 0:
        raise ValueError("d must be >= 0")
    if k < 1:
        raise ValueError("k must be >= 1")
    width = d + 1
    m = 1
    remaining = k
    while True:
        group = m ** width - (m - 1) ** width
        if remaining <= group:
            break
        remaining -= group
        m += 1
    if m == 1:
        return (1,) * width
    # lexicographic walk over {1..m}^width restricted to max == m
    count = 0
    for idx in range(m ** width):
        tup = []
        x = idx
        for _ in range(width):
            tup.append(x % m + 1)
            x //= m
        tup.reverse()
        # digits enumerated this way are lexicographic in tup
        if max(tup) == m:
            count += 1
            if count == remaining:
                return tuple(tup)
    raise AssertionError("enumeration exhausted unexpectedly")


# -- certified integer exponential bound -------------------------------------

def exp_upper_int(x: int, bit_budget: int = DEFAULT_BIT_BUDGET) -> int:
    """Smallest convenient certified integer upper bound for e^x, x >= 0."""
    if x < 0:
        raise ValueError("x must be >= 0")
    needed_bits = int(x * 1.4426950408889634) + 16
    if needed_bits > bit_budget:
        raise BudgetExceededError(
            level=-1,
            message=f"e^{x} needs ~{needed_bits} bits, over budget {bit_budget}",
        )
    prec = needed_bits + 64
    hi = libmp.mpi_exp((libmp.from_int(x), libmp.from_int(x)), prec)[1]
    # ceiling of a certified upper bound; e^x is irrational for x >= 1, so
    # the result is strictly greater than e^x
    return int(libmp.to_int(hi, "c"))


# -- slope family -------------------------------------------------------------

@dataclass(frozen=True)
class LevelAudit:
    """Per-level record of generator choices."""

    level: int
    u: tuple[int, ...]
    multiplier: int            # m_k of condition (ii)
    common_product: int        # M_k = a_{2k+1}^i * q_{2k}^i of condition (iv)
    lcm_factor: int            # c_k with M_k = lcm(q_2k^i) * c_k
    growth_bounds: tuple[int, ...]   # per-torus bound that a_{2k+1}^i had to beat
    binding_torus: int         # which torus forced c_k


MODES = ("strict", "scaled")


@dataclass
class SlopeFamily:
    """d+1 coupled expansions plus the target sequence and generation audit."""

    d: int
    expansions: list[CFExpansion]
    u_seq: list[tuple[int, ...]]
    mode: str
    growth_pow: int = 2
    bit_budget: int = DEFAULT_BIT_BUDGET
    audit: list[LevelAudit] = field(default_factory=list)

    @property
    def levels(self) -> int:
        return len(self.u_seq)

    @property
    def depth(self) -> int:
        return self.expansions[0].depth

    def expansion(self, i: int) -> CFExpansion:
        return self.expansions[i % (self.d + 1)]

    def u(self, k: int) -> tuple[int, ...]:
        if not 1 <= k <= self.levels:
            raise InsufficientDepthError(f"u_{k} not available (levels {self.levels})")
        return self.u_seq[k - 1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SlopeFamily):
            return NotImplemented
        return (self.d == other.d and self.mode == other.mode
                and self.growth_pow == other.growth_pow
                and self.bit_budget == other.bit_budget
                and self.u_seq == other.u_seq
                and [e.coeffs for e in self.expansions] == [e.coeffs for e in other.expansions])


def _growth_bound(mode: str, growth_pow: int, k: int, a2k: int,
                  bit_budget: int, level: int) -> int:
    """Integer floor for a_{2k+1}: the generator enforces a_{2k+1} >= bound.

    Strict mode: bound = certified integer upper bound for exp(k*a_{2k}),
    which is strictly above the transcendental target.  Scaled mode: bound =
    g(k, a) + 1 so that a_{2k+1} > g(k, a) holds exactly.
    """
    if mode == "strict":
        try:
            return exp_upper_int(k * a2k, bit_budget)
        except BudgetExceededError as err:
            raise BudgetExceededError(
                level=level,
                message=f"strict growth bound exp({k}*{a2k}) exceeds bit budget at level {level}",
            ) from err
    return (k * a2k) ** growth_pow + a2k + 1


def generate_slope_family(
    d: int,
    u_seq: Optional[Sequence[Sequence[int]] | Callable[[int], Sequence[int]]] = None,
    K: int = 2,
    mode: str = "scaled",
    growth_pow: int = 2,
    bit_budget: int = DEFAULT_BIT_BUDGET,
) -> SlopeFamily:
    """Generate the coupled expansions for K levels.

    Level k chooses even coefficients a_{2k}^i = m_k u_k^i with the smallest
    multiplier m_k satisfying condition (i), then odd coefficients
    a_{2k+1}^i = M_k / q_{2k}^i with M_k = lcm_i(q_{2k}^i) * c_k and the
    smallest c_k satisfying the growth condition (iii).  All conditions are
    then re-checked exactly on the produced integers.

    Raises BudgetExceededError (naming the level, carrying the partial
    family) as soon as any integer would exceed `bit_budget` bits.
    """
    if d < 0:
        raise ValueError("d must be >= 0")
    if K < 0:
        raise ValueError("K must be >= 0")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")

    def u_of(k: int) -> tuple[int, ...]:
        if u_seq is None:
            return default_dense_sequence(d, k)
        if callable(u_seq):
            tup = u_seq(k)
        else:
            if k > len(u_seq):
                raise ValueError(f"u sequence has {len(u_seq)} entries, need {K}")
            tup = u_seq[k - 1]
        tup = tuple(int(x) for x in tup)
        if len(tup) != d + 1 or any(x < 1 for x in tup):
            raise ValueError(f"u_{k} = {tup} must be {d + 1} positive integers")
        return tup

    width = d + 1
    coeffs = [[1] for _ in range(width)]         # a_1^i = 1
    used_u: list[tuple[int, ...]] = []
    audit: list[LevelAudit] = []

    def partial() -> SlopeFamily:
        return SlopeFamily(
            d=d,
            expansions=[CFExpansion(c) for c in coeffs],
            u_seq=list(used_u),
            mode=mode,
            growth_pow=growth_pow,
            bit_budget=bit_budget,
            audit=list(audit),
        )

    def guard(n: int, level: int, what: str) -> int:
        if n.bit_length() > bit_budget:
            raise BudgetExceededError(
                level=level,
                message=f"{what} needs {n.bit_length()} bits, over budget {bit_budget} "
                        f"(reached level {level})",
                partial=partial(),
            )
        return n

    for k in range(1, K + 1):
        u = u_of(k)
        tables = [CFExpansion(c) for c in coeffs]

        # condition (ii) with the smallest multiplier satisfying (i)
        big = max(max(c[-1] for c in coeffs), *u)
        m = (k * big) // min(u) + 1
        a_even = [guard(m * u[i], k, f"a_{2 * k}^{i}") for i in range(width)]
        for i in range(width):
            coeffs[i].append(a_even[i])
        q_even = [guard(a_even[i] * tables[i].q(2 * k - 1) + tables[i].q(2 * k - 2),
                        k, f"q_{2 * k}^{i}")
                  for i in range(width)]

        # condition (iv) via the lcm, with the smallest c satisfying (iii)
        L = q_even[0]
        for q in q_even[1:]:
            L = guard(L // math.gcd(L, q) * q, k, "lcm of even denominators")
        try:
            bounds = tuple(
                _growth_bound(mode, growth_pow, k, a_even[i], bit_budget, k)
                for i in range(width)
            )
        except BudgetExceededError as err:
            raise BudgetExceededError(level=k, message=str(err), partial=partial()) from err
        c = 1
        binding = 0
        for i in range(width):
            # smallest c with c * (L / q_even[i]) >= bounds[i]
            ci = -((-bounds[i] * q_even[i]) // L)
            if ci > c:
                c, binding = ci, i
        M = guard(L * c, k, f"common product M_{k}")
        a_odd = [M // q_even[i] for i in range(width)]
        for i in range(width):
            coeffs[i].append(a_odd[i])
            guard(a_odd[i] * q_even[i] + tables[i].q(2 * k - 1), k, f"q_{2 * k + 1}^{i}")

        used_u.append(u)
        audit.append(LevelAudit(
            level=k, u=u, multiplier=m, common_product=M, lcm_factor=c,
            growth_bounds=bounds, binding_torus=binding,
        ))

    fam = partial()
    check_family_conditions(fam)
    return fam


def check_family_conditions(fam: SlopeFamily) -> None:
    """Exact re-check of the seed and conditions (i)-(iv) plus odd-q equality."""
    width = fam.d + 1
    for i in range(width):
        if fam.expansion(i).coeff(1) != 1:
            raise AssertionError(f"a_1^{i} != 1")
    for k in range(1, fam.levels + 1):
        u = fam.u(k)
        ms = set()
        for i in range(width):
            e = fam.expansion(i)
            a_even, a_odd = e.coeff(2 * k), e.coeff(2 * k + 1)
            if not a_even > k * max(e.coeff(2 * k - 1), *u):
                raise AssertionError(f"condition (i) fails at level {k}, torus {i}")
            if a_even % u[i]:
                raise AssertionError(f"condition (ii) fails at level {k}, torus {i}")
            ms.add(a_even // u[i])
            if fam.mode == "strict":
                # exp(k a) < E(k a) <= a_odd gives the strict inequality exactly
                if a_odd < exp_upper_int(k * a_even, fam.bit_budget):
                    raise AssertionError(f"condition (iii) fails at level {k}, torus {i}")
            else:
                if not a_odd > (k * a_even) ** fam.growth_pow + a_even:
                    raise AssertionError(f"condition (iii) fails at level {k}, torus {i}")
        if len(ms) != 1:
            raise AssertionError(f"condition (ii) multiplier differs across tori at level {k}")
        prods = {fam.expansion(i).coeff(2 * k + 1) * fam.expansion(i).q(2 * k)
                 for i in range(width)}
        if len(prods) != 1:
            raise AssertionError(f"condition (iv) fails at level {k}")
        qs = {fam.expansion(i).q(2 * k + 1) for i in range(width)}
        if len(qs) != 1:
            raise AssertionError(f"odd denominators differ at level {k}")


# -- lemma-style verification report ------------------------------------------

@dataclass(frozen=True)
class LevelRatios:
    level: int
    odd_q_equal: bool
    even_q_ratio_gap: Fraction      # max_ij |(q^i/q^j)(u^j/u^i) - 1|, exact
    log_odd_coeff_gap: float        # max_ij |log a^i / log a^j - 1|


@dataclass(frozen=True)
class SlopesReport:
    levels: list[LevelRatios]
    qprod_bounds_ok: bool           # q_n in [prod a_j, prod a_j * prod (1+1/a_j)] exactly
    heuristic: bool                 # scaled-mode disclaimers apply

    @property
    def all_odd_equal(self) -> bool:
        return all(row.odd_q_equal for row in self.levels)

    def summary_lines(self) -> list[str]:
        tag = "heuristic (scaled mode)" if self.heuristic else "strict mode"
        out = [f"slope-family verification [{tag}]"]
        for row in self.levels:
            out.append(
                f"  level {row.level}: odd-q equal={'yes' if row.odd_q_equal else 'NO'} "
                f"even-q ratio gap={fraction_sci(row.even_q_ratio_gap)} "
                f"log-coeff gap={row.log_odd_coeff_gap:.3e}"
            )
        out.append(f"  convergent/product bounds exact: {'yes' if self.qprod_bounds_ok else 'NO'}")
        return out


def verify_lemma_slopes(fam: SlopeFamily) -> SlopesReport:
    """Exact per-level report on denominator alignment and ratio convergence."""
    width = fam.d + 1
    rows = []
    for k in range(1, fam.levels + 1):
        u = fam.u(k)
        odd_equal = len({fam.expansion(i).q(2 * k + 1) for i in range(width)}) == 1
        gap = Fraction(0)
        for i in range(width):
            for j in range(width):
                if i == j:
                    continue
                r = Fraction(fam.expansion(i).q(2 * k) * u[j],
                             fam.expansion(j).q(2 * k) * u[i])
                gap = max(gap, abs(r - 1))
        logs = [_int_log(fam.expansion(i).coeff(2 * k + 1)) for i in range(width)]
        lgap = max(abs(logs[i] / logs[j] - 1) for i in range(width) for j in range(width))
        rows.append(LevelRatios(level=k, odd_q_equal=odd_equal,
                                even_q_ratio_gap=gap, log_odd_coeff_gap=lgap))

    ok = True
    for i in range(width):
        e = fam.expansion(i)
        prod = 1
        slack_num, slack_den = 1, 1
        for n in range(1, e.depth + 1):
            a = e.coeff(n)
            prod *= a
            slack_num *= a + 1
            slack_den *= a
            qn = e.q(n)
            # prod <= q_n and q_n * slack_den <= prod * slack_num, both exact
            if not (prod <= qn and qn * slack_den <= prod * slack_num):
                ok = False
    return SlopesReport(levels=rows, qprod_bounds_ok=ok, heuristic=fam.mode == "scaled")


def _int_log(n: int) -> float:
    """Float log of a positive integer of any size."""
    bits = n.bit_length()
    shift = max(bits - 64, 0)
    return math.log(n >> shift) + shift * math.log(2)


def fraction_sci(fr: Fraction, sig: int = 3) -> str:
    """Scientific-notation rendering of an exact fraction of any magnitude."""
    if fr == 0:
        return "0"
    sign = "-" if fr < 0 else ""
    fr = abs(fr)
    exp10 = math.floor((_int_log(fr.numerator) - _int_log(fr.denominator)) / math.log(10))
    mant = fr / Fraction(10) ** exp10
    m = float(mant)
    if m >= 10.0:
        m /= 10.0
        exp10 += 1
    elif m < 1.0:
        m *= 10.0
        exp10 -= 1
    return f"{sign}{m:.{sig}f}e{exp10:+d}"


def log_coeff(fam: SlopeFamily, i: int, j: int) -> Enclosure:
    """Certified enclosure of log a_j^i (extended precision, any size)."""
    return enc_log(Enclosure.from_int(fam.expansion(i).coeff(j)))


def log_denominator(fam: SlopeFamily, i: int, n: int) -> Enclosure:
    """Certified enclosure of log q_n^i."""
    return enc_log(Enclosure.from_int(fam.expansion(i).q(n)))


# -- feasibility preflight -----------------------------------------------------

def preflight_bits(d: int, K: int, mode: str, growth_pow: int = 2,
                   u_seq=None) -> list[tuple[int, float]]:
    """Cheap per-level estimate of the largest integer's bit size.

    Works on log2 sizes only; used to refuse hopeless configurations before
    exact generation starts.
    """
    def u_of(k):
        if u_seq is None:
            return default_dense_sequence(d, k)
        return tuple(u_seq(k) if callable(u_seq) else u_seq[k - 1])

    la = [0.0] * (d + 1)          # log2 a_{odd latest}
    lq_prev = [0.0] * (d + 1)     # log2 q_{2k-1}
    lq_prev2 = [0.0] * (d + 1)
    out = []
    for k in range(1, K + 1):
        u = u_of(k)
        lm = math.log2(k + 1) + max(max(la), math.log2(max(u)))
        la_even = [lm + math.log2(ui) for ui in u]
        lq_even = [max(la_even[i] + lq_prev[i], lq_prev2[i]) + 1 for i in range(d + 1)]
        lL = sum(lq_even)  # worst case lcm
        if mode == "strict":
            if max(la_even) > 60:
                out.append((k, math.inf))
                break
            lbound = [2 ** la_even[i] * k * 1.442695 for i in range(d + 1)]
        else:
            lbound = [growth_pow * (math.log2(k) + la_even[i]) for i in range(d + 1)]
        lc = max(max(lbound[i] + lq_even[i] - lL for i in range(d + 1)), 0.0)
        lM = lL + lc
        la = [lM - lq_even[i] for i in range(d + 1)]
        lq_odd = [la[i] + lq_even[i] + 1 for i in range(d + 1)]
        biggest = max(lM, max(lq_odd))
        out.append((k, biggest))
        lq_prev, lq_prev2 = lq_odd, lq_even
    return out


# -- serialization --------------------------------------------------------------

def write_family(fam: SlopeFamily, fp, s0: Optional[Fraction] = None) -> None:
    """Line-oriented text dump; exact round-trip via read_family."""
    w = fp.write
    w(f"d={fam.d}\n")
    w(f"mode={fam.mode}\n")
    if fam.mode == "scaled":
        w(f"growth_pow={fam.growth_pow}\n")
    w(f"bit_budget={fam.bit_budget}\n")
    w(f"K={fam.levels}\n")
    if s0 is not None:
        w(f"s0={Fraction(s0)}\n")
    for k, u in enumerate(fam.u_seq, start=1):
        w("u " + str(k) + " " + " ".join(str(x) for x in u) + "\n")
    for rec in fam.audit:
        w(f"m {rec.level} {rec.multiplier}\n")
        w(f"c {rec.level} {rec.lcm_factor}\n")
    for i in range(fam.d + 1):
        for j, a in enumerate(fam.expansion(i).coeffs, start=1):
            w(f"{i} {j} {a}\n")


def family_to_text(fam: SlopeFamily, s0: Optional[Fraction] = None) -> str:
    buf = io.StringIO()
    write_family(fam, buf, s0=s0)
    return buf.getvalue()


def read_family(fp) -> tuple[SlopeFamily, Optional[Fraction]]:
    """Parse the text format back into a family (+ optional slit size)."""
    headers: dict[str, str] = {}
    u_map: dict[int, tuple[int, ...]] = {}
    m_map: dict[int, int] = {}
    c_map: dict[int, int] = {}
    coeff_map: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(fp, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and not line[0].isdigit():
            key, _, val = line.partition("=")
            headers[key.strip()] = val.strip()
            continue
        parts = line.split()
        try:
            if parts[0] == "u":
                k = int(parts[1])
                u_map[k] = tuple(int(x) for x in parts[2:])
            elif parts[0] == "m":
                m_map[int(parts[1])] = int(parts[2])
            elif parts[0] == "c":
                c_map[int(parts[1])] = int(parts[2])
            else:
                i, j, a = int(parts[0]), int(parts[1]), int(parts[2])
                coeff_map[(i, j)] = a
        except (ValueError, IndexError) as err:
            raise ValueError(f"family file line {lineno}: cannot parse {raw!r}") from err

    try:
        d = int(headers["d"])
        mode = headers["mode"]
        K = int(headers["K"])
    except KeyError as err:
        raise ValueError(f"family file missing header {err}") from err
    growth_pow = int(headers.get("growth_pow", "2"))
    bit_budget = int(headers.get("bit_budget", str(DEFAULT_BIT_BUDGET)))
    s0 = Fraction(headers["s0"]) if "s0" in headers else None

    expansions = []
    for i in range(d + 1):
        coeffs = []
        j = 1
        while (i, j) in coeff_map:
            coeffs.append(coeff_map[(i, j)])
            j += 1
        expansions.append(CFExpansion(coeffs))
    u_seq = [u_map[k] for k in range(1, K + 1)]

    audit = []
    for k in range(1, K + 1):
        if k in m_map and k in c_map:
            q_even = [expansions[i].q(2 * k) for i in range(d + 1)]
            L = q_even[0]
            for q in q_even[1:]:
                L = L // math.gcd(L, q) * q
            audit.append(LevelAudit(
                level=k, u=u_map[k], multiplier=m_map[k],
                common_product=L * c_map[k], lcm_factor=c_map[k],
                growth_bounds=(), binding_torus=-1,
            ))

    fam = SlopeFamily(d=d, expansions=expansions, u_seq=u_seq, mode=mode,
                      growth_pow=growth_pow, bit_budget=bit_budget, audit=audit)
    return fam, s0
