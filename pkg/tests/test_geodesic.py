import math
import random
from fractions import Fraction

import pytest
from mpmath import mp

import helpers
from slitflow import geodesic as geo
from slitflow import numeric
from slitflow.contfrac import InsufficientDepthError
from slitflow.numeric import Enclosure, as_enclosure
from slitflow.surface import (
    BoundaryCurve,
    BridgeCurve,
    SlitSurface,
    TorusCurve,
    UnsupportedCurveError,
)


class TestBalancedTime:
    def test_golden_curve_matches_grid_search(self, golden_surface):
        c = TorusCurve(0, 1, 1)
        closed = float(geo.balanced_time(golden_surface, c))
        grid = helpers.grid_argmin_balanced(golden_surface, c)
        assert abs(closed - grid) < 2e-6
        assert abs(closed - 0.7218) < 2e-4

    def test_slope_curve_identity(self, scaled_surface):
        # (p, q) = (0, 1): t = -log(theta)/2 and h = v there
        for i in range(3):
            c = TorusCurve(i, 0, 1)
            t = geo.balanced_time(scaled_surface, c)
            ident = numeric.log(1 / scaled_surface.theta(i)) / 2
            assert (t - ident).contains(0)
            h, v = scaled_surface.horizontal_vertical(c, t)
            assert (h / v).contains(1)

    def test_balance_identity_sampled_convergents(self, scaled_surface):
        for i in range(3):
            for n in (1, 4, 8, 12):
                c = scaled_surface.convergent_curve(i, n)
                t = geo.balanced_time(scaled_surface, c)
                h, v = scaled_surface.horizontal_vertical(c, t)
                assert (h / v).contains(1)

    def test_minimality_around_balance(self, scaled_surface):
        rng = random.Random(6)
        for _ in range(15):
            p, q = helpers_rand_coprime(rng)
            c = TorusCurve(rng.randrange(3), p, q)
            t = geo.balanced_time(scaled_surface, c)
            base = scaled_surface.flat_length(c, t)
            for delta in (Fraction(1, 100), Fraction(1, 10), 1):
                for sgn in (1, -1):
                    shifted = scaled_surface.flat_length(c, t + sgn * Fraction(delta))
                    assert base.lo <= shifted.hi

    def test_convergent_time_near_half_log_qq(self, scaled_surface):
        # additive gap to log(q_n q_{n+1})/2 bounded uniformly in n
        for i in range(3):
            e = scaled_surface.expansion(i)
            for n in range(1, e.depth - 1):
                t = geo.balanced_time(scaled_surface, scaled_surface.convergent_curve(i, n))
                proxy = numeric.log(Enclosure.from_int(e.q(n) * e.q(n + 1))) / 2
                assert abs(float(t - proxy)) < 1.0

    def test_non_torus_curve_rejected(self, scaled_surface):
        with pytest.raises(UnsupportedCurveError):
            geo.balanced_time(scaled_surface, BoundaryCurve(0))


def helpers_rand_coprime(rng, hi=30):
    while True:
        p, q = rng.randint(-hi, hi), rng.randint(0, hi)
        if (p, q) != (0, 0) and math.gcd(abs(p), q) == 1:
            return p, q


class TestActiveInterval:
    def test_roots_have_length_two(self, scaled_surface):
        for i in range(3):
            for n in (2, 5, 9):
                c = scaled_surface.convergent_curve(i, n)
                ai = geo.active_interval(scaled_surface, c)
                assert ai is not None
                assert scaled_surface.flat_length(c, ai.lower).contains(2)
                assert scaled_surface.flat_length(c, ai.upper).contains(2)

    def test_symmetry_about_balance(self, scaled_surface):
        c = scaled_surface.convergent_curve(1, 6)
        ai = geo.active_interval(scaled_surface, c)
        assert ((ai.lower + ai.upper) / 2 - ai.balanced).contains(0)
        assert float(ai.lower) <= float(ai.balanced) <= float(ai.upper)

    def test_long_curve_has_no_interval(self, scaled_surface):
        # minimum length 2 sqrt(v0 h0) > 2 for a far-from-vertical curve
        assert geo.active_interval(scaled_surface, TorusCurve(0, 3, 1)) is None

    def test_half_interval_tracks_half_log_coeff(self, scaled_surface):
        # (balanced - lower) - log(a_{n+1})/2 stays in a bounded band
        offsets = []
        for n in range(2, 11):
            ai = geo.active_interval(scaled_surface,
                                     scaled_surface.convergent_curve(0, n))
            offsets.append(float(ai.log_coeff_offset))
        assert max(offsets) - min(offsets) < 1.0
        assert all(abs(o) < 1.0 for o in offsets)


class TestShortestCurve:
    def test_balanced_time_returns_that_convergent(self, scaled_surface):
        for i in range(3):
            for n in (2, 6, 10):
                c = scaled_surface.convergent_curve(i, n)
                t = geo.balanced_time(scaled_surface, c)
                assert geo.shortest_torus_curve(scaled_surface, i, t) == c

    def test_time_zero_minimizer(self, scaled_surface):
        # brute force over |p|,|q| <= 10: the flat systole at time 0 has length 1
        box = helpers.BruteForceBox(10)
        for i in range(3):
            best_pq, best_val = box.shortest(scaled_surface, i, 0.0)
            got = geo.shortest_torus_curve(scaled_surface, i, 0.0)
            got_len = scaled_surface.flat_length(got, 0)
            assert abs(float(got_len) ** 2 - float(best_val)) < 1e-20
            assert best_pq in ((0, 1), (1, 0), (1, 1))

    def test_small_box_agreement(self, scaled_surface):
        rng = random.Random(2718)
        box = helpers.BruteForceBox(40)
        # stay below the balanced time of the deepest convergent with q <= 40
        for i in range(3):
            e = scaled_surface.expansion(i)
            n_star = max(n for n in range(e.depth) if e.q(n) <= 40)
            t_max = float(geo.balanced_time(
                scaled_surface, scaled_surface.convergent_curve(i, n_star)))
            for _ in range(6):
                t = rng.uniform(0.05, t_max)
                best_pq, best_val = box.shortest(scaled_surface, i, t)
                got = geo.shortest_torus_curve(scaled_surface, i, t)
                assert (got.p, got.q) == best_pq

    def test_beyond_horizon_raises(self, scaled_surface):
        e = scaled_surface.expansion(0)
        last = geo.balanced_time(
            scaled_surface, scaled_surface.convergent_curve(0, e.depth - 1))
        way_out = float(last) * 3
        with pytest.raises(InsufficientDepthError):
            geo.shortest_torus_curve(scaled_surface, 0, way_out)


class TestExtremal:
    def test_small_slit_limit_is_unslit_modulus(self, scaled_family):
        surf = SlitSurface(scaled_family, s0=Fraction(1, 10 ** 9))
        c = TorusCurve(0, 1, 1)
        for t in (0, Fraction(1, 2), 1):
            est = geo.extremal_estimate(surf, c, t)
            unslit = surf.flat_length(c, t) ** 2
            assert abs(float(est.value / unslit) - 1.0) < 1e-8

    def test_convergent_extremal_law(self, scaled_surface):
        # Ext * a_{n+1} stays in [1, 4] and approaches 2
        vals = []
        for n in range(1, scaled_surface.expansion(0).depth - 1):
            c = scaled_surface.convergent_curve(0, n)
            t = geo.balanced_time(scaled_surface, c)
            est = geo.extremal_estimate(scaled_surface, c, t)
            vals.append(float(est.value * scaled_surface.expansion(0).coeff(n + 1)))
        assert all(1.0 <= v <= 4.0 for v in vals)
        assert abs(vals[-1] - 2.0) < 0.2
        assert abs(vals[-2] - 2.0) < 0.2

    def test_boundary_extremal_tracks_reciprocal_log_q(self, scaled_surface):
        # Ext(beta) * log q_n within a factor-4 band over the reliable range
        products = []
        for n in range(2, scaled_surface.expansion(0).depth - 1):
            t = geo.balanced_time(scaled_surface,
                                  scaled_surface.convergent_curve(0, n))
            est = geo.hyperbolic_surrogate(scaled_surface, BoundaryCurve(0), t)
            if not est.reliable:
                continue
            logq = math.log(scaled_surface.expansion(0).q(n))
            products.append(float(est.value) * logq)
        assert products, "no reliable samples"
        assert max(products) / min(products) < 4.0

    def test_degenerate_cylinder_flagged(self, scaled_surface):
        est = geo.extremal_estimate(scaled_surface, TorusCurve(0, 151, 1), 0)
        assert not est.reliable

    def test_boundary_unreliable_when_log_argument_small(self, scaled_family):
        # a near-maximal slit leaves no room for the expanding annulus
        surf = SlitSurface(scaled_family, s0=Fraction(49, 100))
        est = geo.extremal_estimate(surf, BoundaryCurve(0), 0)
        assert not est.reliable

    def test_bridge_unsupported(self, scaled_surface):
        with pytest.raises(UnsupportedCurveError):
            geo.extremal_estimate(scaled_surface, BridgeCurve(0, 1, 1), 0)


class TestHyperbolicSurrogate:
    def test_always_positive(self, scaled_surface):
        rng = random.Random(31)
        for _ in range(20):
            p, q = helpers_rand_coprime(rng)
            c = TorusCurve(rng.randrange(3), p, q)
            val = geo.hyperbolic_surrogate(scaled_surface, c, Fraction(rng.randint(0, 40)))
            assert val.value.is_positive

    def test_reliability_threshold(self, scaled_surface):
        c = scaled_surface.convergent_curve(0, 8)
        t = geo.balanced_time(scaled_surface, c)
        short = geo.hyperbolic_surrogate(scaled_surface, c, t)
        assert short.reliable and float(short.value) < 1e-10
        long_curve = geo.hyperbolic_surrogate(scaled_surface, TorusCurve(0, 2, 1), 0)
        assert not long_curve.reliable

    def test_maskit_band_pins_surrogate(self, scaled_surface):
        # the two-sided comparison 1/pi <= Ext/Hyp <= e^{Hyp/2}/2 confines the
        # true hyperbolic length to [2 Ext/(1 + Ext), pi Ext]; the surrogate
        # must sit within a factor pi of every admissible value
        c = scaled_surface.convergent_curve(1, 9)
        t = geo.balanced_time(scaled_surface, c)
        sur = geo.hyperbolic_surrogate(scaled_surface, c, t)
        assert sur.reliable
        ext = mp.mpf(sur.value.mid)
        h_lo = 2 * ext / (1 + ext)
        h_hi = mp.pi * ext
        assert h_lo <= h_hi
        assert float(h_hi / ext) <= math.pi + 1e-12
        assert float(ext / h_lo) <= math.pi

    def test_wolpert_band_diagnostic(self, scaled_surface):
        # e^{-2|t-s|} Hyp_s <= Hyp_t <= e^{2|t-s|} Hyp_s in the reliable regime
        c = scaled_surface.convergent_curve(2, 10)
        tb = geo.balanced_time(scaled_surface, c)
        for ds, dt in ((Fraction(-3, 10), Fraction(2, 10)), (0, Fraction(1, 2))):
            s = tb + Fraction(ds)
            t = tb + Fraction(dt)
            hs = geo.hyperbolic_surrogate(scaled_surface, c, s)
            ht = geo.hyperbolic_surrogate(scaled_surface, c, t)
            assert hs.reliable and ht.reliable
            factor = math.exp(2 * abs(float(t - s)))
            assert float(ht.value) <= factor * float(hs.value) * (1 + 1e-9)
            assert float(ht.value) >= float(hs.value) / factor * (1 - 1e-9)


class TestCollarWidth:
    def test_fixed_point(self):
        # Hyp = 2 asinh(1) satisfies sinh(Hyp/2) = 1, so width = Hyp
        hyp = 2 * numeric.asinh(as_enclosure(1))
        width = geo.width_from_hyp(hyp)
        assert (width - hyp).contains(0)

    def test_exact_vs_asymptote(self):
        hyp = as_enclosure(Fraction(1, 10 ** 4))
        exact = geo.width_from_hyp(hyp)
        asym = geo.width_asymptote(hyp)
        expect = -2 * mp.log(mp.mpf(10) ** -4) + 2 * mp.log(4)
        assert abs(float(asym) - float(expect)) < 1e-12
        assert abs(float(exact) - float(asym)) < 1e-4
        assert 21.1 < float(exact) < 21.3

    def test_one_percent_agreement_when_short(self):
        for hyp_val in (Fraction(1, 100), Fraction(1, 10 ** 6)):
            hyp = as_enclosure(hyp_val)
            exact = float(geo.width_from_hyp(hyp))
            asym = float(geo.width_asymptote(hyp))
            assert abs(exact - asym) / exact < 0.01

    def test_width_tracks_log_next_coefficient(self, scaled_surface):
        # width at the balanced time over 2 log a_{n+1} approaches 1
        ratios = []
        for n in (6, 10, 14):
            c = scaled_surface.convergent_curve(0, n)
            t = geo.balanced_time(scaled_surface, c)
            w = geo.collar_width(scaled_surface, c, t)
            la = math.log(scaled_surface.expansion(0).coeff(n + 1))
            ratios.append(float(w.value) / (2 * la))
        assert all(abs(r - 1) < 0.2 for r in ratios)
        assert abs(ratios[-1] - 1) <= abs(ratios[0] - 1)


class TestTwist:
    def test_boundary_pairing_zero(self, scaled_surface):
        tw = geo.twist_data(scaled_surface, BoundaryCurve(1), 5)
        assert float(tw.pairing) == 0.0

    def test_convergent_pairing_scales_like_next_coefficient(self, scaled_surface):
        vals = []
        for n in range(3, 13, 3):
            c = scaled_surface.convergent_curve(0, n)
            tw = geo.twist_data(scaled_surface, c, geo.balanced_time(scaled_surface, c))
            coeff = Enclosure.from_int(scaled_surface.expansion(0).coeff(n + 1))
            vals.append(float(tw.pairing / coeff))
        assert max(vals) / min(vals) < 4.0

    def test_small_slit_pairing_is_reciprocal_length_squared(self, scaled_family):
        surf = SlitSurface(scaled_family, s0=Fraction(1, 10 ** 9))
        c = TorusCurve(1, 1, 1)
        t = geo.balanced_time(surf, c)
        tw = geo.twist_data(surf, c, t)
        recip = 1 / surf.flat_length(c, t) ** 2
        assert abs(float(tw.pairing / recip) - 1.0) < 1e-8

    def test_regime_split(self, scaled_surface):
        c = scaled_surface.convergent_curve(0, 8)
        tb = geo.balanced_time(scaled_surface, c)
        before = geo.twist_data(scaled_surface, c, tb - 1)
        after = geo.twist_data(scaled_surface, c, tb + 1)
        assert not before.after_balance
        assert after.after_balance
        assert float(after.bound_after) >= float(after.pairing)


class TestPants:
    def test_disjoint_transversal_vanishes(self, scaled_surface):
        pants = geo.standard_pants(scaled_surface, 3)[:2]  # tori 0 and 1 only
        est = geo.pants_length_estimate(scaled_surface, TorusCurve(2, 1, 0),
                                        geo.balanced_time(
                                            scaled_surface,
                                            scaled_surface.convergent_curve(0, 6)),
                                        pants)
        assert float(est.width_only) == 0.0
        assert est.error_budget == 0

    def test_dominant_contribution_ratio(self, scaled_surface):
        # estimate over I * 2 log a_{2n+1} tends to 1 for a torus transversal
        gamma = TorusCurve(0, 1, 0)
        ratios = []
        for n in (3, 5, 7):
            pants = geo.standard_pants(scaled_surface, n)
            t = geo.balanced_time(scaled_surface,
                                  scaled_surface.convergent_curve(0, 2 * n))
            est = geo.pants_length_estimate(scaled_surface, gamma, t, pants)
            inter = scaled_surface.intersection_number(
                gamma, scaled_surface.convergent_curve(0, 2 * n))
            la = numeric.log(Enclosure.from_int(
                scaled_surface.expansion(0).coeff(2 * n + 1)))
            ratios.append(float(est.width_only / (inter * 2 * la)))
        assert all(abs(r - 1) < 0.2 for r in ratios)
        assert abs(ratios[-1] - 1) <= abs(ratios[0] - 1)

    def test_boundary_only_contribution_sublogarithmic(self, scaled_surface):
        # a bridge's beta term grows like log log a, so over log a it dies
        gamma = BridgeCurve(0, 1, 1)
        vals = []
        for n in (3, 5, 7):
            t = geo.balanced_time(scaled_surface,
                                  scaled_surface.convergent_curve(0, 2 * n))
            beta_est = geo.pants_length_estimate(scaled_surface, gamma, t,
                                                 [BoundaryCurve(0)])
            la = math.log(scaled_surface.expansion(0).coeff(2 * n + 1))
            vals.append(float(beta_est.width_only) / la)
        assert vals[0] > vals[1] > vals[2]

    def test_budget_counts_intersections(self, scaled_surface):
        gamma = TorusCurve(1, 1, 0)
        pants = geo.standard_pants(scaled_surface, 2)
        est = geo.pants_length_estimate(
            scaled_surface, gamma,
            geo.balanced_time(scaled_surface, scaled_surface.convergent_curve(1, 4)),
            pants)
        expected = sum(scaled_surface.intersection_number(gamma, a) for a in pants)
        assert est.error_budget == expected
        assert float(est.with_twist) >= float(est.width_only)


class TestLengthReport:
    def test_report_fields_torus(self, scaled_surface):
        c = scaled_surface.convergent_curve(0, 6)
        t = geo.balanced_time(scaled_surface, c)
        rep = geo.build_length_report(scaled_surface, c, t)
        assert rep.balanced and rep.reliable
        assert rep.mod_cylinder is not None and rep.mod_expanding is None
        assert (rep.ext - rep.hyp).contains(0)

    def test_report_fields_boundary(self, scaled_surface):
        t = geo.balanced_time(scaled_surface, scaled_surface.convergent_curve(0, 8))
        rep = geo.build_length_report(scaled_surface, BoundaryCurve(0), t)
        assert not rep.balanced
        assert rep.mod_cylinder is None and rep.mod_expanding is not None

    def test_csv_shape(self, scaled_surface):
        t = geo.balanced_time(scaled_surface, scaled_surface.convergent_curve(0, 4))
        reps = [geo.build_length_report(scaled_surface, c, t)
                for c in (TorusCurve(0, 1, 0), BoundaryCurve(0), BridgeCurve(0, 1, 1))]
        text = geo.reports_to_csv(reps)
        lines = text.strip().splitlines()
        assert lines[0].split(",") == geo.CSV_HEADER
        assert len(lines) == 4
        bridge_line = lines[3].split(",")
        assert bridge_line[0] == "G 0 1/1"
        assert bridge_line[4] == ""   # no extremal estimate for bridges
