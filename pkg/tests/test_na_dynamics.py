import math
import random
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from henonlab.complex_dynamics import Region
from henonlab.errors import InsufficientPrecision, InvalidRadius, TropicalTie
from henonlab.laurent import ORD_INF, LaurentPoly, TruncatedSeries
from henonlab.na_dynamics import (NAPoint, NAStatus, ValPoint, certified_escape, gauss_green, na_apply,
                                  na_apply_inverse, na_classify, na_filtration_check, na_green_max,
                                  na_green_minus, na_green_plus, na_norm, na_val, sample_valpoints,
                                  tropical_core, tropical_orbit, tropical_step)

from families import HORSESHOE, POLE_A, UNIFORMITY_FAMILIES, ZERO_A, family

# p = x^2 + x + 1, a = 1: every coefficient order is 0
UNITS = family(2, [{0: 1}, {0: 1}], {0: 1}, "units")
# p = x^2 + x + 1, a = t
A_ORDER_ONE = family(2, [{0: 1}, {0: 1}], {1: 1}, "a_order_one")
# p = x^2, a = 1
MONIC = family(2, [{}, {}], {0: 1}, "monic")

T = LaurentPoly.monomial(1)


class TestNorm:
    def test_pole(self):
        p = NAPoint.from_laurent(LaurentPoly.monomial(-1), LaurentPoly(), r=0.5)
        assert na_norm(p) == 2

    def test_unit(self):
        p = NAPoint.from_laurent(1 + T, T * T, r=0.5)
        assert na_norm(p) == 1
        assert na_val(p) == ValPoint(0, 2)

    def test_unknown_order(self):
        p = NAPoint(TruncatedSeries({}, 3), TruncatedSeries({5: 1}, 9))
        with pytest.raises(InsufficientPrecision):
            na_norm(p)

    def test_unknown_order_dominated(self):
        # x = O(t^3) cannot beat |y| = r^2
        p = NAPoint(TruncatedSeries({}, 3), TruncatedSeries({2: 1}, 9))
        assert na_norm(p) == 0.25

    def test_both_unknown_rejected(self):
        with pytest.raises(InsufficientPrecision):
            NAPoint(TruncatedSeries({}, 3), TruncatedSeries({}, 3))


class TestApply:
    def test_degree_growth(self):
        p = NAPoint.from_laurent(LaurentPoly.monomial(-1), LaurentPoly(), r=0.5)
        q = na_apply(MONIC, p)
        assert q.x.to_poly() == LaurentPoly.monomial(-2)
        assert na_norm(q) == 4

    def test_integral_point_stays_integral(self):
        fam = family(2, [{0: 3, 1: 1}, {2: 1}], {0: 1, 1: 2})
        q = na_apply(fam, NAPoint.from_laurent(T, T * T))
        v = na_val(q)
        assert v.u >= 0 and v.v >= 0

    def test_inverse_undoes_forward(self):
        p = NAPoint.from_laurent(LaurentPoly({-1: 2, 0: 1}), LaurentPoly({1: 3}))
        for fam in (POLE_A, ZERO_A, A_ORDER_ONE):
            back = na_apply_inverse(fam, na_apply(fam, p))
            assert back.x.agrees_with(p.x)
            assert back.y.agrees_with(p.y)


class TestTropicalStep:
    orders = UNITS.orders()

    def test_escaping(self):
        assert tropical_step(ValPoint(-1, 0), self.orders) == ValPoint(-2, -1)

    def test_tie(self):
        with pytest.raises(TropicalTie) as info:
            tropical_step(ValPoint(0, 0), self.orders)
        assert info.value.value == 0
        assert len(info.value.terms) == 4

    def test_inverse_on_v_minus(self):
        assert tropical_step(ValPoint(0, -3), A_ORDER_ONE.orders(), inverse=True) == ValPoint(-3, -7)

    def test_infinite_orders(self):
        # x = 0 exactly: only the constant and a y terms remain
        assert tropical_step(ValPoint(ORD_INF, -2), self.orders) == ValPoint(-2, ORD_INF)

    def test_orbit_stops_at_tie(self):
        orbit, tie = tropical_orbit(UNITS, ValPoint(1, 1), 5)
        # (1, 1) -> (0, 1) by the constant term; then x^2, a_1 x and a_2 tie at order 0
        assert orbit == [ValPoint(1, 1), ValPoint(0, 1)]
        assert tie is not None

    def test_inverse_of_image_cancels(self):
        # (-3, -1) -> (-6, -3); going back, y^2 and x both have order -6 because
        # the leading terms of p(y) - x cancel, so the valuation step cannot invert
        img = tropical_step(ValPoint(-3, -1), UNITS.orders())
        assert img == ValPoint(-6, -3)
        with pytest.raises(TropicalTie) as info:
            tropical_step(img, UNITS.orders(), inverse=True)
        assert set(info.value.terms) == {"y^2", "x"}


class TestClassify:
    orders = UNITS.orders()

    def test_regions(self):
        assert na_classify(ValPoint(-2, -1), -1, self.orders) == Region.VPlus
        assert na_classify(ValPoint(-1, -2), -1, self.orders) == Region.VMinus
        assert na_classify(ValPoint(0, 0), -1, self.orders) == Region.W

    def test_radius_must_exceed_coefficients(self):
        with pytest.raises(InvalidRadius):
            na_classify(ValPoint(0, 0), 0, self.orders)
        with pytest.raises(InvalidRadius):
            na_classify(ValPoint(0, 0), -1, POLE_A.orders())


class TestGreen:
    def test_escaped_at_start(self):
        p = NAPoint.from_laurent(LaurentPoly.monomial(-1), LaurentPoly(), r=0.5)
        g = na_green_plus(UNITS, p)
        assert g.status is NAStatus.Exact
        assert g.escape == 0
        assert g.q == 1
        assert g.value(0.5) == pytest.approx(math.log(2))

    def test_integral_point(self):
        p = NAPoint.from_laurent(1 + T, T)
        g = na_green_plus(UNITS, p)
        assert g.status is NAStatus.BoundedToBudget
        assert g.q == 0

    def test_invariance(self):
        p = NAPoint.from_laurent(LaurentPoly({-1: 1, 0: 2}), LaurentPoly({-1: 3}))
        g0 = na_green_plus(UNITS, p)
        g1 = na_green_plus(UNITS, na_apply(UNITS, p))
        assert g0.status is NAStatus.Exact
        assert g1.q == 2 * g0.q

    def test_minus_invariance(self):
        w = ValPoint(0, -3)
        g0 = na_green_minus(A_ORDER_ONE, w)
        g1 = na_green_minus(A_ORDER_ONE, tropical_step(w, A_ORDER_ONE.orders(), inverse=True))
        # -(-3) + 1/(2-1) = 4, and 8 after one inverse step
        assert g0.q == 4
        assert g1.q == 8

    def test_max_status(self):
        g = na_green_max(UNITS, ValPoint(-1, 0))
        assert g.q == 1
        assert g.status is NAStatus.Exact
        # backward: (-1, 0) -> (0, -1), in V- at step 1 with q = 1/2
        gm = na_green_minus(UNITS, ValPoint(-1, 0))
        assert (gm.q, gm.escape) == (Fraction(1, 2), 1)

    def test_serialization(self):
        g = na_green_plus(UNITS, ValPoint(Fraction(-1, 2), 0))
        # (-1/2, 0) -> (-1, -1/2), in V+ at step 1
        assert g.to_json() == {"q": [1, 2], "status": "Exact", "escape": 1}
        assert ValPoint.from_json(ValPoint(Fraction(-1, 3), ORD_INF).to_json()) == ValPoint(Fraction(-1, 3), ORD_INF)

    def test_negative_budget(self):
        with pytest.raises(ValueError):
            na_green_plus(UNITS, ValPoint(0, 0), budget=-1)

    def test_gauss_point_at_tie(self):
        q, later = gauss_green(UNITS, ValPoint(0, 0))
        assert q is None

    def test_precision_doubles_on_cancellation(self):
        # x^2 - t^-2 cancels the leading terms of x = t^-1 + O(t^63)
        x = LaurentPoly({-1: 1, 5: 1})
        p = NAPoint.from_laurent(x, LaurentPoly(), rel_prec=2)
        g = na_green_plus(HORSESHOE, p)
        assert g.status is NAStatus.Exact


class TestFiltration:
    @pytest.mark.parametrize("fam", UNIFORMITY_FAMILIES + (UNITS, HORSESHOE), ids=lambda f: f.name)
    def test_random_sample(self, fam):
        sample = sample_valpoints(random.Random(5), 2000, -6, 6)
        report = na_filtration_check(fam, sample, rng=random.Random(1))
        assert report.ok, report.violations[:3]
        assert sum(report.checked.values()) >= 2000

    def test_ties_fall_back_to_exact(self):
        report = na_filtration_check(UNITS, [ValPoint(0, 0), ValPoint(-1, -1)])
        assert report.ties_resolved >= 1
        assert report.ok

    def test_v_minus_is_only_checked_backward(self):
        report = na_filtration_check(UNITS, [ValPoint(0, -3)])
        assert report.checked["V- -> V- (inverse)"] == 1
        assert report.checked["V+ -> V+"] == 0


class TestCore:
    def test_horseshoe_core(self):
        grid = [ValPoint(Fraction(i, 4), Fraction(j, 4)) for i in range(-12, 5) for j in range(-12, 5)]
        assert tropical_core(HORSESHOE, grid) == [ValPoint(-1, -1)]

    def test_certified_escape(self):
        assert certified_escape(UNITS, ValPoint(-1, 0))
        assert not certified_escape(UNITS, ValPoint(1, 1))


def random_point(rng, u, v):
    def coord(o):
        lead = Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 5))
        return LaurentPoly({o: lead, o + 1: Fraction(rng.randint(-5, 5))})
    return NAPoint.from_laurent(coord(u), coord(v))


orders_st = st.integers(-4, 4)


class TestProperties:
    @given(orders_st, orders_st, st.integers(0, 10 ** 6))
    @settings(max_examples=80, deadline=None)
    def test_ultrametric_exactness(self, u, v, seed):
        rng = random.Random(seed)
        fam = UNIFORMITY_FAMILIES[seed % 3]
        w = ValPoint(u, v)
        try:
            expected = tropical_step(w, fam.orders())
        except TropicalTie:
            assume(False)
        assert na_val(na_apply(fam, random_point(rng, u, v))) == expected

    @given(orders_st, orders_st, st.integers(0, 10 ** 6))
    @settings(max_examples=40, deadline=None)
    def test_constancy_after_escape(self, u, v, seed):
        rng = random.Random(seed)
        fam = POLE_A
        p = random_point(rng, u, v)
        g = na_green_plus(fam, p)
        assume(g.status is NAStatus.Exact)
        q = p
        for _ in range(g.escape):
            q = na_apply(fam, q)
        d = fam.d
        for k in range(6):
            assert Fraction(-q.x.order, d ** (g.escape + k)) == g.q
            # on V+ the norm is raised exactly to the d-th power
            nxt = na_apply(fam, q)
            assert min(nxt.x.order, nxt.y.order) == d * min(q.x.order, q.y.order)
            q = nxt

    @given(orders_st, orders_st)
    @settings(max_examples=80, deadline=None)
    def test_green_nonnegative(self, u, v):
        for fam in UNIFORMITY_FAMILIES:
            for fn in (na_green_plus, na_green_minus):
                try:
                    g = fn(fam, ValPoint(u, v))
                except TropicalTie:
                    continue
                assert g.q >= 0
                if g.status is NAStatus.BoundedToBudget:
                    assert g.q == 0
