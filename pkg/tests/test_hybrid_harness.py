import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonlab.complex_dynamics import ComplexHenon, green_n_array
from henonlab.hybrid_harness import (DEFAULT_OBSERVABLES, UNIFORMITY_HEADER, DegenerationReport, HybridBase,
                                     capped_log_x, cycle_green_n, periodic_cycles, rescaled,
                                     run_green_uniformity, run_homogenization, run_lyapunov_degeneration,
                                     run_measure_convergence, scale_factor, tau_norm, tropical_grid,
                                     tropical_prediction)
from henonlab.laurent import LaurentPoly
from henonlab.measure import GridSpec
from henonlab.na_dynamics import ValPoint

from families import HORSESHOE, POLE_A, UNIT, family

T = LaurentPoly.monomial(1)
exact_poly = st.dictionaries(st.integers(-3, 3), st.integers(-9, 9).filter(bool), min_size=1,
                             max_size=3).map(LaurentPoly)


class TestTau:
    @pytest.mark.parametrize("t0", [0.5, 0.3, 0.1, 1e-3, 0.2j])
    def test_coordinate(self, t0):
        assert tau_norm(T, t0, 0.5) == pytest.approx(0.5, rel=1e-12)

    @pytest.mark.parametrize("k", [-2, 1, 3])
    def test_powers_match_the_limit(self, k):
        f = LaurentPoly.monomial(k)
        for t0 in (0.5, 0.01, 1e-8):
            assert tau_norm(f, t0, 0.5) == pytest.approx(0.5 ** k, rel=1e-12)
        assert tau_norm(f, 0, 0.5) == 0.5 ** k

    def test_constant_tends_to_one(self):
        vals = [tau_norm(LaurentPoly.constant(7), 10.0 ** -k, 0.5) for k in (1, 4, 16, 64)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(1.0, abs=0.01)
        assert tau_norm(LaurentPoly.constant(7), 0, 0.5) == 1

    def test_zero_and_domain(self):
        assert tau_norm(LaurentPoly(), 0.1, 0.5) == 0
        with pytest.raises(ValueError):
            tau_norm(T, 0.7, 0.5)

    @given(exact_poly, exact_poly, st.sampled_from([0, 0.4, 0.05, 1e-4, 0.1j]))
    @settings(max_examples=80, deadline=None)
    def test_multiplicative(self, f, g, t0):
        prod = tau_norm(f * g, t0, 0.5)
        assert prod == pytest.approx(tau_norm(f, t0, 0.5) * tau_norm(g, t0, 0.5), rel=1e-12, abs=1e-300)


class TestScaleFactor:
    def test_at_base(self):
        assert scale_factor(0.5, 0.5) == pytest.approx(-1)

    def test_tends_to_zero(self):
        assert -1e-2 < scale_factor(1e-300, 0.5) < 0

    @given(st.floats(1e-6, 0.5), st.floats(1e-6, 0.5))
    @settings(max_examples=50, deadline=None)
    def test_monotone(self, a, b):
        if a < b:
            assert scale_factor(a, 0.5) >= scale_factor(b, 0.5)

    def test_domain(self):
        with pytest.raises(ValueError):
            scale_factor(1.0, 0.5)


class TestHybridBase:
    def test_ladder(self):
        base = HybridBase.ladder(0.5, (1, 2, 4))
        assert [abs(t) for t in base.t_samples] == [0.5, 0.25, 0.0625]

    @pytest.mark.parametrize("samples", [(), (0.6,), (0.1, 0.2), (0.1, 0.1), (0,)])
    def test_rejects(self, samples):
        with pytest.raises(ValueError):
            HybridBase(0.5, samples)


class TestReport:
    def test_write_is_deterministic(self, tmp_path):
        rep = DegenerationReport("demo", UNIFORMITY_HEADER,
                                 rows=[{"t_abs": 0.5, "n": 2, "sup_gap": 0.1, "ratio": 1 / 3,
                                        "bound": 2.0, "pass": True}],
                                 summary={"q": Fraction(1, 3), "spread": {2: 1.0}})
        first = [p.read_bytes() for p in rep.write(tmp_path / "a")]
        second = [p.read_bytes() for p in rep.write(tmp_path / "b")]
        assert first == second
        csv_text = first[0].decode()
        assert csv_text.splitlines() == ["t_abs,n,sup_gap,ratio,bound,pass", "0.5,2,0.10000000000000001,"
                                         "0.33333333333333331,2,1"]
        data = json.loads(first[1])
        assert data["summary"]["q"] == [1, 3]
        assert data["ok"] is True

    def test_violations_flip_ok(self):
        rep = DegenerationReport("demo", ("a",))
        assert rep.ok
        rep.violations.append({"a": 1})
        assert not rep.ok


class TestCycles:
    def test_cycle_green_n_matches_iteration(self):
        # mildly repelling cycles of a dissipative map survive a few float iterations
        H = ComplexHenon(2, (0, -1.5), 0.4)
        cycles = periodic_cycles(H, np.random.default_rng(3), periods=(2,))
        assert len(cycles) >= 3
        for cyc in cycles:
            y = np.roll(cyc, 1)
            for n in (1, 2, 3):
                direct = green_n_array(H, cyc, y, n, 0)
                assert np.allclose(cycle_green_n(H, cyc, n), direct, atol=1e-9)

    def test_fixed_point_values(self):
        H = ComplexHenon(2, (0, -1), 1)
        fp = H.fixed_points()
        big = fp[np.argmax(abs(fp))]
        assert cycle_green_n(H, np.array([big]), 3)[0] == pytest.approx(math.log(abs(big)) / 8)


class TestObservables:
    def test_rescaled_coordinates(self):
        f = rescaled(lambda U, V, s: U + 2 * V, -0.5)
        assert f(np.array([math.e]), np.array([1.0]))[0] == pytest.approx(-0.5)

    def test_capped_log(self):
        # s log max(|x|, e) with s < 0
        s = -0.25
        for x in (0.1, 1.0, math.e, 50.0):
            U = s * math.log(x)
            assert capped_log_x(U, 0.0, s) == pytest.approx(s * max(math.log(x), 1.0))

    def test_trivial_valuation_limit(self):
        # without degeneration, s -> 0 sends every pairing to f(0, 0, 0)
        for name, f in DEFAULT_OBSERVABLES.items():
            g = rescaled(f, scale_factor(1e-200, 0.5))
            x = np.array([0.3 + 1j, 2.0])
            assert np.allclose(g(x, np.array([1.5, -0.7j])), f(0.0, 0.0, 0.0), atol=0.01)


class TestPrediction:
    def test_horseshoe(self):
        pred = tropical_prediction(HORSESHOE)
        assert pred.point == ValPoint(-1, -1)
        assert not pred.tie_free
        assert pred.limit(DEFAULT_OBSERVABLES["sum"], 0.5) == pytest.approx(-2 * math.log(2))

    def test_no_unique_point(self):
        pred = tropical_prediction(UNIT)
        assert pred.point is None
        assert pred.limit(DEFAULT_OBSERVABLES["sum"], 0.5) is None

    def test_grid_center(self):
        spec = tropical_grid(ValPoint(-1, Fraction(-1, 2)), 0.01, n_per_axis=8)
        L = math.log(100)
        assert sum(spec.box[0]) / 2 == pytest.approx(L)
        assert sum(spec.box[2]) / 2 == pytest.approx(L / 2)


class TestRunners:
    def test_uniformity_constant_family(self):
        rep = run_green_uniformity(UNIT, HybridBase.ladder(0.5, (1, 2, 4)), n_range=range(2, 5),
                                   sample_size=600, rng=np.random.default_rng(0))
        assert rep.ok
        assert {row["n"] for row in rep.rows} == {2, 3, 4}
        # R does not grow, so normalized gaps shrink with |t|
        for n in (2, 3, 4):
            ratios = [row["ratio"] for row in rep.rows if row["n"] == n]
            assert ratios[-1] < ratios[0]

    def test_uniformity_rejects_small_n(self):
        with pytest.raises(ValueError):
            run_green_uniformity(UNIT, HybridBase.ladder(0.5, (1,)), n_range=range(1, 3))

    @pytest.mark.parametrize("a, expected", [({0: 1}, 0), ({1: 1}, -1), ({-2: 1}, 2)])
    def test_lyapunov_slopes(self, a, expected):
        fam = family(2, [{}, {0: -1}], a)
        rep = run_lyapunov_degeneration(fam, HybridBase.ladder(0.5, (2, 4, 8)), n_steps=2000)
        assert rep.ok
        assert rep.summary["predicted_slope"] == expected
        slopes = [row["total_slope"] for row in rep.rows]
        assert abs(slopes[-1] - expected) <= abs(slopes[0] - expected) + 1e-12
        assert abs(slopes[-1] - expected) < 1e-6
        assert rep.summary["sign_matches_log_a"]

    def test_measure_mass_observable(self):
        rep = run_measure_convergence(UNIT, HybridBase.ladder(0.5, (1, 2)),
                                      observables={"one": lambda U, V, s: np.ones_like(U)},
                                      grid_factory=lambda H, t0: GridSpec.filtration_box(H, 8))
        assert [row["one"] for row in rep.rows] == pytest.approx([1.0, 1.0])
        # two rungs cannot show three decreasing differences
        assert not rep.ok

    def test_homogenization_runner(self):
        rep, data = run_homogenization(POLE_A, HybridBase.ladder(0.5, (1, 4)), n_max=2, sample_size=200)
        assert rep.ok
        assert [d.n for d in data] == [1, 2]
        assert rep.summary["max_identity_residual"] < 1e-12
        assert len(rep.rows) == 4
