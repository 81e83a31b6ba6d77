import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from henonlab.complex_dynamics import ComplexHenon
from henonlab.errors import NonFiniteField, OrbitEscaped
from henonlab.hybrid_harness import horseshoe_grid
from henonlab.measure import (MA_CONSTANT, _qr_accumulate, GridMeasure, GridSpec, build_green_grid, find_periodic_orbit, integrate,
                              lyapunov_cycle, lyapunov_measure_avg, lyapunov_qr, ma_measure,
                              ma_measure_from_values, sample_field, toric_green)

from families import HORSESHOE


def toric_measure(n):
    spec = GridSpec(((-2.0, 2.0),) * 4, n, 2 * 4.0 / (n - 1))
    values, pad = sample_field(toric_green, spec)
    return ma_measure_from_values(values, spec, pad)


@pytest.fixture(scope="module")
def unit_measure():
    H = ComplexHenon(2, (0, -1), 1)
    return H, ma_measure(build_green_grid(H, GridSpec.filtration_box(H, 16)))


@pytest.fixture(scope="module")
def horseshoe_measure():
    t0 = 0.1
    H = HORSESHOE.at(t0)
    return H, ma_measure(build_green_grid(H, horseshoe_grid(H, t0, n_per_axis=16)))


class TestGridSpec:
    def test_cartesian_spacing(self):
        spec = GridSpec(((-1, 1),) * 4, 9)
        assert spec.spacing() == (0.25,) * 4
        assert spec.axis_nodes()[0][[0, -1]].tolist() == [-1, 1]

    def test_log_polar_angles_are_periodic(self):
        spec = GridSpec.log_polar((0, 1), (0, 1), 8)
        assert spec.periodic == (False, True, False, True)
        ang = spec.axis_nodes(pad=3)[1]
        assert len(ang) == 8
        assert np.allclose(np.diff(ang), 2 * math.pi / 8)

    def test_filtration_box_contains_w(self):
        H = ComplexHenon(2, (0, -1), 0.5)
        spec = GridSpec.filtration_box(H, 16)
        assert spec.box[0] == (-H.R - 1, H.R + 1)
        assert spec.smoothing_eps == pytest.approx(2 * spec.spacing()[0])

    @pytest.mark.parametrize("kwargs", [dict(box=((0, 1),) * 3), dict(box=((1, 0),) * 4),
                                        dict(box=((0, 1),) * 4, n_per_axis=4),
                                        dict(box=((0, 1),) * 4, smoothing_eps=0),
                                        dict(box=((0, 1),) * 4, kind="spherical")])
    def test_rejects_bad_specs(self, kwargs):
        with pytest.raises(ValueError):
            GridSpec(**kwargs)


class TestMongeAmpere:
    def test_constant(self):
        assert MA_CONSTANT == pytest.approx(8 / math.pi ** 2)

    def test_toric_calibration_converges(self):
        masses = [toric_measure(n).total_mass for n in (16, 24)]
        assert masses[0] < masses[1] < 1.0
        assert masses[1] > 0.85

    def test_toric_support_on_unit_torus(self):
        m = toric_measure(16)
        r = integrate(m, lambda x, y: np.abs(np.log(np.maximum(abs(x), abs(y)))))
        assert r < 0.35

    def test_pluriharmonic_patch(self):
        spec = GridSpec(((10, 12), (-1, 1), (-1, 1), (-1, 1)), 12, 0.4)
        values, pad = sample_field(lambda x, y: np.log(np.abs(x)), spec)
        m = ma_measure_from_values(values, spec, pad)
        assert m.total_mass < 1e-10

    def test_non_finite_field(self):
        spec = GridSpec(((-1, 1),) * 4, 8)
        values, pad = sample_field(lambda x, y: np.log(np.abs(x)), spec)
        values[0, 0, 0, 0] = np.nan
        with pytest.raises(NonFiniteField):
            ma_measure_from_values(values, spec, pad)

    def test_green_grid_nodes(self):
        H = ComplexHenon(2, (0, -1), 0.5)
        spec = GridSpec.filtration_box(H, 8)
        grid = build_green_grid(H, spec)
        assert grid.err_bound <= spec.smoothing_eps / 10
        assert np.all(grid.values >= 0)
        # corner node is deep in V+ or V-, where G is close to log of the norm
        corner = grid.values[0, 0, 0, 0]
        s = spec.axis_nodes(grid.pad)[0][0]
        assert corner == pytest.approx(math.log(abs(complex(s, s))), abs=1.0)

    def test_henon_mass(self, unit_measure):
        _, m = unit_measure
        assert 0.75 < m.total_mass < 1.1
        assert m.clipped_mass < 0.1
        assert m.summary()["cells"] == 16 ** 4


class TestIntegrate:
    def test_constant_function(self, unit_measure):
        _, m = unit_measure
        assert integrate(m, lambda x, y: np.ones_like(x, dtype=float)) == pytest.approx(1.0)

    def test_mass_outside_w_shrinks_with_smoothing(self, unit_measure):
        # the mollifier spills mass past W; it halves when eps drops from 1.6 to 1.04
        H, m16 = unit_measure
        m24 = ma_measure(build_green_grid(H, GridSpec.filtration_box(H, 24)))
        outside = [integrate(m, lambda x, y: (H.classify_array(x, y) != 0).astype(float)) for m in (m16, m24)]
        assert outside[1] < 0.6 * outside[0]
        assert outside[1] < 0.1

    @given(st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=20, deadline=None)
    def test_linearity(self, unit_measure, a, b):
        _, m = unit_measure
        f = lambda x, y: np.abs(x)
        g = lambda x, y: np.real(y)
        lhs = integrate(m, lambda x, y: a * f(x, y) + b * g(x, y))
        assert lhs == pytest.approx(a * integrate(m, f) + b * integrate(m, g), abs=1e-10)

    def test_observable_must_be_finite(self, unit_measure):
        _, m = unit_measure
        with pytest.raises(NonFiniteField):
            integrate(m, lambda x, y: np.full(x.shape, np.inf))


class TestLyapunov:
    def test_area_preserving(self):
        # real orbit near the elliptic fixed point of x^2 - 1, a = 1
        res = lyapunov_qr(ComplexHenon(2, (0, -1), 1), (-0.4, -0.4), 10 ** 4)
        assert abs(res.lambda1 + res.lambda2) < 1e-6
        assert res.lambda1 >= res.lambda2

    def test_dissipative(self):
        res = lyapunov_qr(ComplexHenon(2, (0, -0.5), 0.3), (0.1, 0.1), 10 ** 4, transient=100)
        assert res.lambda1 + res.lambda2 == pytest.approx(math.log(0.3), abs=1e-6)
        assert res.lambda1 >= res.lambda2

    def test_givens_steps_match_lapack_qr(self):
        H = ComplexHenon(2, (0.3j, -1.2), 0.7 - 0.2j)
        xs = np.random.default_rng(4).normal(size=500) * 2 + 1j * np.random.default_rng(5).normal(size=500)
        Q, ref = np.eye(2, dtype=complex), np.zeros(2)
        for x in xs:
            Q, R = np.linalg.qr(H.jacobian(x) @ Q)
            ref += np.log(np.abs(np.diag(R)))
        assert np.allclose(_qr_accumulate(H, xs), ref, rtol=1e-10)

    def test_escape_is_reported(self):
        with pytest.raises(OrbitEscaped):
            lyapunov_qr(ComplexHenon(2, (0, -1), 1), (50, 0), 100)

    def test_cycle_mode(self):
        H = ComplexHenon(2, (0, -1), 3.0)
        res = lyapunov_cycle(H, 1000, period=2, rng=np.random.default_rng(1))
        assert res.mode == "cycle" and res.period == 2
        assert res.sum_residual < 1e-12

    def test_periodic_orbit_is_periodic(self):
        H = ComplexHenon(2, (0, -1), 1)
        xs = find_periodic_orbit(H, 3, np.random.default_rng(2))
        # y_k = x_(k-1), so the x-cycle alone determines the orbit
        x, y = xs[0], xs[-1]
        for k in range(3):
            x, y = H.apply(x, y)
        assert abs(x - xs[0]) < 1e-8 * max(1, abs(xs[0]))

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 3), st.floats(0, 2 * math.pi))
    @settings(max_examples=60, deadline=None)
    def test_determinant_identity(self, xr, xi, mod, arg):
        a = mod * complex(math.cos(arg), math.sin(arg))
        H = ComplexHenon(3, (1, -2j, 0.5), a)
        J = H.jacobian(complex(xr, xi))
        assert abs(np.linalg.det(J) - a) <= 1e-12 * max(1, abs(J[0, 0]))

    def test_measure_average_matches_cycle(self, horseshoe_measure):
        H, m = horseshoe_measure
        avg = lyapunov_measure_avg(H, m)
        cyc = lyapunov_cycle(H, 2000, period=2, rng=np.random.default_rng(0)).lambda1
        assert abs(avg - cyc) <= 0.1 * abs(cyc)

    def test_dominant_root(self, horseshoe_measure):
        # |p'| ~ 2 |t|^-1 on the support, so the spectral radius is |p'| to first order
        H, m = horseshoe_measure
        avg = lyapunov_measure_avg(H, m)
        log_dp = integrate(m, lambda x, y: np.log(np.abs(H.dp(x))))
        assert avg == pytest.approx(log_dp, abs=0.01)

    def test_horizon_on_exact_cycle(self):
        H = HORSESHOE.at(0.1)
        rng = np.random.default_rng(0)
        xs = find_periodic_orbit(H, 2, rng)
        ys = np.roll(xs, 1)
        m = GridMeasure(np.stack([xs.real, xs.imag, ys.real, ys.imag], axis=1), np.ones(2), 2.0, 0.0)
        target = lyapunov_cycle(H, 2000, period=2, rng=np.random.default_rng(0)).lambda1
        errs = [abs(lyapunov_measure_avg(H, m, k) - target) for k in (1, 2, 6)]
        assert errs[2] < errs[0]
        assert errs[2] < 1e-4

    def test_horizon_bias_on_grid(self, horseshoe_measure):
        # cell centers sit off the Cantor set and escape, so longer horizons overshoot
        H, m = horseshoe_measure
        avgs = [lyapunov_measure_avg(H, m, k) for k in (1, 2, 3)]
        assert avgs[0] < avgs[1] < avgs[2]
