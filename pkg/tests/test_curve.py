import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexzone.curve import (
    ClosedCurve,
    IrregularCurveError,
    NotChordArcError,
    PeriodicGrid,
    ScalarField,
    antiderivative,
    arc_length_reparametrize,
    chord_arc_constant,
    curvature,
    fourier_eval,
    holder_seminorm,
    integrate,
    mollify,
    resample,
    spectral_derivative,
)

TWO_PI = 2 * math.pi


def test_grid_validation():
    with pytest.raises(ValueError):
        PeriodicGrid(1.0, 7)
    with pytest.raises(ValueError):
        PeriodicGrid(1.0, 6)
    with pytest.raises(ValueError):
        PeriodicGrid(-1.0, 16)
    g = PeriodicGrid(3.0, 12)
    assert np.allclose(np.diff(g.nodes), 0.25)
    assert g.offsets()[0] == 0.0


def test_scalar_field_rejects_non_finite():
    g = PeriodicGrid(TWO_PI, 8)
    bad = np.ones(8)
    bad[3] = np.nan
    with pytest.raises(ValueError):
        ScalarField(g, bad)
    with pytest.raises(ValueError):
        ScalarField(g, np.ones(9))


class TestSpectralDerivative:
    def test_sin_to_cos(self):
        g = PeriodicGrid(TWO_PI, 64)
        f = ScalarField(g, np.sin(g.nodes))
        assert np.max(np.abs(spectral_derivative(f).values - np.cos(g.nodes))) < 1e-13

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_constant_gives_zero(self, order):
        g = PeriodicGrid(5.0, 32)
        assert np.max(np.abs(spectral_derivative(ScalarField.constant(g, 3.2), order).values)) < 1e-13

    def test_circle(self, circle128):
        d = spectral_derivative(circle128, 1).points
        assert np.max(np.abs(d - 1j * np.exp(1j * circle128.grid.nodes))) < 1e-13

    def test_rejects_bad_order(self, circle128):
        with pytest.raises(ValueError):
            spectral_derivative(circle128, 4)
        with pytest.raises(ValueError):
            spectral_derivative(circle128, 0)

    def test_twice_first_equals_second(self):
        g = PeriodicGrid(TWO_PI, 64)
        f = ScalarField(g, np.cos(3 * g.nodes) + 0.2 * np.sin(7 * g.nodes))
        twice = spectral_derivative(spectral_derivative(f, 1), 1)
        assert np.max(np.abs(twice.values - spectral_derivative(f, 2).values)) < 1e-10

    def test_integral_of_derivative_vanishes(self):
        g = PeriodicGrid(2.5, 64)
        f = ScalarField(g, np.exp(np.sin(TWO_PI * g.nodes / 2.5)))
        assert abs(integrate(spectral_derivative(f, 1))) < 1e-12


class TestIntegrate:
    def test_constant(self):
        g = PeriodicGrid(3.7, 16)
        assert integrate(ScalarField.constant(g, 2.0)) == pytest.approx(7.4, abs=1e-14)

    def test_sin(self):
        g = PeriodicGrid(TWO_PI, 32)
        assert abs(integrate(ScalarField(g, np.sin(g.nodes)))) < 1e-14

    def test_cos2_strength(self):
        g = PeriodicGrid(TWO_PI, 32)
        assert abs(integrate(ScalarField(g, 0.25 * np.cos(2 * g.nodes)))) < 1e-14


def test_antiderivative_base_and_mean():
    g = PeriodicGrid(TWO_PI, 64)
    vals = 1.5 + np.cos(g.nodes)
    F = antiderivative(vals, g)
    assert F[0] == 0.0
    assert np.max(np.abs(F - (1.5 * g.nodes + np.sin(g.nodes)))) < 1e-13


def test_fourier_eval_matches_function_off_grid():
    g = PeriodicGrid(TWO_PI, 32)
    vals = np.cos(3 * g.nodes) + np.sin(g.nodes)
    s = np.array([0.1, 1.234, 5.5])
    assert np.max(np.abs(fourier_eval(vals, g, s) - (np.cos(3 * s) + np.sin(s)))) < 1e-13
    # analytic continuation to complex parameters
    sc = np.array([0.3 + 0.05j])
    assert abs(fourier_eval(vals, g, sc)[0] - (np.cos(3 * sc) + np.sin(sc))[0]) < 1e-12


class TestArcLength:
    def test_circle_unchanged(self, circle128):
        out = arc_length_reparametrize(circle128)
        assert out.grid.length == pytest.approx(TWO_PI, rel=1e-13)
        assert np.max(np.abs(out.points - circle128.points)) < 1e-12

    def test_doubled_speed_circle(self):
        g = PeriodicGrid(math.pi, 64)
        c = ClosedCurve(g, np.exp(2j * g.nodes))
        out = arc_length_reparametrize(c)
        assert np.max(np.abs(np.abs(out.tangent) - 1)) < 1e-10

    def test_ellipse(self):
        g = PeriodicGrid(TWO_PI, 512)
        c = ClosedCurve(g, np.cos(g.nodes) + 0.5j * np.sin(g.nodes))
        out = arc_length_reparametrize(c)
        assert np.max(np.abs(np.abs(out.tangent) - 1)) < 1e-8
        assert out.signed_area() > 0
        # same image: every output point lies on the ellipse
        assert np.max(np.abs(out.points.real**2 + (out.points.imag / 0.5) ** 2 - 1)) < 1e-10

    def test_irregular(self):
        g = PeriodicGrid(TWO_PI, 64)
        s = g.nodes
        # a cusp: z(s) = (1 - cos s) e^{is} has zero speed at s = 0
        c = ClosedCurve(g, (1 - np.cos(s)) ** 2 * np.exp(1j * s))
        with pytest.raises(IrregularCurveError):
            arc_length_reparametrize(c)


class TestChordArc:
    def test_circle(self):
        assert chord_arc_constant(ClosedCurve.circle(256)) == pytest.approx(math.pi / 2, rel=1e-12)

    def test_at_least_one(self):
        g = PeriodicGrid(TWO_PI, 256)
        c = arc_length_reparametrize(ClosedCurve(g, np.cos(g.nodes) + 0.3j * np.sin(g.nodes)))
        assert chord_arc_constant(c) >= 1.0

    def test_figure_eight(self):
        g = PeriodicGrid(TWO_PI, 64)
        s = g.nodes
        with pytest.raises(NotChordArcError):
            chord_arc_constant(ClosedCurve(g, np.sin(s) + 1j * np.sin(s) * np.cos(s)))

    def test_rigid_motion_invariance(self):
        g = PeriodicGrid(TWO_PI, 128)
        c = arc_length_reparametrize(ClosedCurve(g, np.cos(g.nodes) + 0.6j * np.sin(g.nodes)))
        moved = ClosedCurve(c.grid, np.exp(0.7j) * c.points + (3 - 2j))
        shifted = ClosedCurve(c.grid, np.roll(c.points, 17))
        base = chord_arc_constant(c)
        assert chord_arc_constant(moved) == pytest.approx(base, rel=1e-10)
        assert chord_arc_constant(shifted) == pytest.approx(base, rel=1e-10)


class TestCurvature:
    def test_unit_circle(self, circle128):
        assert np.max(np.abs(curvature(circle128).values - 1)) < 1e-12

    def test_radius_two(self):
        g = PeriodicGrid(4 * math.pi, 128)
        c = ClosedCurve(g, 2 * np.exp(1j * g.nodes / 2))
        assert np.max(np.abs(curvature(c).values - 0.5)) < 1e-12

    def test_reversed(self, circle128):
        assert np.max(np.abs(curvature(circle128.reversed()).values + 1)) < 1e-12


class TestHolder:
    def test_constant(self):
        g = PeriodicGrid(TWO_PI, 64)
        assert holder_seminorm(ScalarField.constant(g, 4.0), 0.5) == 0.0

    def test_sin_lipschitz(self):
        g = PeriodicGrid(TWO_PI, 1024)
        assert holder_seminorm(ScalarField(g, np.sin(g.nodes)), 1.0) == pytest.approx(1.0, abs=1e-3)

    def test_homogeneity(self):
        g = PeriodicGrid(TWO_PI, 64)
        f = ScalarField(g, np.cos(g.nodes) ** 3)
        assert holder_seminorm(f * 2.0, 0.3) == 2.0 * holder_seminorm(f, 0.3)

    @pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5])
    def test_rejects_alpha(self, alpha):
        g = PeriodicGrid(TWO_PI, 16)
        with pytest.raises(ValueError):
            holder_seminorm(ScalarField.constant(g, 1.0), alpha)

    def test_refinement_monotone(self):
        f = lambda s: np.abs(np.sin(s)) ** 0.7
        vals = [
            holder_seminorm(ScalarField.from_function(PeriodicGrid(TWO_PI, n), f), 0.5) for n in (256, 512)
        ]
        assert vals[1] >= vals[0] - 1e-8


class TestMollify:
    def test_constant(self):
        g = PeriodicGrid(TWO_PI, 128)
        out = mollify(ScalarField.constant(g, 0.7), 0.4)
        assert np.max(np.abs(out.values - 0.7)) < 1e-14

    def test_small_eps_identity(self):
        g = PeriodicGrid(TWO_PI, 128)
        f = ScalarField(g, np.cos(g.nodes))
        assert np.max(np.abs(mollify(f, 0.5 * g.spacing).values - f.values)) < 1e-14

    def test_mass_abs_cos(self):
        g = PeriodicGrid(TWO_PI, 512)
        f = ScalarField(g, np.abs(np.cos(g.nodes)))
        assert abs(integrate(mollify(f, TWO_PI / 20)) - integrate(f)) < 1e-10

    def test_double_mollify_mass(self):
        g = PeriodicGrid(TWO_PI, 256)
        f = ScalarField(g, np.abs(np.sin(3 * g.nodes)))
        assert abs(integrate(mollify(mollify(f, 0.3), 0.2)) - integrate(f)) < 1e-10

    def test_rejects_eps(self):
        g = PeriodicGrid(TWO_PI, 16)
        with pytest.raises(ValueError):
            mollify(ScalarField.constant(g, 1.0), math.pi)


def test_resample_roundtrip():
    g = PeriodicGrid(TWO_PI, 32)
    f = ScalarField(g, np.cos(2 * g.nodes))
    up = resample(f, 64)
    assert np.max(np.abs(resample(up, 32).values - f.values)) < 1e-14


@settings(max_examples=25, deadline=None)
@given(
    coeffs=st.lists(st.floats(-1, 1), min_size=1, max_size=6),
    shift=st.floats(-3, 3),
)
def test_derivative_exact_on_trig_polynomials(coeffs, shift):
    g = PeriodicGrid(TWO_PI, 32)
    s = g.nodes
    f = sum(a * np.cos(k * (s - shift)) for k, a in enumerate(coeffs, start=1))
    df = sum(-k * a * np.sin(k * (s - shift)) for k, a in enumerate(coeffs, start=1))
    out = spectral_derivative(ScalarField(g, f), 1).values
    assert np.max(np.abs(out - df)) < 1e-11


@settings(max_examples=20, deadline=None)
@given(eps=st.floats(0.05, 2.0), amp=st.floats(0.1, 3.0), k=st.integers(1, 5))
def test_mollify_preserves_mass(eps, amp, k):
    g = PeriodicGrid(TWO_PI, 128)
    f = ScalarField(g, amp * np.abs(np.cos(k * g.nodes)))
    assert abs(integrate(mollify(f, eps)) - integrate(f)) < 1e-10 * max(1.0, integrate(f))
