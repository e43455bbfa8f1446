import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import loglog_slope, trig_field
from vortexzone.biot_savart import (
    GeometryError,
    KernelWeight,
    ProximityError,
    Sheet,
    SingularityError,
    bernoulli_jump,
    blob_kernel,
    br_multi,
    br_single,
    cauchy_kernel,
    circulation,
    plemelj_traces,
    pressure_jump,
    theta,
    theta_mean,
    velocity_at,
    weighted_hilbert,
    winding_index,
)
from vortexzone.curve import ClosedCurve, PeriodicGrid, ScalarField, arc_length_reparametrize, holder_seminorm
from vortexzone.dissipation import an_cn, lambda_grid
from vortexzone.subsolution import SheetFamily, TaylorCurve

TWO_PI = 2 * math.pi


def ellipse(n: int, b: float = 0.7) -> ClosedCurve:
    g = PeriodicGrid(TWO_PI, max(n, 256))
    return arc_length_reparametrize(ClosedCurve(g, np.cos(g.nodes) + 1j * b * np.sin(g.nodes)), n)


def pv_oracle(z: ClosedCurve, w: ScalarField) -> np.ndarray:
    """Brute-force principal value by symmetric point omission.

    The singular node and every other node are skipped (the alternate-point
    trapezoidal rule with doubled weight), which is symmetric about the target
    and converges spectrally for periodic integrands with a simple pole.
    """
    n = z.grid.n
    out = np.empty(n, dtype=complex)
    for j in range(n):
        mask = (np.arange(n) - j) % 2 == 1
        out[j] = np.sum(w.values[mask] / (z.points[j] - z.points[mask])) * 2 * z.grid.spacing / (2j * math.pi)
    return np.conj(out)


class TestKernels:
    def test_cauchy_at_one(self):
        assert cauchy_kernel(1.0) == pytest.approx(-1j / (2 * math.pi))

    def test_cauchy_singular(self):
        with pytest.raises(SingularityError):
            cauchy_kernel(0.0)

    @pytest.mark.parametrize("delta", [1e-2, 1e-4])
    def test_blob_converges(self, delta):
        rel = abs(blob_kernel(1.0, delta) - cauchy_kernel(1.0)) / abs(cauchy_kernel(1.0))
        assert rel == pytest.approx(delta**2, rel=1e-3)

    def test_blob_zero(self):
        assert blob_kernel(0.0, 0.002) == 0


class TestVelocity:
    def test_inside_uniform_circle(self):
        z = ClosedCurve.circle(256)
        sheet = Sheet(z, ScalarField.constant(z.grid, 0.7))
        assert abs(velocity_at([sheet], 0.0)) < 1e-14

    def test_outside_uniform_circle(self):
        z = ClosedCurve.circle(256)
        sheet = Sheet(z, ScalarField.constant(z.grid, 0.7))
        v = velocity_at([sheet], 2.0)
        assert abs(v.real) < 1e-14
        assert abs(v) == pytest.approx(0.7 * TWO_PI / (2 * math.pi * 2), rel=1e-13)

    def test_proximity(self):
        z = ClosedCurve.circle(64)
        sheet = Sheet(z, ScalarField.constant(z.grid, 1.0))
        with pytest.raises(ProximityError):
            velocity_at([sheet], z.points[3] * (1 + 1e-4))

    def test_near_field_matches_closed_form(self):
        z = ClosedCurve.circle(128)
        sheet = Sheet(z, ScalarField.constant(z.grid, 1.0))
        h = 2 * z.grid.spacing
        inner = velocity_at([sheet], (1 - h) * np.exp(0.3j))
        outer = velocity_at([sheet], (1 + h) * np.exp(0.3j))
        assert abs(inner) < 1e-12
        assert abs(outer - 1j * np.exp(0.3j) / (1 + h)) < 1e-12

    def test_far_field_decay(self, rng):
        z = ellipse(256)
        w = trig_field(z.grid, [0.3, 0.1], [0.2], const=0.5)
        total = float(np.sum(w.values) * z.grid.spacing)
        sheet = Sheet(z, w)

        def residual(r):
            x = r * np.exp(1j * np.linspace(0, TWO_PI, 16, endpoint=False))
            v = velocity_at([sheet], x)
            return np.max(np.abs(2j * math.pi * x * np.conj(v) - total))

        assert residual(20) <= 0.6 * residual(10)


class TestBrSingle:
    def test_circle_constant(self):
        z = ClosedCurve.circle(256)
        b = br_single(z, ScalarField.constant(z.grid, 2.0))
        assert np.max(np.abs(b - z.tangent)) <= 1e-10

    def test_linearity(self, rng):
        z = ellipse(128)
        w1 = trig_field(z.grid, [0.5], [0.1], 1.0)
        w2 = trig_field(z.grid, [0.0, 0.3], [], -0.2)
        a, b = 1.7, -0.4
        lhs = br_single(z, w1 * a + w2 * b)
        rhs = a * br_single(z, w1) + b * br_single(z, w2)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_pv_oracle(self):
        z = ClosedCurve.circle(512)
        w = ScalarField(z.grid, 0.25 * np.cos(2 * z.grid.nodes))
        assert np.max(np.abs(br_single(z, w) - pv_oracle(z, w))) < 1e-8

    def test_matches_mean_of_near_traces(self):
        z = ellipse(256)
        w = trig_field(z.grid, [0.2], [0.1], 1.0)
        eps = 4 * z.grid.spacing
        normal = z.normal / np.abs(z.normal)
        idx = np.arange(0, 256, 16)
        sheet = Sheet(z, w)
        plus = velocity_at([sheet], z.points[idx] + eps * normal[idx])
        minus = velocity_at([sheet], z.points[idx] - eps * normal[idx])
        mean = 0.5 * (plus + minus)
        assert np.max(np.abs(mean - br_single(z, w)[idx])) < 10 * eps


def circle_family(N: int, c: float = 0.25, w0: float = 1.0, a: float = 0.3, n: int = 128) -> SheetFamily:
    """Concentric circles: z(t) = (1 + a t) e^{is}, so x_lam has radius 1 + a t - lam t c."""
    z0 = ClosedCurve.circle(n)
    z1 = ClosedCurve(z0.grid, a * z0.points)
    wt = ScalarField.constant(z0.grid, 0.0)
    taylor = TaylorCurve((z0, z1), (wt, wt), ScalarField.constant(z0.grid, w0))
    return SheetFamily(taylor, ScalarField.constant(z0.grid, c), N)


def concentric_oracle(fam: SheetFamily, t: float, lam: float) -> np.ndarray:
    grid = [float(m) for m in fam.lambda_grid]
    inner = sum(1 for mu in grid if mu > lam)
    X = fam.x(t, lam).points
    w0 = fam.strength0.values
    return (inner + 0.5) * w0 * 1j * X / np.abs(X) ** 2 / len(grid)


class TestBrMulti:
    @pytest.mark.parametrize("N", [1, 2, 3])
    @pytest.mark.parametrize("t", [0.1, 0.01, -0.05])
    def test_concentric_oracle(self, N, t):
        fam = circle_family(N)
        for lam in fam.lambda_grid:
            b = br_multi(fam, t, lam, check_geometry=False)
            assert np.max(np.abs(b - concentric_oracle(fam, t, lam))) < 1e-11

    @pytest.mark.parametrize("N", [1, 2])
    def test_limit_at_zero(self, N):
        z = ellipse(128)
        w = trig_field(z.grid, [0.2], [0.1], 1.0)
        from vortexzone.subsolution import expansion_rate, taylor_order1

        z1, wt1 = taylor_order1(z, w)
        c = expansion_rate(w, N, 0.5, 0.3)
        fam = SheetFamily(TaylorCurve((z, z1), (wt1, wt1), w), c, N)
        b0 = br_single(z, w)
        zeta0 = w.values / z.tangent
        _, cb = an_cn(N)
        ts = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
        for lam in (1.0, -1.0):
            limit = b0 - lam * float(cb) * np.conj(zeta0)
            assert np.max(np.abs(br_multi(fam, 0.0, lam) - limit)) < 1e-13
            errs = [np.max(np.abs(br_multi(fam, t, lam) - limit)) for t in ts]
            assert loglog_slope(ts, errs) >= 0.9

    def test_n1_limit_quarter(self):
        fam = circle_family(1, w0=2.0)
        z0 = fam.z0
        b0 = br_single(z0, fam.strength0)
        for lam in (1.0, -1.0):
            expected = b0 - lam / 4 * 2.0 * z0.tangent
            assert np.max(np.abs(br_multi(fam, 0.0, lam) - expected)) < 1e-13

    def test_theta_sum_exact(self):
        for N in range(1, 21):
            grid = lambda_grid(N, exact=True)
            _, cb = an_cn(N)
            for lam in grid:
                assert theta_mean(lam, grid) == Fraction(1, 2) + lam * cb

    def test_theta_values(self):
        assert theta(1, 0) == 1 and theta(0, 1) == 0 and theta(Fraction(1, 3), Fraction(1, 3)) == Fraction(1, 2)

    def test_geometry_error(self):
        fam = circle_family(1, c=0.25, a=0.0)
        with pytest.raises(GeometryError):
            br_multi(fam, 5.0, 1.0)  # inner sheet radius 1 - 5/4 < 0: sheets cross

    def test_jump_is_tangential(self):
        fam = circle_family(2)
        t = 0.05
        for lam in fam.lambda_grid:
            x = fam.x(t, lam)
            zeta = fam.strength(t).values / x.tangent
            tr = plemelj_traces(br_multi(fam, t, lam), zeta, len(fam.lambda_grid))
            cross = np.imag(np.conj(x.tangent) * tr.jump)
            assert np.max(np.abs(cross)) <= 1e-10 * np.max(np.abs(tr.jump) * np.abs(x.tangent))


class TestTraces:
    def test_jump_and_mean(self, rng):
        b = rng.normal(size=8) + 1j * rng.normal(size=8)
        zeta = rng.normal(size=8) + 1j * rng.normal(size=8)
        tr = plemelj_traces(b, zeta, 4)
        assert np.array_equal(tr.mean, b)
        assert np.max(np.abs(tr.jump + np.conj(zeta) / 4)) < 1e-15
        assert np.max(np.abs(0.5 * (tr.plus + tr.minus) - tr.mean)) < 1e-15

    def test_circle_inner_outer(self):
        z = ClosedCurve.circle(128)
        w = ScalarField.constant(z.grid, 1.3)
        zeta = w.values / z.tangent
        tr = plemelj_traces(br_single(z, w), zeta, 1)
        assert np.max(np.abs(tr.plus)) < 1e-12
        assert np.max(np.abs(tr.minus - 1.3 * z.tangent)) < 1e-12


class TestCirculation:
    def setup_method(self):
        self.z = ClosedCurve.circle(256)
        self.w = ScalarField.constant(self.z.grid, 0.6)
        self.sheet = Sheet(self.z, self.w)
        self.field = lambda x: velocity_at([self.sheet], x)

    def test_enclosing(self):
        test = ClosedCurve.circle(256, 2.0)
        assert abs(circulation(self.field, test) - 0.6 * TWO_PI) < 1e-8

    def test_not_enclosing(self):
        test = ClosedCurve.circle(256, 0.5)
        assert abs(circulation(self.field, test)) < 1e-8

    def test_homotopic_curves_agree(self):
        g = PeriodicGrid(TWO_PI, 256)
        a = ClosedCurve(g, 2.0 * np.exp(1j * g.nodes))
        b = ClosedCurve(g, (2.5 + 0.3 * np.cos(3 * g.nodes)) * np.exp(1j * g.nodes) + 0.1)
        assert abs(circulation(self.field, a) - circulation(self.field, b)) < 1e-8

    def test_additive_over_sheets(self):
        z2 = ClosedCurve.circle(256, 0.5, center=0.1)
        s2 = Sheet(z2, ScalarField.constant(z2.grid, -0.2))
        test = ClosedCurve.circle(256, 2.0)
        both = circulation(lambda x: velocity_at([self.sheet, s2], x), test)
        assert abs(both - (0.6 - 0.2 * 0.5) * TWO_PI) < 1e-8

    def test_winding(self):
        z = ClosedCurve.circle(64)
        assert winding_index(z, 0.0) == 1
        assert winding_index(z, 3.0) == 0


class TestPressureJump:
    def test_br_motion_no_jump(self):
        z = ellipse(128)
        w = trig_field(z.grid, [0.3], [], 1.0)
        b = br_single(z, w)
        jump = bernoulli_jump(z, w, b, b, np.zeros(128), 1)
        assert np.max(np.abs(jump)) < 1e-14

    def test_zero_strength(self):
        fam = circle_family(1, w0=0.0)
        dt_wt = ScalarField(fam.z0.grid, np.cos(fam.z0.grid.nodes))
        jump = pressure_jump(fam, 0.05, 1.0, np.zeros(128, complex), dt_wt)
        assert np.max(np.abs(jump - dt_wt.values / 2)) < 1e-15

    def test_homogeneity(self):
        z = ellipse(128)
        w = trig_field(z.grid, [0.3], [], 1.0)
        b = br_single(z, w)
        dt_x = 0.5 * z.tangent
        dt_wt = np.sin(z.grid.nodes)
        base_wt = bernoulli_jump(z, w, b, 0 * dt_x, dt_wt, 1) - bernoulli_jump(z, w, b, 0 * dt_x, 0 * dt_wt, 1)
        doubled = bernoulli_jump(z, w * 2.0, 2 * b, 0 * dt_x, 2 * dt_wt, 1)
        single = bernoulli_jump(z, w, b, 0 * dt_x, 0 * dt_wt, 1)
        assert np.max(np.abs(doubled - (2 * base_wt + 4 * single))) < 1e-13


class TestWeightedHilbert:
    def test_constant(self):
        z = ClosedCurve.circle(64)
        out = weighted_hilbert(ScalarField.constant(z.grid, 2.0), KernelWeight.phi_zero(z))
        assert np.max(np.abs(out)) < 1e-14

    def test_phi_zero_identity(self):
        z = ellipse(256)
        w = trig_field(z.grid, [0.3, 0.1], [0.2], 1.0)
        phi = KernelWeight.phi_zero(z)
        zeta = w.values / z.tangent
        lhs = zeta * weighted_hilbert(ClosedCurve(z.grid, z.tangent), phi) - weighted_hilbert(w, phi) - 0.5 * zeta
        assert np.max(np.abs(lhs - np.conj(br_single(z, w)))) < 1e-8

    def test_empirical_boundedness(self, rng):
        ratios = {}
        for n in (256, 512):
            z = ellipse(n)
            phi = KernelWeight.phi_zero(z)
            vals = []
            for _ in range(4):
                f = trig_field(z.grid, rng.normal(size=16), rng.normal(size=16))
                tf = weighted_hilbert(f, phi)
                num = np.max(np.abs(tf)) + holder_seminorm(ScalarField(z.grid, tf.real), 0.4) + holder_seminorm(ScalarField(z.grid, tf.imag), 0.4)
                den = np.max(np.abs(f.values)) + holder_seminorm(f, 0.5)
                vals.append(num / den)
            ratios[n] = max(vals)
        assert 0.5 <= ratios[512] / ratios[256] <= 2.0


@settings(max_examples=10, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), amp=st.floats(0.1, 1.0))
def test_br_single_linearity_property(a, b, amp):
    z = ClosedCurve.circle(64)
    w1 = ScalarField(z.grid, 1.0 + amp * np.cos(z.grid.nodes))
    w2 = ScalarField(z.grid, amp * np.sin(2 * z.grid.nodes))
    lhs = br_single(z, w1 * a + w2 * b)
    rhs = a * br_single(z, w1) + b * br_single(z, w2)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * (1 + abs(a) + abs(b))
