"""Order-3 Taylor construction of the turbulence-zone interface.

The interface ``z(t)`` and the strength correction ``wt(t)`` are stored as
Taylor coefficients at ``t = 0``.  The ``2N`` sheets of the zone are

    x_lam(t, s) = z(t, s) + lam t c(s) (z0'(s))^perp,

all carrying the strength ``w = w0 + d_s wt(t)``.  Coefficients of the
Birkhoff–Rott velocity in ``t`` are obtained by centered differences of
:func:`~vortexzone.biot_savart.br_multi`, which is analytic through ``t = 0``
once the cross-sheet integrals keep a fixed branch index, followed by
Richardson extrapolation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .biot_savart import GeometryError, br_multi, br_single
from .curve import (
    ClosedCurve,
    ScalarField,
    antiderivative,
    chord_arc_constant,
    curvature,
    dot,
    integrate,
    mollify,
    spectral_derivative,
)
from .dissipation import an_cn, lambda_grid

__all__ = [
    "DegenerateStrengthError",
    "TaylorCurve",
    "SheetFamily",
    "QFields",
    "BoundaryData",
    "LagrangeCoeffs",
    "TaylorDiagnostics",
    "expansion_rate",
    "taylor_order1",
    "mean_br_taylor",
    "br_taylor_pair",
    "taylor_order2",
    "q_fields",
    "taylor_order3",
    "construct_family",
    "zone_map",
    "equi_chord_arc_margin",
    "boundary_data",
    "pointwise_residual",
    "lagrange_coeffs",
    "reynolds_leading",
]


class DegenerateStrengthError(ValueError):
    """The strength is identically zero where the construction divides by its norm."""


def _zeros_like_curve(z0: ClosedCurve) -> ClosedCurve:
    return ClosedCurve(z0.grid, np.zeros(z0.grid.n, dtype=complex))


def _zeros_like_field(f) -> ScalarField:
    return ScalarField(f.grid, np.zeros(f.grid.n))


@dataclass(frozen=True, eq=False)
class TaylorCurve:
    """Taylor coefficients ``z^(0..3)`` and ``wt^(0..3)`` plus the base strength ``w0``.

    Missing higher coefficients are treated as zero.  ``wt^(0)`` and
    ``wt^(1)`` vanish by construction.
    """

    z_coeffs: tuple[ClosedCurve, ...]
    wt_coeffs: tuple[ScalarField, ...]
    strength0: ScalarField

    def __post_init__(self) -> None:
        z = tuple(self.z_coeffs)
        wt = tuple(self.wt_coeffs)
        if not z:
            raise ValueError("need at least z^(0)")
        grid = z[0].grid
        z = z + tuple(_zeros_like_curve(z[0]) for _ in range(4 - len(z)))
        wt = wt + tuple(_zeros_like_field(self.strength0) for _ in range(4 - len(wt)))
        if len(z) != 4 or len(wt) != 4:
            raise ValueError("at most four Taylor coefficients are supported")
        for item in z + wt + (self.strength0,):
            if item.grid != grid:
                raise ValueError("all Taylor data must share one grid")
        object.__setattr__(self, "z_coeffs", z)
        object.__setattr__(self, "wt_coeffs", wt)

    @property
    def grid(self):
        return self.z_coeffs[0].grid

    @property
    def z0(self) -> ClosedCurve:
        return self.z_coeffs[0]

    def truncated(self, order: int) -> "TaylorCurve":
        keep_z = self.z_coeffs[: order + 1]
        keep_w = self.wt_coeffs[: order + 1]
        return TaylorCurve(keep_z, keep_w, self.strength0)

    def z_at(self, t: float) -> ClosedCurve:
        pts = sum(t**n * c.points for n, c in enumerate(self.z_coeffs))
        return ClosedCurve(self.grid, pts)

    def dz_dt(self, t: float) -> np.ndarray:
        return sum(n * t ** (n - 1) * c.points for n, c in enumerate(self.z_coeffs) if n)

    def wt_at(self, t: float) -> ScalarField:
        return ScalarField(self.grid, sum(t**n * c.values for n, c in enumerate(self.wt_coeffs)))

    def dwt_dt(self, t: float) -> ScalarField:
        return ScalarField(self.grid, sum(n * t ** (n - 1) * c.values for n, c in enumerate(self.wt_coeffs) if n))


@dataclass(frozen=True, eq=False)
class QFields:
    """Fields of the boundary-data ansatz ``q = q^(0) + t (q1^(1) + i q2^(1))``."""

    q0: np.ndarray
    q1_1: np.ndarray
    q2_1: np.ndarray
    q2_1_integrand: np.ndarray
    qtilde: np.ndarray
    h: np.ndarray
    H: np.ndarray

    def q_at(self, t: float) -> np.ndarray:
        return self.q0 + t * (self.q1_1 + 1j * self.q2_1)


@dataclass(frozen=True, eq=False)
class SheetFamily:
    """The ``2N`` sheets of the turbulence zone built from Taylor data and expansion rate ``c``."""

    taylor: TaylorCurve
    c: ScalarField
    N: int = 1
    qfields: QFields | None = None

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.c.grid != self.taylor.grid:
            raise ValueError("expansion rate must live on the Taylor grid")
        if np.min(self.c.values) <= 0:
            raise ValueError("expansion rate must be positive everywhere")

    @property
    def lambda_grid(self) -> tuple[float, ...]:
        return tuple(lambda_grid(self.N))

    @property
    def z0(self) -> ClosedCurve:
        return self.taylor.z0

    @property
    def strength0(self) -> ScalarField:
        return self.taylor.strength0

    @cached_property
    def _normal0(self) -> np.ndarray:
        return self.z0.normal

    @cached_property
    def chord_arc(self) -> float:
        return chord_arc_constant(self.z0)

    def opening(self) -> np.ndarray:
        """``v^(1) = c (z0')^perp``."""
        return self.c.values * self._normal0

    def x(self, t: float, lam: float) -> ClosedCurve:
        z = self.taylor.z_at(t)
        return ClosedCurve(z.grid, z.points + lam * t * self.opening())

    def strength(self, t: float) -> ScalarField:
        wt = self.taylor.wt_at(t)
        return ScalarField(wt.grid, self.strength0.values + spectral_derivative(wt, 1).values)

    def margin(self, t: float) -> float:
        return equi_chord_arc_margin(self, t)

    def truncated(self, order: int) -> "SheetFamily":
        return SheetFamily(self.taylor.truncated(order), self.c, self.N, None)

    def with_n(self, N: int) -> "SheetFamily":
        return replace(self, N=N)


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Boundary data ``b_(+/-1)`` at one time, with mean/deviation and the q-fields if known."""

    t: float
    b_plus: np.ndarray
    b_minus: np.ndarray
    q0: np.ndarray | None = None
    q1_1: np.ndarray | None = None
    q2_1: np.ndarray | None = None

    @property
    def mean(self) -> np.ndarray:
        return 0.5 * (self.b_plus + self.b_minus)

    @property
    def dev(self) -> np.ndarray:
        return 0.5 * (self.b_plus - self.b_minus)


@dataclass(frozen=True, eq=False)
class LagrangeCoeffs:
    """Coefficients of ``L(s, lam) = l0 + l1 lam + l2 lam^2 + l3 lam^3``."""

    l0: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    l3: np.ndarray

    def value(self, lam: float) -> np.ndarray:
        return self.l0 + lam * (self.l1 + lam * (self.l2 + lam * self.l3))

    def derivative(self, lam: float) -> np.ndarray:
        return self.l1 + lam * (2 * self.l2 + 3 * lam * self.l3)


@dataclass
class TaylorDiagnostics:
    """Observed convergence orders of the centered differences (plain, before extrapolation)."""

    observed_order: dict[int, float] = field(default_factory=dict)
    step: float = 0.0


# ---------------------------------------------------------------------------


def expansion_rate(wt0: ScalarField, N: int, fraction: float, eps: float) -> ScalarField:
    """``c = fraction * cbar_N * (|w0| * eta_eps)``.

    ``fraction`` may be 1 (the largest admissible rate); a warning is issued if
    the smoothed rate vanishes somewhere.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if not np.any(wt0.values):
        raise DegenerateStrengthError("strength is identically zero")
    _, cb = an_cn(N)
    c = fraction * float(cb) * mollify(abs(wt0), eps)
    if np.min(c.values) <= 0.0:
        warnings.warn("expansion rate vanishes somewhere; two-sheet operators need min c > 0", RuntimeWarning)
    return c


def taylor_order1(z0: ClosedCurve, wt0: ScalarField) -> tuple[ClosedCurve, ScalarField]:
    """``z^(1) = B_0`` and ``wt^(1) = 0``."""
    return ClosedCurve(z0.grid, br_single(z0, wt0)), _zeros_like_field(wt0)


def _centered(n: int, f_plus: np.ndarray, f_minus: np.ndarray, f_zero: np.ndarray, h: float) -> np.ndarray:
    if n == 1:
        return (f_plus - f_minus) / (2.0 * h)
    return (f_plus - 2.0 * f_zero + f_minus) / (2.0 * h * h)


def _br_coefficients(n: int, family: SheetFamily, lams, h0: float | None, levels: int):
    """Richardson-extrapolated ``n``-th Taylor coefficients of ``B_lam(t)`` for each ``lam``.

    Returns ``({lam: coefficient}, plain estimates per level)``.
    """
    if h0 is None:
        h0 = 1e-2 * family.z0.grid.length
    for t in (h0, -h0):
        margin = equi_chord_arc_margin(family, t)
        if margin <= 0:
            raise GeometryError(f"equi-chord-arc margin {margin:.3e} <= 0 at difference step t = {t}")
    out = {}
    plain = {}
    for lam in lams:
        f0 = br_multi(family, 0.0, lam)
        table = []
        for level in range(levels):
            h = h0 / 2**level
            fp = br_multi(family, h, lam, check_geometry=False)
            fm = br_multi(family, -h, lam, check_geometry=False)
            row = [_centered(n, fp, fm, f0, h)]
            for m in range(1, level + 1):
                factor = 4.0**m
                row.append((factor * row[m - 1] - table[level - 1][m - 1]) / (factor - 1.0))
            table.append(row)
        out[lam] = table[-1][-1]
        plain[lam] = [row[0] for row in table]
    return out, plain


def _observed_order(estimates: list[np.ndarray]) -> float:
    if len(estimates) < 3:
        return float("nan")
    d1 = np.max(np.abs(estimates[0] - estimates[1]))
    d2 = np.max(np.abs(estimates[1] - estimates[2]))
    if d2 == 0.0 or d1 == 0.0:
        return float("inf")
    return float(np.log2(d1 / d2))


def br_taylor_pair(n: int, family: SheetFamily, *, h0: float | None = None, levels: int = 3, diagnostics: TaylorDiagnostics | None = None):
    """``(<B>^(n), {B}^(n))``: lambda-mean over the grid and half-difference of the outer pair."""
    if n == 0:
        b0 = br_single(family.z0, family.strength0)
        zeta0 = family.strength0.values / family.z0.tangent
        _, cb = an_cn(family.N)
        return b0, -float(cb) * np.conj(zeta0)
    if n not in (1, 2):
        raise ValueError("only the first two coefficients are computed numerically")
    fam = family.truncated(n)
    coeffs, plain = _br_coefficients(n, fam, fam.lambda_grid, h0, levels)
    mean = sum(coeffs.values()) / len(coeffs)
    dev = 0.5 * (coeffs[1.0] - coeffs[-1.0])
    if diagnostics is not None:
        plain_mean = [sum(p[k] for p in plain.values()) / len(plain) for k in range(levels)]
        diagnostics.observed_order[n] = _observed_order(plain_mean)
        diagnostics.step = h0 if h0 is not None else 1e-2 * family.z0.grid.length
    return mean, dev


def mean_br_taylor(n: int, family: SheetFamily, *, h0: float | None = None, levels: int = 3, diagnostics: TaylorDiagnostics | None = None) -> np.ndarray:
    """``n``-th Taylor coefficient of the lambda-mean of ``B_lam(t)`` (``n`` in 0, 1, 2).

    The family is truncated to order ``n`` first.  ``n = 0`` returns ``B_0``.
    """
    return br_taylor_pair(n, family, h0=h0, levels=levels, diagnostics=diagnostics)[0]


def taylor_order2(z0: ClosedCurve, wt0: ScalarField, c: ScalarField, meanB1) -> tuple[ClosedCurve, ScalarField]:
    """``2 z^(2) = <B>^(1) + (c w0'/2 + w0 c'/4 + kappa c^2) (z0')^perp`` and
    ``2 wt^(2) = c kappa w0^2 / 4 - (c^2 w0)'``."""
    kappa = curvature(z0).values
    w = wt0.values
    cv = c.values
    dw = spectral_derivative(wt0, 1).values
    dc = spectral_derivative(c, 1).values
    normal_speed = 0.5 * cv * dw + 0.25 * w * dc + kappa * cv * cv
    z2 = 0.5 * (np.asarray(meanB1) + normal_speed * z0.normal)
    wt2 = 0.5 * (0.25 * cv * kappa * w * w - spectral_derivative(ScalarField(c.grid, cv * cv * w), 1).values)
    return ClosedCurve(z0.grid, z2), ScalarField(wt0.grid, wt2)


def q_fields(z0: ClosedCurve, wt0: ScalarField, c: ScalarField, z1: ClosedCurve, devB1, wt2: ScalarField) -> QFields:
    """q-fields of the boundary data.

    ``q^(0) = -(1/2) c w0 (c + i w0/4)``,
    ``q1^(1) = (1/2) c w0 (c z1' - i {B}^(1)) . z0'``,
    ``qtilde = (q^(0) z1' + q1^(1) z0')'``, ``h = 2 (wt^(2) z1' - qtilde)``,
    ``H = (int h . (z0')^perp / int w0^2) w0`` and
    ``q2^(1) = int_0^s (1/2)(h . (z0')^perp - H w0)``.
    """
    grid = z0.grid
    w = wt0.values
    cv = c.values
    dz0 = z0.tangent
    dz1 = z1.tangent
    q0 = -0.5 * cv * w * (cv + 0.25j * w)
    q1 = 0.5 * cv * w * dot(cv * dz1 - 1j * np.asarray(devB1), dz0)
    inner = q0 * dz1 + q1 * dz0
    qtilde = spectral_derivative(ClosedCurve(grid, inner), 1).points
    h = 2.0 * (wt2.values * dz1 - qtilde)
    h_perp = dot(h, 1j * dz0)
    norm = integrate(ScalarField(grid, w * w))
    H = (integrate(ScalarField(grid, h_perp)) / norm) * w if norm > 0 else np.zeros(grid.n)
    integrand = 0.5 * (h_perp - H * w)
    q2 = antiderivative(integrand, grid)
    return QFields(q0=q0, q1_1=q1, q2_1=q2, q2_1_integrand=integrand, qtilde=qtilde, h=h, H=H)


def taylor_order3(z0: ClosedCurve, wt0: ScalarField, qf: QFields, meanB2) -> tuple[ClosedCurve, ScalarField]:
    """``3 z^(3) = <B>^(2) + H (z0')^perp`` and
    ``3 wt^(3) = -h . z0' - kappa int_0^s (h . (z0')^perp - H w0)``."""
    grid = z0.grid
    w = wt0.values
    if integrate(ScalarField(grid, w * w)) <= 0:
        raise DegenerateStrengthError("int w0^2 = 0: the normal correction H is undefined")
    dz0 = z0.tangent
    kappa = curvature(z0).values
    z3 = (np.asarray(meanB2) + qf.H * (1j * dz0)) / 3.0
    cumulative = antiderivative(dot(qf.h, 1j * dz0) - qf.H * w, grid)
    wt3 = (-dot(qf.h, dz0) - kappa * cumulative) / 3.0
    return ClosedCurve(grid, z3), ScalarField(grid, wt3)


def construct_family(
    z0: ClosedCurve,
    wt0: ScalarField,
    c: ScalarField,
    N: int = 1,
    *,
    h0: float | None = None,
    levels: int = 3,
    diagnostics: TaylorDiagnostics | None = None,
) -> SheetFamily:
    """Run the order-1, 2 and 3 construction and return the sheet family.

    The Taylor coefficients are built on the two-sheet family (``N = 1``);
    families with more sheets reuse them.
    """
    zero = _zeros_like_field(wt0)
    z1, wt1 = taylor_order1(z0, wt0)
    fam1 = SheetFamily(TaylorCurve((z0, z1), (zero, wt1), wt0), c, 1)
    meanB1, devB1 = br_taylor_pair(1, fam1, h0=h0, levels=levels, diagnostics=diagnostics)
    z2, wt2 = taylor_order2(z0, wt0, c, meanB1)
    qf = q_fields(z0, wt0, c, z1, devB1, wt2)
    fam2 = SheetFamily(TaylorCurve((z0, z1, z2), (zero, wt1, wt2), wt0), c, 1)
    meanB2 = mean_br_taylor(2, fam2, h0=h0, levels=levels, diagnostics=diagnostics)
    z3, wt3 = taylor_order3(z0, wt0, qf, meanB2)
    taylor = TaylorCurve((z0, z1, z2, z3), (zero, wt1, wt2, wt3), wt0)
    return SheetFamily(taylor, c, N, qf)


def zone_map(family: SheetFamily, t: float, lam: float) -> ClosedCurve:
    """``x_lam(t) = z(t) + lam t c (z0')^perp``."""
    if t < 0:
        raise ValueError("zone map needs t >= 0")
    return family.x(t, lam)


def equi_chord_arc_margin(family: SheetFamily, t: float) -> float:
    """``min |x_mu(s+xi) - x_lam(s)| - (1/4) sqrt(CA^-2 xi^2 + t^2 c(s)^2 (mu-lam)^2)`` over the grid.

    Pairs where the right-hand side vanishes (coincident points at ``t = 0``)
    are excluded.
    """
    grid = family.z0.grid
    inv_ca = 1.0 / family.chord_arc
    xi = grid.offsets()
    cv = family.c.values
    sheets = {lam: family.x(t, lam).points for lam in family.lambda_grid}
    idx = (np.arange(grid.n)[:, None] + np.arange(grid.n)[None, :]) % grid.n
    best = np.inf
    for lam, xl in sheets.items():
        for mu, xm in sheets.items():
            lhs = np.abs(xm[idx] - xl[:, None])
            rhs = 0.25 * np.sqrt((inv_ca * xi[None, :]) ** 2 + (t * cv[:, None] * (mu - lam)) ** 2)
            live = rhs > 0
            if np.any(live):
                best = min(best, float(np.min((lhs - rhs)[live])))
    return best


def boundary_data(family: SheetFamily, t: float) -> BoundaryData:
    """``b_lam = (1/|L|)(dt_wt x_lam' - w (dt_x_lam - B_lam))`` for the outer pair ``lam = +/-1``."""
    size = len(family.lambda_grid)
    w = family.strength(t).values
    dwt = family.taylor.dwt_dt(t).values
    dz = family.taylor.dz_dt(t)
    out = {}
    for lam in (1.0, -1.0):
        x = family.x(t, lam)
        dt_x = dz + lam * family.opening()
        b = br_multi(family, t, lam)
        out[lam] = (dwt * x.tangent - w * (dt_x - b)) / size
    qf = family.qfields
    return BoundaryData(
        t=t,
        b_plus=out[1.0],
        b_minus=out[-1.0],
        q0=None if qf is None else qf.q0,
        q1_1=None if qf is None else qf.q1_1,
        q2_1=None if qf is None else qf.q2_1,
    )


def pointwise_residual(family: SheetFamily, t: float) -> float:
    """``sup_s |<b>(t) - t (q z')'(t)|`` with ``q = q^(0) + t (q1^(1) + i q2^(1))``."""
    if family.qfields is None:
        raise ValueError("family carries no q-fields; build it with construct_family")
    data = boundary_data(family, t)
    z = family.taylor.z_at(t)
    flux = ClosedCurve(z.grid, family.qfields.q_at(t) * z.tangent)
    residual = data.mean - t * spectral_derivative(flux, 1).points
    return float(np.max(np.abs(residual)))


def lagrange_coeffs(Gp, Gm, dGp, dGm) -> LagrangeCoeffs:
    """Cubic in ``lam`` matching ``G`` and ``dG/dlam`` at ``lam = +1`` and ``lam = -1``."""
    Gp, Gm, dGp, dGm = (np.asarray(a, dtype=float) for a in (Gp, Gm, dGp, dGm))
    g_mean, g_dev = 0.5 * (Gp + Gm), 0.5 * (Gp - Gm)
    d_mean, d_dev = 0.5 * (dGp + dGm), 0.5 * (dGp - dGm)
    return LagrangeCoeffs(
        l0=g_mean - 0.5 * d_dev,
        l1=0.5 * (3.0 * g_dev - d_mean),
        l2=0.5 * d_dev,
        l3=0.5 * (d_mean - g_dev),
    )


def reynolds_leading(c: ScalarField, wt0: ScalarField, N: int, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Leading Reynolds stress on sheet ``lam``.

    Returns ``(|traceless part|, trace) = ((|lam|/|L|) c |w0|, -2 (|lam|/|L|) cbar_N w0^2)``;
    the trace is ``2 {b}^(0) . z0'`` with ``{b}^(0) = -(|lam|/|L|) w0 (cbar_N w0 + i c) z0'``.
    """
    _, cb = an_cn(N)
    size = 2 * int(N)
    share = abs(lam) / size
    w = wt0.values
    return share * c.values * np.abs(w), -2.0 * share * float(cb) * w * w
