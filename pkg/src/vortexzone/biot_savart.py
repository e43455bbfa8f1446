"""Cauchy-type kernels and Birkhoff–Rott operators for closed vortex sheets.

Conventions: points of the plane are complex numbers, ``x^perp = i x`` and
``a . b = Re(a conj(b))``.  The velocity of a sheet ``z`` with strength
``w`` (vorticity per unit parameter) is

    v(x)^* = (1 / 2 pi i) int w(s') / (x - z(s')) ds'.

Principal values on the sheet are always computed through subtracted
integrands whose diagonal limits are known analytically.  Sheet-to-sheet
integrals, whose integrands have a pole a distance O(t) away from the real
parameter axis, are handled by subtracting that pole exactly: the root
``z(s_p) = x`` is located by Newton's method in complex ``s`` and the residue
is added back with a prescribed index.  This keeps every quadrature
spectrally accurate as the sheets approach each other, and gives the analytic
continuation of the multi-sheet operator through ``t = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Protocol, Sequence

import numpy as np

from .curve import ClosedCurve, PeriodicGrid, ScalarField, fourier_eval, integrate_values, _deriv

__all__ = [
    "SingularityError",
    "ProximityError",
    "GeometryError",
    "Sheet",
    "TraceValues",
    "KernelWeight",
    "cauchy_kernel",
    "blob_kernel",
    "velocity_at",
    "br_single",
    "br_multi",
    "theta",
    "theta_mean",
    "plemelj_traces",
    "circulation",
    "winding_index",
    "winding_numbers",
    "bernoulli_jump",
    "pressure_jump",
    "weighted_hilbert",
]

TWO_PI_I = 2j * np.pi
NEAR_SPACINGS = 8.0


class SingularityError(ZeroDivisionError):
    """Kernel evaluated at its singularity."""


class ProximityError(ValueError):
    """Evaluation point too close to a sheet for plain quadrature."""


class GeometryError(ValueError):
    """Sheets touch, cross, or the pole search failed."""


@dataclass(frozen=True, eq=False)
class Sheet:
    """A vortex sheet: curve, strength per unit parameter, and ansatz weight ``1/|Lambda|``."""

    curve: ClosedCurve
    strength: ScalarField
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.curve.grid != self.strength.grid:
            raise ValueError("sheet curve and strength must share one grid")

    @property
    def zeta(self) -> np.ndarray:
        """``w / dz/ds``; the velocity jump across the sheet is ``-weight * conj(zeta)``."""
        return self.strength.values / self.curve.tangent


@dataclass(frozen=True, eq=False)
class TraceValues:
    """One-sided limits of the velocity on a sheet.

    ``plus`` is the limit from the ``+eps * (dz/ds)^perp`` side, which is the
    inside of a positively oriented curve.
    """

    plus: np.ndarray
    minus: np.ndarray
    mean: np.ndarray
    jump: np.ndarray


class _Sampler(Protocol):
    def __call__(self, s: np.ndarray, xi: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class KernelWeight:
    """A bounded weight ``Phi(s, xi)`` for the weighted Hilbert transform."""

    sampler: _Sampler

    def __call__(self, s, xi):
        return self.sampler(np.asarray(s), np.asarray(xi))

    @classmethod
    def phi_zero(cls, curve: ClosedCurve) -> "KernelWeight":
        """``Phi_0(s, xi) = xi / (z(s+xi) - z(s))`` with the limit ``1/z'(s)`` at ``xi = 0``."""
        grid = curve.grid
        dz = curve.tangent

        def sample(s, xi):
            s, xi = np.broadcast_arrays(s, xi)
            z_s = _sample(curve.points, grid, s)
            z_t = _sample(curve.points, grid, s + xi)
            dz_s = _sample(dz, grid, s)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = xi / (z_t - z_s)
            return np.where(xi == 0, 1.0 / dz_s, out)

        return cls(sample)


def _sample(values: np.ndarray, grid: PeriodicGrid, s: np.ndarray) -> np.ndarray:
    """Values at parameter points, by indexing when they sit on nodes."""
    q = np.asarray(s) / grid.spacing
    idx = np.rint(q)
    if np.all(np.abs(q - idx) < 1e-9):
        return values[idx.astype(int) % grid.n]
    return fourier_eval(values, grid, s)


def cauchy_kernel(x):
    """``K(x) = 1 / (2 pi i x)``."""
    x = np.asarray(x, dtype=complex)
    if np.any(x == 0):
        raise SingularityError("Cauchy kernel is singular at x = 0")
    out = 1.0 / (TWO_PI_I * x)
    return out[()] if out.ndim == 0 else out


def blob_kernel(x, delta: float):
    """``K_delta(x) = K(x) |x|^2 / (|x|^2 + delta^2) = conj(x) / (2 pi i (|x|^2 + delta^2))``."""
    if delta < 0:
        raise ValueError("blob radius must be nonnegative")
    x = np.asarray(x, dtype=complex)
    r2 = np.abs(x) ** 2 + delta * delta
    if np.any(r2 == 0):
        raise SingularityError("blob kernel with delta = 0 is singular at x = 0")
    out = np.conj(x) / (TWO_PI_I * r2)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# pole-subtracted Cauchy integrals


@dataclass(frozen=True, eq=False)
class _SheetData:
    grid: PeriodicGrid
    z: np.ndarray
    dz: np.ndarray
    w: np.ndarray

    @classmethod
    def of(cls, curve: ClosedCurve, strength: ScalarField) -> "_SheetData":
        return cls(curve.grid, curve.points, curve.tangent, strength.values)


def _locate_pole(data: _SheetData, targets: np.ndarray, base: np.ndarray, tol: float = 1e-14, max_iter: int = 40):
    """Solve ``z(s_p) = x`` for complex ``s_p`` starting from node ``base``.

    Works on the displacement ``d = s_p - s_base`` and uses ``expm1`` so the
    residual ``z(s_base + d) - z(s_base)`` keeps full relative precision when
    ``d`` is tiny.
    """
    grid = data.grid
    n = grid.n
    coeffs = np.fft.fft(data.z) / n
    k = grid.wavenumbers.astype(complex)
    coeffs[n // 2] = 0.0
    floor = 1e-15 * np.max(np.abs(coeffs))
    keep = np.abs(coeffs) > floor
    coeffs, k = coeffs[keep], k[keep]
    s0 = grid.nodes[base]
    phase = np.exp(1j * np.outer(s0, k)) * coeffs
    gap = targets - data.z[base]
    d = gap / data.dz[base]
    scale = np.maximum(np.abs(gap), 1e-300)
    for _ in range(max_iter):
        rot = np.expm1(1j * d[:, None] * k)
        f = (phase * rot).sum(axis=1) - gap
        fp = (phase * (rot + 1.0) * (1j * k)).sum(axis=1)
        step = f / fp
        d = d - step
        if np.all(np.abs(step) <= tol * np.maximum(np.abs(d), grid.spacing * 1e-3)):
            break
    else:
        if np.any(np.abs(f) > 1e-8 * np.maximum(scale, grid.spacing)):
            raise GeometryError("pole search did not converge; sheets may cross")
    return s0 + d


def _pole_subtracted(data: _SheetData, targets: np.ndarray, base: np.ndarray, index) -> np.ndarray:
    """``(1 / 2 pi i) int w(s') / (x - z(s')) ds'`` for targets near the sheet.

    With ``zeta_p = w(s_p) / z'(s_p)`` the integrand
    ``(w - zeta_p z') / (z - x)`` is pole-free and the residue contributes
    ``-zeta_p * index``, ``index`` being the winding number of the sheet
    around the target (or a prescribed branch choice).
    """
    grid = data.grid
    sp = _locate_pole(data, targets, base)
    zeta_p = fourier_eval(data.w, grid, sp) / fourier_eval(data.z, grid, sp, derivative=1)
    num = data.w[None, :] - zeta_p[:, None] * data.dz[None, :]
    den = data.z[None, :] - targets[:, None]
    regular = np.sum(num / den, axis=1) * grid.spacing
    return -regular / TWO_PI_I - zeta_p * index


def _plain(data: _SheetData, targets: np.ndarray) -> np.ndarray:
    den = targets[:, None] - data.z[None, :]
    return np.sum(data.w[None, :] / den, axis=1) * data.grid.spacing / TWO_PI_I


def _nearest(data: _SheetData, targets: np.ndarray):
    dist = np.abs(targets[:, None] - data.z[None, :])
    base = np.argmin(dist, axis=1)
    return base, dist[np.arange(targets.size), base]


def _orientation(data: _SheetData) -> float:
    area = 0.5 * integrate_values(np.imag(np.conj(data.z) * data.dz), data.grid)
    return 1.0 if area >= 0 else -1.0


def velocity_at(sheets: Sequence[Sheet], x, *, allow_near: bool = False) -> np.ndarray:
    """Velocity ``v(x) = sum_k weight_k v_k(x)`` induced by the sheets.

    Points farther than eight local node spacings from a sheet use the plain
    trapezoidal sum.  Closer points use the pole-subtracted form with the
    winding index taken from the side of the sheet the point lies on.
    Within half a node spacing a :class:`ProximityError` is raised unless
    ``allow_near`` is set.
    """
    x = np.asarray(x, dtype=complex)
    flat = x.reshape(-1)
    total = np.zeros(flat.shape, dtype=complex)
    for sheet in sheets:
        data = _SheetData.of(sheet.curve, sheet.strength)
        base, dist = _nearest(data, flat)
        local = np.abs(data.dz[base]) * data.grid.spacing
        too_close = dist < 0.5 * local
        if np.any(too_close) and not allow_near:
            raise ProximityError(
                f"{int(too_close.sum())} evaluation point(s) within half a grid spacing of a sheet"
            )
        near = dist < NEAR_SPACINGS * local
        conj_v = np.empty(flat.shape, dtype=complex)
        if np.any(~near):
            conj_v[~near] = _plain(data, flat[~near])
        if np.any(near):
            targets = flat[near]
            sp = _locate_pole(data, targets, base[near])
            # a root above the real axis lies on the (z')^perp side
            side = np.imag(sp - data.grid.nodes[base[near]]) > 0
            orient = _orientation(data)
            index = np.where(side, 1.0, 0.0) if orient > 0 else np.where(side, 0.0, -1.0)
            conj_v[near] = _pole_subtracted(data, targets, base[near], index)
        total += sheet.weight * np.conj(conj_v)
    return total.reshape(x.shape)


# ---------------------------------------------------------------------------
# Birkhoff–Rott operators


def _br_star(z: np.ndarray, dz: np.ndarray, d2z: np.ndarray, w: np.ndarray, dw: np.ndarray, grid: PeriodicGrid, theta_self: float = 0.5) -> np.ndarray:
    """Conjugate self-induced BR operator with subtracted integrands.

    ``zeta/(2 pi i) int (z'(s')-z'(s))/(z(s')-z(s)) - 1/(2 pi i) int (w(s')-w(s))/(z(s')-z(s)) - theta zeta``
    with diagonal limits ``z''/z'`` and ``w'/z'``.
    """
    n = grid.n
    den = z[None, :] - z[:, None]
    np.fill_diagonal(den, 1.0)
    g1 = (dz[None, :] - dz[:, None]) / den
    g2 = (w[None, :] - w[:, None]) / den
    diag = np.arange(n)
    g1[diag, diag] = d2z / dz
    g2[diag, diag] = dw / dz
    i1 = g1.sum(axis=1) * grid.spacing
    i2 = g2.sum(axis=1) * grid.spacing
    zeta = w / dz
    return zeta * i1 / TWO_PI_I - i2 / TWO_PI_I - theta_self * zeta


def br_single(z0: ClosedCurve, strength: ScalarField) -> np.ndarray:
    """Birkhoff–Rott velocity ``B_0(s)`` of a single sheet (mean of the two traces)."""
    if z0.grid != strength.grid:
        raise ValueError("curve and strength must share one grid")
    from .curve import chord_arc_constant

    chord_arc_constant(z0)
    grid = z0.grid
    z = z0.points
    dz = _deriv(z, grid, 1)
    d2z = _deriv(z, grid, 2)
    w = strength.values
    dw = _deriv(w, grid, 1)
    return np.conj(_br_star(z, dz, d2z, w, dw, grid))


def theta(lam, mu):
    """``theta_{lam,mu} = (1 + sgn(lam - mu)) / 2``; exact for Fraction inputs."""
    if lam > mu:
        return 1
    if lam < mu:
        return 0
    return Fraction(1, 2) if isinstance(lam, (int, Fraction)) else 0.5


def theta_mean(lam, grid: Sequence) -> Fraction | float:
    """``(1/|Lambda|) sum_mu theta_{lam,mu}``; equals ``1/2 + lam * cbar_N`` on the standard grid."""
    total = sum(theta(lam, mu) for mu in grid)
    if isinstance(total, (int, Fraction)):
        return Fraction(total) / len(grid)
    return total / len(grid)


class _Family(Protocol):
    lambda_grid: tuple

    def x(self, t: float, lam: float) -> ClosedCurve: ...

    def strength(self, t: float) -> ScalarField: ...

    def margin(self, t: float) -> float: ...

    @property
    def z0(self) -> ClosedCurve: ...

    @property
    def strength0(self) -> ScalarField: ...


def _match_lambda(lam: float, grid: Sequence[float]) -> float:
    for mu in grid:
        if abs(float(mu) - float(lam)) < 1e-12:
            return float(mu)
    raise ValueError(f"lambda = {lam} is not on the grid {tuple(grid)}")


def br_multi(family: _Family, t: float, lam: float, *, check_geometry: bool = True) -> np.ndarray:
    """Birkhoff–Rott velocity ``B_lam(t, s)`` of sheet ``lam`` in a sheet family.

    ``B_lam^* = (1/|L|) sum_mu [ own or cross term ]`` where the ``mu = lam``
    term is the self-induced operator and the ``mu != lam`` terms are Cauchy
    integrals over sheet ``mu`` evaluated at ``x_lam(s)`` with branch index
    ``theta_{lam,mu}``.  At ``t = 0`` the limit ``B_0 - lam cbar_N conj(zeta_0)``
    is returned; for ``t < 0`` the result is the analytic continuation of the
    ``t > 0`` branch (used for centered differences in ``t``).
    """
    grid_l = [float(m) for m in family.lambda_grid]
    lam = _match_lambda(lam, grid_l)
    size = len(grid_l)
    if t == 0:
        z0, w0 = family.z0, family.strength0
        b0 = br_single(z0, w0)
        zeta0 = w0.values / z0.tangent
        shift = theta_mean(lam, grid_l) - 0.5
        return b0 - shift * np.conj(zeta0)
    if check_geometry and t > 0:
        margin = family.margin(t)
        if margin <= 0:
            raise GeometryError(f"equi-chord-arc margin {margin:.3e} <= 0 at t = {t}")
    strength = family.strength(t)
    target = family.x(t, lam)
    grid = target.grid
    z = target.points
    w = strength.values
    dw = _deriv(w, grid, 1)
    base = np.arange(grid.n)
    total = np.zeros(grid.n, dtype=complex)
    for mu in grid_l:
        if mu == lam:
            term = _br_star(z, target.tangent, _deriv(z, grid, 2), w, dw, grid)
        else:
            other = family.x(t, mu)
            data = _SheetData.of(other, strength)
            term = _pole_subtracted(data, z, base, theta(lam, mu))
        total += term
    return np.conj(total) / size


def plemelj_traces(brvalue, zeta, sheet_count: int) -> TraceValues:
    """Traces ``v^(+/-) = B -/+ conj(zeta) / (2 sheet_count)``."""
    brvalue = np.asarray(brvalue, dtype=complex)
    half = np.conj(np.asarray(zeta, dtype=complex)) / (2.0 * sheet_count)
    plus = brvalue - half
    minus = brvalue + half
    return TraceValues(plus=plus, minus=minus, mean=brvalue.copy(), jump=plus - minus)


def circulation(field: Callable[[np.ndarray], np.ndarray], test_curve: ClosedCurve) -> float:
    """``oint v . dx`` along ``test_curve`` by the trapezoidal rule."""
    v = np.asarray(field(test_curve.points))
    return float(integrate_values(np.real(v * np.conj(test_curve.tangent)), test_curve.grid))


def winding_numbers(curve: ClosedCurve, points) -> np.ndarray:
    """Winding number of the sampled polygon around each point (integers)."""
    pts = np.asarray(points, dtype=complex).reshape(-1)
    z = curve.points
    nxt = np.roll(z, -1)
    out = np.empty(pts.size, dtype=int)
    for start in range(0, pts.size, 512):
        block = pts[start : start + 512, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            # points on a vertex give a non-finite turn; callers treat them separately
            turn = np.angle((nxt[None, :] - block) / (z[None, :] - block)).sum(axis=1)
        out[start : start + 512] = np.where(np.isfinite(turn), np.rint(turn / (2 * np.pi)), 0).astype(int)
    return out.reshape(np.shape(points))


def winding_index(curve: ClosedCurve, x: complex) -> int:
    """Winding number of ``curve`` around ``x``: 1 inside and 0 outside a positively oriented Jordan curve."""
    return int(winding_numbers(curve, np.array([x]))[0])


def bernoulli_jump(curve: ClosedCurve, strength: ScalarField, brvalue, dt_x, dt_wt, sheet_count: int) -> np.ndarray:
    """``(1/|L|) (dt_wt - w Re_{x'}(dt_x - B))`` with ``Re_a(b) = Re(b / a)``."""
    dx = curve.tangent
    wt = dt_wt.values if isinstance(dt_wt, ScalarField) else np.asarray(dt_wt, dtype=float)
    rel = np.real((np.asarray(dt_x) - np.asarray(brvalue)) / dx)
    return (wt - strength.values * rel) / sheet_count


def pressure_jump(family: _Family, t: float, lam: float, dt_x, dt_wt) -> np.ndarray:
    """Pressure jump ``[p]_lam`` across sheet ``lam`` of the family at time ``t``."""
    b = br_multi(family, t, lam)
    return bernoulli_jump(family.x(t, lam), family.strength(t), b, dt_x, dt_wt, len(family.lambda_grid))


def weighted_hilbert(f: ScalarField | ClosedCurve, phi: KernelWeight) -> np.ndarray:
    """``T_Phi f(s) = (1/2 pi i) int (f(s+xi) - f(s))/xi * Phi(s, xi) dxi`` with ``xi`` in ``[-l/2, l/2)``.

    ``f`` may be real (a field) or complex (a curve).  The coincident node
    ``xi = 0`` uses ``f'(s)``.
    """
    grid = f.grid
    values = f.points if isinstance(f, ClosedCurve) else f.values
    s = grid.nodes[:, None]
    xi = grid.offsets()[None, :]
    shifted = np.stack([np.roll(values, -k) for k in range(grid.n)], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = (shifted - values[:, None]) / xi
    quotient[:, 0] = _deriv(values, grid, 1)
    weights = np.asarray(phi(s, xi), dtype=complex)
    return (quotient * weights).sum(axis=1) * grid.spacing / TWO_PI_I
