"""Periodic-grid numerics for closed plane curves and scalar fields.

Everything lives on a uniform grid of the periodic parameter domain
``T = R / lZ``.  Curves are complex samples (``x + iy``), scalar fields are
real samples.  Derivatives use trigonometric interpolation and integrals use
the trapezoidal rule, which is spectrally accurate for smooth periodic data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "CurveError",
    "IrregularCurveError",
    "NotChordArcError",
    "PeriodicGrid",
    "ScalarField",
    "ClosedCurve",
    "spectral_derivative",
    "integrate",
    "antiderivative",
    "arc_length_reparametrize",
    "chord_arc_constant",
    "curvature",
    "holder_seminorm",
    "mollify",
    "bump",
    "fourier_eval",
    "resample",
    "dot",
]

CHORD_ARC_FLOOR = 1e-8
IRREGULAR_SPEED = 1e-8


class CurveError(ValueError):
    """Base class for curve-level precondition failures."""


class IrregularCurveError(CurveError):
    """The curve has (numerically) vanishing speed somewhere."""


class NotChordArcError(CurveError):
    """Some chord/arc ratio fell below the degeneracy floor."""


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid ``s_j = j*length/n`` on the circle of circumference ``length``."""

    length: float
    n: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"grid length must be positive and finite, got {self.length}")
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"grid node count must be an even integer >= 8, got {self.n}")
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "n", int(self.n))

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def offsets(self) -> np.ndarray:
        """Signed shifts ``xi_k = k*spacing`` reduced to ``[-l/2, l/2)``, in roll order k = 0..n-1."""
        k = np.arange(self.n)
        k = np.where(k >= self.n // 2, k - self.n, k)
        return k * self.spacing


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real samples of a periodic function on ``grid``."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise TypeError("ScalarField values must be real")
        v = v.astype(float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("ScalarField values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_function(cls, grid: PeriodicGrid, f: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        return cls(grid, np.broadcast_to(f(grid.nodes), (grid.n,)))

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.n, float(value)))

    def _other(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / self._other(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __abs__(self):
        return ScalarField(self.grid, np.abs(self.values))

    def __len__(self) -> int:
        return self.grid.n


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """Complex samples ``z(s_j)`` of a closed curve (periodic in ``s``)."""

    grid: PeriodicGrid
    points: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.points, dtype=complex)
        if p.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} points, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("curve points must be finite")
        object.__setattr__(self, "points", _frozen(p))

    @classmethod
    def from_function(cls, grid: PeriodicGrid, f: Callable[[np.ndarray], np.ndarray]) -> "ClosedCurve":
        return cls(grid, f(grid.nodes))

    @classmethod
    def circle(cls, n: int, radius: float = 1.0, center: complex = 0.0) -> "ClosedCurve":
        """Arc-length parametrized, positively oriented circle."""
        grid = PeriodicGrid(2.0 * np.pi * radius, n)
        s = grid.nodes
        return cls(grid, center + radius * np.exp(1j * s / radius))

    @property
    def tangent(self) -> np.ndarray:
        """``d z / d s`` by trigonometric interpolation."""
        return _deriv(self.points, self.grid, 1)

    @property
    def normal(self) -> np.ndarray:
        """``(d z / d s)^perp = i dz/ds``; points inward for a positively oriented curve."""
        return 1j * self.tangent

    def signed_area(self) -> float:
        """Enclosed area, positive for counter-clockwise orientation."""
        z = self.points
        return 0.5 * integrate_values(np.imag(np.conj(z) * self.tangent), self.grid)

    def reversed(self) -> "ClosedCurve":
        """Same image traversed backwards: ``s -> -s``."""
        return ClosedCurve(self.grid, np.roll(self.points[::-1], 1))

    def translated(self, shift: complex) -> "ClosedCurve":
        return ClosedCurve(self.grid, self.points + shift)

    def __len__(self) -> int:
        return self.grid.n


Sampled = Union[ScalarField, ClosedCurve]


def dot(a, b):
    """Euclidean dot product of complex-encoded vectors, ``Re(a * conj(b))``."""
    return np.real(a * np.conj(b))


def _deriv(values: np.ndarray, grid: PeriodicGrid, order: int) -> np.ndarray:
    coeffs = np.fft.fft(values)
    mult = (1j * grid.wavenumbers) ** order
    if order % 2:
        mult[grid.n // 2] = 0.0
    out = np.fft.ifft(coeffs * mult)
    return out.real if not np.iscomplexobj(values) else out


def spectral_derivative(f: Sampled, order: int = 1) -> Sampled:
    """Derivative of order 1, 2 or 3 with respect to the grid parameter.

    Exact for trigonometric polynomials of degree below ``n/2``.  The Nyquist
    mode is dropped for odd orders so real data stay real.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
    if isinstance(f, ClosedCurve):
        return ClosedCurve(f.grid, _deriv(f.points, f.grid, order))
    if isinstance(f, ScalarField):
        return ScalarField(f.grid, _deriv(f.values, f.grid, order))
    raise TypeError(f"cannot differentiate {type(f).__name__}")


def integrate_values(values: np.ndarray, grid: PeriodicGrid):
    return np.sum(values) * grid.spacing


def integrate(f: ScalarField) -> float:
    """Trapezoidal rule over one period."""
    return float(integrate_values(f.values, f.grid))


def antiderivative(values: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Samples of ``F(s) = int_0^s g`` for periodic ``g``.

    The mean of ``g`` contributes the linear part ``mean * s``; the zero-mean
    part is integrated spectrally, so ``F`` is exact to roundoff for band-limited
    data.  The base point is ``s = 0``.
    """
    values = np.asarray(values)
    mean = values.mean()
    coeffs = np.fft.fft(values - mean)
    k = grid.wavenumbers
    with np.errstate(divide="ignore", invalid="ignore"):
        coeffs = np.where(k == 0, 0.0, coeffs / (1j * k))
    coeffs[grid.n // 2] = 0.0
    periodic = np.fft.ifft(coeffs)
    if not np.iscomplexobj(values):
        periodic = periodic.real
    return periodic - periodic[0] + mean * grid.nodes


def fourier_eval(values: np.ndarray, grid: PeriodicGrid, s, derivative: int = 0, *, chunk: int = 256) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``values`` (or a derivative) at arbitrary points.

    ``s`` may be complex, in which case the interpolant is continued analytically
    off the real axis.  Coefficients below the roundoff floor are dropped so that
    the exponential growth of high modes off-axis does not amplify noise.
    """
    values = np.asarray(values)
    s = np.asarray(s)
    n = grid.n
    coeffs = np.fft.fft(values) / n
    k = grid.wavenumbers.astype(complex)
    # split the Nyquist mode symmetrically so real data stay real on the real axis
    nyq = coeffs[n // 2]
    coeffs = np.append(coeffs, 0.5 * nyq)
    coeffs[n // 2] = 0.5 * nyq
    k = np.append(k, -k[n // 2])
    k[n // 2] = abs(k[n // 2])
    floor = 1e-15 * np.max(np.abs(coeffs)) if coeffs.size else 0.0
    keep = np.abs(coeffs) > floor
    coeffs, k = coeffs[keep], k[keep]
    if derivative:
        coeffs = coeffs * (1j * k) ** derivative
    flat = s.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    for start in range(0, flat.size, chunk):
        block = flat[start : start + chunk]
        out[start : start + chunk] = np.exp(1j * np.outer(block, k)) @ coeffs
    out = out.reshape(s.shape)
    if not np.iscomplexobj(values) and not np.iscomplexobj(s):
        return out.real
    return out


def resample(f: Sampled, n: int) -> Sampled:
    """Trigonometric resampling onto an ``n``-node grid of the same period."""
    grid = PeriodicGrid(f.grid.length, n)
    if n == f.grid.n:
        return f
    if isinstance(f, ClosedCurve):
        return ClosedCurve(grid, fourier_eval(f.points, f.grid, grid.nodes))
    return ScalarField(grid, fourier_eval(f.values, f.grid, grid.nodes))


def arc_length_reparametrize(curve: ClosedCurve, n: int | None = None, *, newton_steps: int = 8) -> ClosedCurve:
    """Resample ``curve`` at equal arc-length spacing.

    The cumulative arc length is inverted by monotone (piecewise linear)
    interpolation and then polished with Newton steps on the spectral
    representation, so the result has ``|dz/ds| = 1`` to roundoff for
    well-resolved input.  The returned grid period is the curve length and
    the orientation is unchanged.
    """
    grid = curve.grid
    n_out = grid.n if n is None else n
    speed = np.abs(curve.tangent)
    if speed.min() < IRREGULAR_SPEED * max(speed.mean(), 1e-300):
        raise IrregularCurveError(f"curve is not regular: min |dz/ds| = {speed.min():.3e}")
    total = float(integrate_values(speed, grid))
    cumulative = antiderivative(speed, grid)
    out_grid = PeriodicGrid(total, n_out)
    target = out_grid.nodes
    # monotone inversion on the nodes (cumulative arclength is strictly increasing)
    knots_s = np.append(grid.nodes, grid.length)
    knots_sigma = np.append(cumulative, total)
    s = np.interp(target, knots_sigma, knots_s)
    periodic = cumulative - (total / grid.length) * grid.nodes
    for _ in range(newton_steps):
        sigma = (total / grid.length) * s + fourier_eval(periodic, grid, s)
        ds = fourier_eval(curve.points, grid, s, derivative=1)
        step = (sigma - target) / np.abs(ds)
        s = s - step
        if np.max(np.abs(step)) < 1e-15 * grid.length:
            break
    return ClosedCurve(out_grid, fourier_eval(curve.points, grid, s))


def _shift_pairs(values: np.ndarray, grid: PeriodicGrid):
    """Yield ``(xi, f(s+xi) - f(s))`` for shifts ``k = 1..n/2``."""
    for k in range(1, grid.n // 2 + 1):
        yield k * grid.spacing, np.roll(values, -k) - values


def chord_arc_constant(curve: ClosedCurve) -> float:
    """Grid estimate of ``sup |xi| / |z(s+xi) - z(s)|`` with ``xi`` reduced to ``[-l/2, l/2]``.

    Raises :class:`NotChordArcError` when a chord/arc ratio falls below
    ``1e-8`` (the sample self-intersects or nearly so).
    """
    worst = np.inf
    for xi, diff in _shift_pairs(curve.points, curve.grid):
        ratio = np.min(np.abs(diff)) / xi
        worst = min(worst, ratio)
    if worst < CHORD_ARC_FLOOR:
        raise NotChordArcError(f"chord/arc ratio {worst:.3e} below floor {CHORD_ARC_FLOOR:g}")
    return float(1.0 / worst)


def curvature(curve: ClosedCurve) -> ScalarField:
    """Signed curvature ``Im(conj(z') z'') / |z'|^3``.

    For an arc-length parametrization this is ``z'' . (z')^perp``; it is
    positive on a counter-clockwise circle.
    """
    d1 = curve.tangent
    d2 = _deriv(curve.points, curve.grid, 2)
    return ScalarField(curve.grid, np.imag(np.conj(d1) * d2) / np.abs(d1) ** 3)


def holder_seminorm(f: Sampled, alpha: float) -> float:
    """Largest Hölder quotient ``|f(s+xi) - f(s)| / |xi|^alpha`` over grid pairs.

    This is a lower bound for the true seminorm; refining the grid can only
    add pairs.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    values = f.points if isinstance(f, ClosedCurve) else f.values
    best = 0.0
    for xi, diff in _shift_pairs(values, f.grid):
        best = max(best, float(np.max(np.abs(diff))) / xi**alpha)
    return best


def bump(x: np.ndarray) -> np.ndarray:
    """Unnormalized bump ``exp(-1/(1 - x^2))`` supported on ``(-1, 1)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


def mollify(f: ScalarField, eps: float) -> ScalarField:
    """Periodic convolution with the bump mollifier of half-width ``eps``.

    The discrete kernel is normalized to unit mass under the trapezoidal rule,
    so constants are preserved and ``integrate`` is unchanged up to roundoff.
    When ``eps`` is below the grid spacing the kernel degenerates to the
    identity.
    """
    grid = f.grid
    if not 0.0 < eps < grid.length / 2:
        raise ValueError(f"mollifier width must lie in (0, l/2), got {eps}")
    kernel = bump(grid.offsets() / eps)
    if kernel.sum() == 0.0:
        kernel[0] = 1.0
    kernel /= kernel.sum()
    smoothed = np.fft.ifft(np.fft.fft(f.values) * np.fft.fft(kernel)).real
    return ScalarField(grid, smoothed)
