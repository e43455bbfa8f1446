"""Energy-dissipation functionals and the flat fan subsolution.

Finite-N combinatorics (the constants ``a_N``, ``cbar_N``, the lambda grid,
fan jumps) are done in exact rational arithmetic; only integrals of a
genuine strength field use floating-point quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

from .biot_savart import br_single
from .curve import ClosedCurve, PeriodicGrid, ScalarField, dot, fourier_eval, integrate, mollify

__all__ = [
    "INFINITE",
    "an_cn",
    "lambda_grid",
    "W_functional",
    "W_max",
    "W_lower_bound",
    "LowerBoundReport",
    "DissipationReport",
    "FanBand",
    "FanProfile",
    "fan_profile",
    "fan_dissipation_rate",
    "faulhaber_sum",
    "grid_square_mean",
    "initial_dissipation_density",
    "DensityReport",
    "dissipation_report",
]

INFINITE = math.inf


def _check_n(N) -> None:
    if N == INFINITE:
        return
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer (or INFINITE), got {N!r}")


def an_cn(N) -> tuple[Fraction, Fraction]:
    """``(a_N, cbar_N) = ((2N+1) / (3(2N-1)), (2N-1) / (4N))`` as exact fractions.

    ``N = INFINITE`` gives the limits ``(1/3, 1/2)``.
    """
    _check_n(N)
    if N == INFINITE:
        return Fraction(1, 3), Fraction(1, 2)
    N = int(N)
    return Fraction(2 * N + 1, 3 * (2 * N - 1)), Fraction(2 * N - 1, 4 * N)


def lambda_grid(N: int, exact: bool = False) -> list:
    """Sorted grid ``lambda_j = sgn(j)(2|j| - 1)/(2N - 1)``, ``1 <= |j| <= N``."""
    _check_n(N)
    if N == INFINITE:
        raise ValueError("the lambda grid needs a finite N")
    N = int(N)
    positive = [Fraction(2 * j - 1, 2 * N - 1) for j in range(1, N + 1)]
    values = [-v for v in reversed(positive)] + positive
    return values if exact else [float(v) for v in values]


def grid_square_mean(N: int) -> Fraction:
    """``(1/|Lambda|) sum lambda^2``, which equals ``a_N``."""
    grid = lambda_grid(N, exact=True)
    return sum(v * v for v in grid) / len(grid)


def _sub_integral(values: np.ndarray, grid: PeriodicGrid, interval) -> float:
    """``int_a^b g`` for a periodic sampled ``g``, spectrally through the antiderivative."""
    if interval is None:
        return float(np.sum(values) * grid.spacing)
    a, b = (float(v) for v in interval)
    width = b - a
    if not 0.0 < width <= grid.length * (1 + 1e-12):
        raise ValueError(f"interval length must lie in (0, l], got {width}")
    if width >= grid.length:
        return float(np.sum(values) * grid.spacing)
    mean = values.mean()
    coeffs = np.fft.fft(values - mean)
    k = grid.wavenumbers
    with np.errstate(divide="ignore", invalid="ignore"):
        coeffs = np.where(k == 0, 0.0, coeffs / (1j * k))
    coeffs[grid.n // 2] = 0.0
    periodic = np.fft.ifft(coeffs).real
    ends = fourier_eval(periodic, grid, np.array([a, b]))
    return float(mean * width + ends[1] - ends[0])


def W_functional(wt0: ScalarField, c: ScalarField, N, interval=None) -> float:
    """``W_I(c) = a_N int_I c |w0| (cbar_N |w0| - c)``; ``interval=None`` means all of T."""
    a, cb = (float(v) for v in an_cn(N))
    mag = np.abs(wt0.values)
    integrand = a * c.values * mag * (cb * mag - c.values)
    return _sub_integral(integrand, wt0.grid, interval)


def W_max(wt0: ScalarField, N) -> tuple[ScalarField, float]:
    """Closed-form maximizer ``c_max = cbar_N |w0| / 2`` and value ``(1/48)(1 - 1/(2N)^2) int |w0|^3``."""
    _, cb = an_cn(N)
    c_max = ScalarField(wt0.grid, 0.5 * float(cb) * np.abs(wt0.values))
    factor = Fraction(1, 48) if N == INFINITE else Fraction(1, 48) * (1 - Fraction(1, (2 * int(N)) ** 2))
    value = float(factor) * integrate(ScalarField(wt0.grid, np.abs(wt0.values) ** 3))
    return c_max, value


@dataclass
class LowerBoundReport:
    """Outcome of the interval sweep for the lower bound on ``W_I``.

    ``prefactor`` is ``(1/2) delta (1 - delta) a_N cbar_N^2``; the bound on an
    interval is ``prefactor`` times the average of ``|w0|^3`` over it.
    """

    prefactor: float
    eps: float | None
    intervals: list[tuple[float, float]] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    bounds: list[float] = field(default_factory=list)
    holds: list[bool] = field(default_factory=list)
    tried: list[float] = field(default_factory=list)

    @property
    def bound(self) -> float:
        return min(self.bounds) if self.bounds else float("nan")

    @property
    def all_hold(self) -> bool:
        return bool(self.holds) and all(self.holds)


def _intervals(length: float, min_interval: float, starts: int) -> list[tuple[float, float]]:
    widths = []
    w = min_interval
    while w < length * (1 - 1e-12):
        widths.append(w)
        w *= 2.0
    widths.append(length)
    out = []
    for width in widths:
        for k in range(starts if width < length else 1):
            a = k * length / starts
            out.append((a, a + width))
    return out


def W_lower_bound(
    wt0: ScalarField,
    N,
    fraction: float,
    eps: float,
    min_interval: float,
    *,
    starts: int = 16,
    max_halvings: int = 12,
) -> LowerBoundReport:
    """Check ``W_I(c) >= (1/2) delta (1-delta) a_N cbar_N^2 avg_I |w0|^3`` on an interval sweep.

    ``c`` is rebuilt by :func:`expansion_rate`-style smoothing for each trial
    width; starting from ``eps`` the width is halved until every tested
    interval passes.  ``eps`` of the report is the first passing width, or
    ``None`` when the search runs out.
    """
    from .subsolution import expansion_rate

    a, cb = (float(v) for v in an_cn(N))
    prefactor = 0.5 * fraction * (1.0 - fraction) * a * cb * cb
    grid = wt0.grid
    cube = np.abs(wt0.values) ** 3
    intervals = _intervals(grid.length, min_interval, starts)
    report = LowerBoundReport(prefactor=prefactor, eps=None)
    trial = eps
    for _ in range(max_halvings + 1):
        report.tried.append(trial)
        if trial < grid.length / 2:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                c = expansion_rate(wt0, N, fraction, trial)
        else:
            c = None
        if c is not None:
            values = [W_functional(wt0, c, N, iv) for iv in intervals]
            bounds = [prefactor * _sub_integral(cube, grid, iv) / (iv[1] - iv[0]) for iv in intervals]
            holds = [v >= b for v, b in zip(values, bounds)]
            report.intervals, report.values, report.bounds, report.holds = intervals, values, bounds, holds
            if all(holds):
                report.eps = trial
                return report
        trial *= 0.5
    return report


@dataclass
class DissipationReport:
    W_value: float
    c_max: ScalarField
    W_max: float
    per_interval: list[tuple[tuple[float, float], float]]


def dissipation_report(wt0: ScalarField, c: ScalarField, N, intervals: Sequence[tuple[float, float]] = ()) -> DissipationReport:
    c_max, value = W_max(wt0, N)
    return DissipationReport(
        W_value=W_functional(wt0, c, N),
        c_max=c_max,
        W_max=value,
        per_interval=[(tuple(iv), W_functional(wt0, c, N, iv)) for iv in intervals],
    )


# ---------------------------------------------------------------------------
# flat fan subsolution


@dataclass(frozen=True)
class FanBand:
    """A band ``lo < x2/(ct) < hi`` with constant ``alpha``, ``gamma`` and ``e``."""

    lo: Fraction | float
    hi: Fraction | float
    alpha: Fraction
    gamma: Fraction | float
    e: Fraction | float


@dataclass(frozen=True)
class FanProfile:
    """Self-similar fan profile in the variable ``eta = x2 / (c t)``."""

    N: int
    c: Fraction | float
    e_prime: Fraction | float
    bands: tuple[FanBand, ...]

    @property
    def lines(self) -> list:
        return lambda_grid(self.N, exact=True)

    def band_at(self, eta: float) -> FanBand:
        for band in self.bands:
            if band.lo < eta < band.hi:
                return band
        raise ValueError(f"eta = {eta} sits on an interface")

    def jumps(self) -> list[tuple[Fraction, object, object]]:
        """``(lambda_j, [alpha], [gamma])`` across each line, jumps taken upper minus lower band."""
        out = []
        for lower, upper in zip(self.bands[:-1], self.bands[1:]):
            out.append((upper.lo, upper.alpha - lower.alpha, upper.gamma - lower.gamma))
        return out

    def admissibility_gap(self) -> list:
        """``e - (alpha^2/2 + |gamma|)`` per band; equals ``e_prime``."""
        return [b.e - (b.alpha * b.alpha / 2 + abs(b.gamma)) for b in self.bands]


def fan_profile(N: int, c, e_prime=0) -> FanProfile:
    """Piecewise-constant fan with vorticity on the ``2N`` lines ``x2 = lambda_j c t``.

    ``alpha = sgn(x2) j/N`` between ``lambda_j`` and ``lambda_{j+1}``, ``0`` in the
    centre band and ``+/-1`` outside; ``gamma = -(N/(2N-1)) c (1 - alpha^2)`` and
    ``e = alpha^2/2 + |gamma| + e_prime``.
    """
    _check_n(N)
    if N == INFINITE:
        raise ValueError("fan profiles need a finite N")
    if c <= 0:
        raise ValueError("fan expansion rate must be positive")
    N = int(N)
    exact = isinstance(c, Rational) and isinstance(e_prime, Rational)
    cc = Fraction(c) if exact else float(c)
    ep = Fraction(e_prime) if exact else float(e_prime)
    k = Fraction(N, 2 * N - 1) * cc if exact else N / (2 * N - 1) * cc
    lines = lambda_grid(N, exact=True)
    edges = [-math.inf] + lines + [math.inf]
    bands = []
    for idx in range(len(edges) - 1):
        j = idx - N  # signed band index: ... -1 below lambda_{-1}, 0 between lambda_{-1} and lambda_1, ...
        alpha = Fraction(j, N)
        gamma = -k * (1 - alpha * alpha)
        e = alpha * alpha / 2 + abs(gamma) + ep
        lo, hi = edges[idx], edges[idx + 1]
        bands.append(FanBand(lo=lo, hi=hi, alpha=alpha, gamma=gamma, e=e))
    return FanProfile(N=N, c=cc, e_prime=ep, bands=tuple(bands))


def fan_dissipation_rate(N, c):
    """Initial dissipation rate ``2 a_N c (2 cbar_N - c)`` per unit interface length.

    ``N = INFINITE`` gives the rarefaction limit ``(2/3) c (1 - c)``.  Exact
    (a ``Fraction``) for rational ``c`` and finite or infinite ``N``.
    """
    a, cb = an_cn(N)
    if isinstance(c, Rational):
        c = Fraction(c)
        return 2 * a * c * (2 * cb - c)
    return 2.0 * float(a) * c * (2.0 * float(cb) - c)


def faulhaber_sum(N: int) -> Fraction:
    """``sum_{1<=|j|<=N} lambda_j [alpha^2]_{lambda_j}`` from the fan profile jumps."""
    profile = fan_profile(N, Fraction(1))
    total = Fraction(0)
    for lower, upper in zip(profile.bands[:-1], profile.bands[1:]):
        lam = upper.lo
        total += lam * (upper.alpha ** 2 - lower.alpha ** 2)
    return total


# ---------------------------------------------------------------------------
# leading dissipation density of the curved construction


@dataclass
class DensityReport:
    per_lambda: dict[float, np.ndarray]
    combined: np.ndarray
    integral: float
    cross_check: float


def initial_dissipation_density(z0: ClosedCurve, wt0: ScalarField, c: ScalarField, N: int) -> DensityReport:
    """Leading dissipation density on each sheet and their signed combination.

    For each ``lambda``: ``(|lambda|/|Lambda|) c |w0| (lambda (c - cbar_N |w0|) + B_0 . ((sgn w0 + i) z0'))``.
    The combination ``-sum_lambda sgn(lambda) density_lambda`` cancels the
    ``B_0`` term and equals ``a_N c |w0| (cbar_N |w0| - c)``; ``cross_check``
    is :func:`W_functional` over the whole circle.
    """
    _, cb = an_cn(N)
    cb = float(cb)
    grid = lambda_grid(N)
    mag = np.abs(wt0.values)
    if np.any(mag < 1e-14 * max(mag.max(), 1e-300)):
        warnings.warn("strength vanishes on part of the grid; the density degenerates there", RuntimeWarning)
    b0 = br_single(z0, wt0)
    dz = z0.tangent
    transport = dot(b0, (np.sign(wt0.values) + 1j) * dz)
    per = {}
    for lam in grid:
        per[lam] = abs(lam) / len(grid) * c.values * mag * (lam * (c.values - cb * mag) + transport)
    combined = -sum(np.sign(lam) * per[lam] for lam in grid)
    integral = float(np.sum(combined) * wt0.grid.spacing)
    return DensityReport(per_lambda=per, combined=combined, integral=integral, cross_check=W_functional(wt0, c, N))
