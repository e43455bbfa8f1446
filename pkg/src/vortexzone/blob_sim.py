"""Vortex-blob simulation of a desingularized sheet.

Each node carries a fixed weight ``w_j = l w0(s_j) / |S|`` and moves with

    dz_i/dt = (1/2pi) sum_j w_j (z_i - z_j)^perp / (|z_i - z_j|^2 + delta^2),

where the self term drops out because the numerator vanishes.  The pairwise
sums run through :mod:`vortexzone.kernels`, which uses compensated
summation in a fixed source order, so runs are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .biot_savart import winding_numbers
from .curve import ClosedCurve, PeriodicGrid, ScalarField, fourier_eval, mollify

__all__ = [
    "MIN_NODES",
    "NonFiniteStateError",
    "BlobState",
    "SimConfig",
    "KHConfig",
    "StepDiagnostics",
    "Trajectory",
    "ZoneOverlay",
    "init_from_curve",
    "kh_perturb",
    "velocity",
    "step",
    "circulation",
    "impulse",
    "energy",
    "run",
    "macroscopic_field",
    "zone_overlay",
]

MIN_NODES = 64
INTEGRATORS = ("euler", "rk4")


class NonFiniteStateError(FloatingPointError):
    """Blob positions became NaN or infinite during a run."""


@dataclass(frozen=True, eq=False)
class BlobState:
    """Blob positions at one time.

    ``length`` is the parameter period of the underlying curve; it is kept so
    that the state can be viewed again as a sampled closed curve.
    """

    time: float
    positions: np.ndarray
    weights: np.ndarray
    delta: float
    length: float = 2.0 * math.pi
    below_resolution: bool = False

    def __post_init__(self) -> None:
        pos = np.array(self.positions, dtype=complex)
        w = np.array(self.weights, dtype=float)
        if pos.shape != w.shape or pos.ndim != 1:
            raise ValueError("positions and weights must be one-dimensional and of equal length")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        pos.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.positions.size

    def moved(self, positions: np.ndarray, time: float) -> "BlobState":
        return replace(self, positions=positions, time=time)

    def as_curve(self) -> ClosedCurve:
        return ClosedCurve(PeriodicGrid(self.length, self.size), self.positions)


@dataclass(frozen=True)
class SimConfig:
    """Time-stepping parameters; the final time is ``h * steps``."""

    h: float = 0.025
    steps: int = 100
    integrator: str = "euler"
    S_count: int = 2000
    delta: float = 0.002
    record_every: int = 1

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError("steps must be a non-negative integer")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.S_count < MIN_NODES:
            raise ValueError(f"S_count must be at least {MIN_NODES}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")

    @property
    def final_time(self) -> float:
        return self.h * self.steps


@dataclass(frozen=True)
class KHConfig:
    """Normal perturbation ``-eps sin(k s)`` used to seed Kelvin-Helmholtz roll-up."""

    amplitude: float = 0.001
    frequency: int = 30


@dataclass(frozen=True)
class StepDiagnostics:
    time: float
    circulation: float
    impulse: complex
    energy: float


@dataclass
class Trajectory:
    """Recorded states and per-step conservation diagnostics."""

    states: list[BlobState] = field(default_factory=list)
    diagnostics: list[StepDiagnostics] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    def state_at(self, t: float) -> BlobState:
        times = self.times
        k = int(np.argmin(np.abs(times - t)))
        if abs(times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"no recorded state at t = {t}; recorded times span [{times[0]}, {times[-1]}]")
        return self.states[k]

    def circulation_drift(self) -> float:
        c = np.array([d.circulation for d in self.diagnostics])
        return float(np.max(np.abs(c - c[0]))) if c.size else 0.0

    def impulse_drift(self, scale: float) -> float:
        """``max |I(t) - I(0)| / scale``."""
        p = np.array([d.impulse for d in self.diagnostics])
        return float(np.max(np.abs(p - p[0])) / scale) if p.size else 0.0

    def energy_drift(self) -> float:
        """``max |E(t) - E(0)|`` over the steps where the energy was evaluated (NaN if never)."""
        e = np.array([d.energy for d in self.diagnostics])
        e = e[np.isfinite(e)]
        return float(np.max(np.abs(e - e[0]))) if e.size else float("nan")


# ---------------------------------------------------------------------------


def init_from_curve(curve: ClosedCurve, strength: ScalarField, S_count: int, delta: float) -> BlobState:
    """Sample ``S_count`` blobs at uniform parameter nodes with weights ``l w0(s_j)/S_count``.

    Curves and strengths given on another grid are evaluated by trigonometric
    interpolation.  Fewer than :data:`MIN_NODES` blobs are accepted but the
    state is flagged ``below_resolution``.
    """
    if S_count < 1:
        raise ValueError("S_count must be positive")
    grid = curve.grid
    if strength.grid.length != grid.length:
        raise ValueError("curve and strength must share the parameter period")
    s = np.arange(S_count) * (grid.length / S_count)
    if S_count == grid.n:
        pos = curve.points.copy()
    else:
        pos = fourier_eval(curve.points, grid, s)
    if S_count == strength.grid.n:
        w0 = strength.values.copy()
    else:
        w0 = np.real(fourier_eval(strength.values, strength.grid, s))
    return BlobState(
        time=0.0,
        positions=pos,
        weights=grid.length * w0 / S_count,
        delta=float(delta),
        length=grid.length,
        below_resolution=S_count < MIN_NODES,
    )


def kh_perturb(curve: ClosedCurve, kh: KHConfig) -> ClosedCurve:
    """``z0 - eps sin(k s) (z0')^perp``."""
    s = curve.grid.nodes
    return ClosedCurve(curve.grid, curve.points - kh.amplitude * np.sin(kh.frequency * s) * curve.normal)


def velocity(state: BlobState, positions: np.ndarray | None = None) -> np.ndarray:
    """Blob velocity at ``positions`` (default: the blobs themselves)."""
    z = state.positions if positions is None else positions
    return kernels.induced_velocity(z, z, state.weights, state.delta)


def _rate(state: BlobState) -> Callable[[np.ndarray], np.ndarray]:
    w, d = state.weights, state.delta
    return lambda z: kernels.induced_velocity(z, z, w, d)


def step(state: BlobState, h: float, integrator: str = "euler") -> BlobState:
    """Advance by one step of forward Euler or classical RK4."""
    if not h > 0:
        raise ValueError("step h must be positive")
    f = _rate(state)
    z = state.positions
    if integrator == "euler":
        new = z + h * f(z)
    elif integrator == "rk4":
        k1 = f(z)
        k2 = f(z + 0.5 * h * k1)
        k3 = f(z + 0.5 * h * k2)
        k4 = f(z + h * k3)
        new = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        raise ValueError(f"integrator must be one of {INTEGRATORS}, got {integrator!r}")
    return state.moved(new, state.time + h)


def circulation(state: BlobState) -> float:
    return math.fsum(state.weights)


def impulse(state: BlobState) -> complex:
    """Linear impulse ``sum w_j z_j`` (exactly rounded component sums)."""
    wz = state.weights * state.positions
    return complex(math.fsum(wz.real), math.fsum(wz.imag))


def impulse_scale(state: BlobState) -> float:
    """``sum |w_j| |z_j|``: the natural size of the impulse sum, used to normalize its drift."""
    return math.fsum(np.abs(state.weights) * np.abs(state.positions))


def energy(state: BlobState) -> float:
    """``-(1/8pi) sum_{i != j} w_i w_j log(|z_i - z_j|^2 + delta^2)``."""
    rows = kernels.log_energy_rows(state.positions, state.weights, state.delta)
    return -math.fsum(state.weights * rows) / (8.0 * math.pi)


def _diagnose(state: BlobState, with_energy: bool) -> StepDiagnostics:
    return StepDiagnostics(
        time=state.time,
        circulation=circulation(state),
        impulse=impulse(state),
        energy=energy(state) if with_energy else float("nan"),
    )


def run(
    state: BlobState,
    config: SimConfig,
    sink: Callable[[StepDiagnostics], None] | None = None,
    *,
    with_energy: bool = True,
    energy_every: int = 1,
) -> Trajectory:
    """Step ``config.steps`` times, recording every ``record_every``-th state.

    Diagnostics are computed at every step and also passed to ``sink``; the
    energy (the only other O(S^2) sum) is evaluated every ``energy_every``
    steps and reported as NaN in between.
    Raises :class:`NonFiniteStateError` when a position stops being finite.
    """
    traj = Trajectory()

    def record(s: BlobState, k: int) -> None:
        d = _diagnose(s, with_energy and k % energy_every == 0)
        traj.diagnostics.append(d)
        if sink is not None:
            sink(d)
        if k % config.record_every == 0 or k == config.steps:
            traj.states.append(s)

    current = state
    record(current, 0)
    for k in range(1, config.steps + 1):
        current = step(current, config.h, config.integrator)
        # times are k h exactly rather than an accumulated sum
        current = current.moved(current.positions, state.time + k * config.h)
        if not np.all(np.isfinite(current.positions)):
            raise NonFiniteStateError(f"non-finite blob position at step {k} (t = {current.time:.6g})")
        record(current, k)
    return traj


def macroscopic_field(states: Sequence[BlobState], points) -> np.ndarray:
    """Average over the sheets of the blob velocity, sampled at ``points``."""
    if not states:
        raise ValueError("need at least one sheet state")
    pts = np.asarray(points, dtype=complex)
    flat = pts.reshape(-1)
    total = np.zeros(flat.shape, dtype=complex)
    for st in states:
        total += kernels.induced_velocity(flat, st.positions, st.weights, st.delta)
    return (total / len(states)).reshape(pts.shape)


@dataclass(frozen=True, eq=False)
class ZoneOverlay:
    t: float
    x_plus: ClosedCurve
    x_minus: ClosedCurve
    c: ScalarField
    containment: float


def _in_zone(points: np.ndarray, x_plus: ClosedCurve, x_minus: ClosedCurve, tol: float) -> np.ndarray:
    inside = winding_numbers(x_plus, points) != winding_numbers(x_minus, points)
    for curve in (x_plus, x_minus):
        z = curve.points
        seg = np.roll(z, -1) - z
        for start in range(0, points.size, 512):
            p = points[start : start + 512, None]
            u = np.clip(np.real((p - z) * np.conj(seg)) / np.maximum(np.abs(seg) ** 2, 1e-300), 0.0, 1.0)
            dist = np.min(np.abs(p - (z + u * seg)), axis=1)
            inside[start : start + 512] |= dist <= tol
    return inside


def zone_overlay(
    center_run: Trajectory,
    wt0: ScalarField,
    beta: float,
    eps: float,
    t: float,
    perturbed_run: Trajectory | None = None,
    *,
    tol: float = 1e-12,
) -> ZoneOverlay:
    """Zone boundaries ``x_pm(t) = z(t) +/- t c (z0')^perp`` with ``c = beta (|w0| * eta_eps)``.

    ``z(t)`` is the unperturbed run.  The containment fraction counts the
    perturbed run's blobs (or the unperturbed ones when no perturbed run is
    given) lying in the closed zone; points within ``tol`` of a boundary count
    as inside.
    """
    state0 = center_run.states[0]
    state = center_run.state_at(t)
    z0 = state0.as_curve()
    c_src = beta * mollify(abs(wt0), eps)
    if c_src.grid.n == z0.grid.n and c_src.grid.length == z0.grid.length:
        c = c_src
    else:
        c = ScalarField(z0.grid, np.real(fourier_eval(c_src.values, c_src.grid, z0.grid.nodes)))
    offset = t * c.values * z0.normal
    x_plus = ClosedCurve(z0.grid, state.positions + offset)
    x_minus = ClosedCurve(z0.grid, state.positions - offset)
    probe = (perturbed_run or center_run).state_at(t).positions
    frac = float(np.mean(_in_zone(probe, x_plus, x_minus, tol)))
    return ZoneOverlay(t=t, x_plus=x_plus, x_minus=x_minus, c=c, containment=frac)
