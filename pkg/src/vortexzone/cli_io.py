"""Configuration, experiment pipelines, file output and the command line.

Config files are flat ``key = value`` text with ``#`` comments.  A
``preset = name`` line starts from one of :data:`PRESETS`; any other key
overrides it.  Every pipeline writes CSV data, SVG figures and a
``manifest.json`` that lists each file with its SHA-256 digest.

Exit codes of :func:`main`: 0 on success, 2 for configuration errors and
3 when a numerical precondition fails (degenerate geometry or strength,
non-finite blob positions).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import blob_sim, dissipation, subsolution
from .biot_savart import GeometryError, ProximityError, SingularityError
from .curve import ClosedCurve, CurveError, PeriodicGrid, ScalarField, arc_length_reparametrize, mollify
from .svg import Figure

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunManifest",
    "PRESETS",
    "PIPELINES",
    "parse_config",
    "build_curve",
    "build_strength",
    "run_experiment",
    "rerender",
    "write_csv",
    "read_csv",
    "write_curve_csv",
    "read_curve_csv",
    "main",
]

PIPELINES = ("dissipation", "construct", "simulate", "field")
DESK_SCALE_LIMIT = 5000
FULL_SCALE_NODES = 20000
RESIDUAL_TIMES = (4e-2, 2e-2, 1e-2)

PRECONDITION_ERRORS = (
    GeometryError,
    CurveError,
    ProximityError,
    SingularityError,
    subsolution.DegenerateStrengthError,
    blob_sim.NonFiniteStateError,
)


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` holds one message per offending key."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# ---------------------------------------------------------------------------
# keys


def _floats(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in parts)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


@dataclass(frozen=True)
class _Key:
    parse: Callable[[str], Any]
    kind: str
    check: Callable[[Any], str | None] | None = None


def _positive(v):
    return None if v > 0 else "must be positive"


def _choice(*options):
    return lambda v: None if v in options else f"must be one of {', '.join(options)}"


def _at_least(m):
    return lambda v: None if v >= m else f"must be at least {m}"


def _even_at_least(m):
    return lambda v: None if v >= m and v % 2 == 0 else f"must be an even integer >= {m}"


KEYS: dict[str, _Key] = {
    "pipeline": _Key(str, "one of " + "|".join(PIPELINES), _choice(*PIPELINES)),
    "curve": _Key(str, "circle|ellipse", _choice("circle", "ellipse")),
    "radius": _Key(float, "real > 0", _positive),
    "aspect": _Key(float, "real > 0", _positive),
    "strength": _Key(float, "real"),
    "strength_cos": _Key(_floats, "comma-separated reals"),
    "strength_sin": _Key(_floats, "comma-separated reals"),
    "N": _Key(_int, "integer >= 1", _at_least(1)),
    "fraction": _Key(float, "real in (0, 1]", lambda v: None if 0 < v <= 1 else "must lie in (0, 1]"),
    "eps": _Key(float, "real > 0", _positive),
    "resolution": _Key(_int, "even integer >= 16", _even_at_least(16)),
    "zone_time": _Key(float, "real > 0", _positive),
    "S_count": _Key(_int, f"even integer >= {blob_sim.MIN_NODES}", _even_at_least(blob_sim.MIN_NODES)),
    "delta": _Key(float, "real > 0", _positive),
    "h": _Key(float, "real > 0", _positive),
    "steps": _Key(_int, "integer >= 1", _at_least(1)),
    "integrator": _Key(str, "euler|rk4", _choice(*blob_sim.INTEGRATORS)),
    "record_every": _Key(_int, "integer >= 1", _at_least(1)),
    "energy_every": _Key(_int, "integer >= 1", _at_least(1)),
    "kh_amplitude": _Key(float, "real"),
    "kh_frequency": _Key(_int, "integer >= 0", _at_least(0)),
    "beta": _Key(float, "real > 0", _positive),
    "field_time": _Key(float, "real >= 0", _at_least(0.0)),
    "field_points": _Key(_int, "integer >= 2", _at_least(2)),
    "field_extent": _Key(float, "real > 0", _positive),
    "full_scale": _Key(_bool, "boolean"),
}
REQUIRED = ("pipeline", "curve", "strength")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated parameters of one experiment.

    ``eps = None`` means one twentieth of the curve period and
    ``field_time = None`` the end of the blob run.
    """

    pipeline: str
    curve: str
    strength: float
    preset: str | None = None
    radius: float = 1.0
    aspect: float = 1.0
    strength_cos: tuple[float, ...] = ()
    strength_sin: tuple[float, ...] = ()
    N: int = 1
    fraction: float = 0.5
    eps: float | None = None
    resolution: int = 128
    zone_time: float = 0.1
    S_count: int = 2000
    delta: float = 0.002
    h: float = 0.025
    steps: int = 100
    integrator: str = "euler"
    record_every: int = 10
    energy_every: int = 1
    kh_amplitude: float = 0.001
    kh_frequency: int = 30
    beta: float = 0.125
    field_time: float | None = None
    field_points: int = 21
    field_extent: float = 1.5
    full_scale: bool = False

    def echo(self) -> dict[str, Any]:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    def sim_config(self, steps: int | None = None) -> blob_sim.SimConfig:
        return blob_sim.SimConfig(
            h=self.h,
            steps=self.steps if steps is None else steps,
            integrator=self.integrator,
            S_count=self.S_count,
            delta=self.delta,
            record_every=self.record_every,
        )

    @property
    def kh(self) -> blob_sim.KHConfig:
        return blob_sim.KHConfig(self.kh_amplitude, self.kh_frequency)


_REFERENCE_BASE = {
    "pipeline": "simulate",
    "curve": "circle",
    "radius": "1",
    "strength": "0.25",
    "S_count": "2000",
    "delta": "0.002",
    "h": "0.025",
    "steps": "100",
    "integrator": "euler",
    "kh_amplitude": "0.001",
    "kh_frequency": "30",
    "beta": "0.125",
    "N": "1",
}

PRESETS: dict[str, dict[str, str]] = {
    "appendixB-const": dict(_REFERENCE_BASE),
    "appendixB-cos": {"inherit": "appendixB-const", "strength": "0", "strength_cos": "0.25"},
    "appendixB-cos2": {"inherit": "appendixB-const", "strength": "0", "strength_cos": "0, 0.25"},
    "figure1": {"inherit": "appendixB-cos", "delta": "0.001"},
}


def _resolve_preset(name: str, seen: tuple[str, ...] = ()) -> dict[str, str]:
    if name not in PRESETS:
        raise ConfigError([f"preset: unknown preset {name!r}; available presets: {', '.join(PRESETS)}"])
    if name in seen:
        raise ConfigError([f"preset: inheritance cycle through {name!r}"])
    spec = dict(PRESETS[name])
    parent = spec.pop("inherit", None)
    base = _resolve_preset(parent, seen + (name,)) if parent else {}
    base.update(spec)
    return base


def _tokenize(text: str) -> tuple[dict[str, str], list[str]]:
    values: dict[str, str] = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            errors.append(f"{key}: given more than once (line {lineno})")
            continue
        values[key] = value
    return values, errors


def parse_config(text: str, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Parse and validate config text; ``overrides`` are applied last.

    Raises :class:`ConfigError` listing every problem found, each message
    starting with the offending key.
    """
    raw, errors = _tokenize(text)
    if overrides:
        raw.update({k: str(v) for k, v in overrides.items() if v is not None})
    if not raw and not errors:
        raise ConfigError(
            ["empty configuration: set 'preset' or the required keys " + ", ".join(REQUIRED)]
        )
    merged: dict[str, str] = {}
    preset = raw.pop("preset", None)
    preset_failed = False
    if preset is not None:
        try:
            merged.update(_resolve_preset(preset))
        except ConfigError as exc:
            errors.extend(exc.errors)
            preset_failed = True
    merged.update(raw)

    parsed: dict[str, Any] = {}
    for key, value in merged.items():
        spec = KEYS.get(key)
        if spec is None:
            errors.append(f"{key}: unknown key; known keys are preset, {', '.join(KEYS)}")
            continue
        try:
            v = spec.parse(value)
        except (ValueError, TypeError):
            errors.append(f"{key}: expected {spec.kind}, got {value!r}")
            continue
        problem = spec.check(v) if spec.check else None
        if problem:
            errors.append(f"{key}: {problem} (got {value!r})")
            continue
        parsed[key] = v
    missing = [k for k in REQUIRED if k not in merged]
    if missing and not preset_failed:
        errors.append("missing required key(s): " + ", ".join(missing))
    if "S_count" in parsed and parsed["S_count"] > DESK_SCALE_LIMIT and not parsed.get("full_scale", False):
        errors.append(f"S_count: values above {DESK_SCALE_LIMIT} need full_scale = true (the --full-scale flag)")
    if parsed.get("curve") == "circle" and "aspect" in parsed and parsed["aspect"] != 1.0:
        errors.append("aspect: only meaningful for curve = ellipse")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(preset=preset, **parsed)


# ---------------------------------------------------------------------------
# inputs


def build_curve(cfg: ExperimentConfig, n: int) -> ClosedCurve:
    """The configured curve, parametrized by arc length with ``n`` nodes."""
    if cfg.curve == "circle":
        return ClosedCurve.circle(n, cfg.radius)
    a, b = cfg.radius, cfg.radius * cfg.aspect
    grid = PeriodicGrid(2.0 * math.pi, max(n, 256))
    s = grid.nodes
    raw = ClosedCurve(grid, a * np.cos(s) + 1j * b * np.sin(s))
    return arc_length_reparametrize(raw, n)


def build_strength(cfg: ExperimentConfig, grid: PeriodicGrid) -> ScalarField:
    """``strength + sum_k (strength_cos[k] cos + strength_sin[k] sin)(2 pi k s / l)``."""
    theta = 2.0 * math.pi * grid.nodes / grid.length
    values = np.full(grid.n, cfg.strength, dtype=float)
    for k, a in enumerate(cfg.strength_cos, start=1):
        values += a * np.cos(k * theta)
    for k, b in enumerate(cfg.strength_sin, start=1):
        values += b * np.sin(k * theta)
    return ScalarField(grid, values)


def _eps(cfg: ExperimentConfig, grid: PeriodicGrid) -> float:
    return cfg.eps if cfg.eps is not None else grid.length / 20.0


# ---------------------------------------------------------------------------
# file formats


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_csv(path: Path, columns: dict[str, np.ndarray]) -> Path:
    """Write equal-length columns; floats use ``repr`` so reading back is exact."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[k]) for k in names]
    length = {len(d) for d in data}
    if len(length) > 1:
        raise ValueError(f"{path}: columns differ in length")
    lines = [",".join(names)]
    for row in zip(*data):
        lines.append(",".join(_fmt(v) for v in row))
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path: Path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    names = lines[0].split(",")
    table = np.array([[float(x) for x in line.split(",")] for line in lines[1:] if line], dtype=float)
    table = table.reshape(-1, len(names))
    return {name: table[:, k] for k, name in enumerate(names)}


def write_curve_csv(path: Path, curve: ClosedCurve) -> Path:
    return write_csv(path, {"s": curve.grid.nodes, "x": curve.points.real, "y": curve.points.imag})


def read_curve_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(s, points)`` from a curve CSV."""
    cols = read_csv(path)
    return cols["s"], cols["x"] + 1j * cols["y"]


def write_field_csv(path: Path, f: ScalarField) -> Path:
    return write_csv(path, {"s": f.grid.nodes, "value": f.values})


def _write_trajectory(path: Path, traj: blob_sim.Trajectory) -> Path:
    t, node, x, y = [], [], [], []
    for st in traj.states:
        t.append(np.full(st.size, st.time))
        node.append(np.arange(st.size))
        x.append(st.positions.real)
        y.append(st.positions.imag)
    return write_csv(path, {"t": np.concatenate(t), "node": np.concatenate(node), "x": np.concatenate(x), "y": np.concatenate(y)})


def _write_diagnostics(path: Path, traj: blob_sim.Trajectory) -> Path:
    d = traj.diagnostics
    return write_csv(
        path,
        {
            "t": np.array([e.time for e in d]),
            "circulation": np.array([e.circulation for e in d]),
            "impulse_x": np.array([e.impulse.real for e in d]),
            "impulse_y": np.array([e.impulse.imag for e in d]),
            "energy": np.array([e.energy for e in d]),
        },
    )


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    """Config echo, software versions, diagnostic summaries and the file inventory."""

    pipeline: str
    config: dict[str, Any]
    versions: dict[str, str]
    summaries: dict[str, Any] = field(default_factory=dict)
    files: dict[str, dict[str, Any]] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, allow_nan=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        return cls(**{f.name: data[f.name] for f in fields(cls)})

    def refresh_inventory(self, out: Path) -> None:
        self.files = {}
        for path in sorted(out.iterdir()):
            if path.is_file() and path.name != MANIFEST_NAME:
                self.files[path.name] = {"sha256": _digest(path), "bytes": path.stat().st_size}

    def write(self, out: Path) -> Path:
        self.refresh_inventory(out)
        path = out / MANIFEST_NAME
        path.write_text(self.to_json(), encoding="utf-8")
        return path


MANIFEST_NAME = "manifest.json"


def _versions() -> dict[str, str]:
    return {"vortexzone": __version__, "numpy": np.__version__, "python": platform.python_version()}


def _num(x) -> Any:
    """JSON-friendly scalar: floats stay floats, fractions become strings."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    return x


# ---------------------------------------------------------------------------
# figures (rendered from the CSV files so that ``report`` can redo them)


def _curve_from(out: Path, name: str) -> np.ndarray:
    return read_curve_csv(out / name)[1]


def _render_dissipation(out: Path, manifest: RunManifest) -> None:
    rates = read_csv(out / "dissipation_rates.csv")
    fig = Figure("Initial dissipation rate of the fan profile", equal_aspect=False, xlabel="expansion rate c", ylabel="rate per unit length")
    n = manifest.config["N"]
    fig.add_line(f"N = {n}", rates["c"], rates["rate_N"], closed=False)
    fig.add_line("N = infinity", rates["c"], rates["rate_limit"], closed=False, dashed=True)
    (out / "dissipation.svg").write_text(fig.render(), encoding="utf-8")


def _render_construct(out: Path, manifest: RunManifest) -> None:
    t = manifest.summaries.get("zone_time")
    fig = Figure(f"Turbulence zone at t = {t}")
    fig.add_curve("z0", _curve_from(out, "z0.csv"), color="#000000")
    fig.add_curve("x_+", _curve_from(out, "zone_plus.csv"), color="#1f3a93")
    fig.add_curve("x_-", _curve_from(out, "zone_minus.csv"), color="#1f3a93", dashed=True)
    (out / "construct.svg").write_text(fig.render(), encoding="utf-8")
    res = read_csv(out / "residual.csv")
    fig = Figure("Pointwise-condition residual", equal_aspect=False, xlabel="log10 t", ylabel="log10 residual")
    fig.add_line("residual", np.log10(res["t"]), np.log10(res["residual"]), closed=False)
    (out / "residual.svg").write_text(fig.render(), encoding="utf-8")


def _render_simulate(out: Path, manifest: RunManifest) -> None:
    t = manifest.summaries.get("final_time")
    fig = Figure(f"Blob run at t = {t}")
    fig.add_curve("perturbed run", _curve_from(out, "perturbed_final.csv"), color="#c0392b", width=0.8)
    fig.add_curve("unperturbed run", _curve_from(out, "center_final.csv"), color="#000000", width=0.8)
    fig.add_curve("x_+", _curve_from(out, "zone_plus.csv"), color="#1f3a93")
    fig.add_curve("x_-", _curve_from(out, "zone_minus.csv"), color="#1f3a93")
    (out / "simulate.svg").write_text(fig.render(), encoding="utf-8")


def _render_field(out: Path, manifest: RunManifest) -> None:
    cols = read_csv(out / "field.csv")
    base = cols["x"] + 1j * cols["y"]
    vec = cols["u"] + 1j * cols["v"]
    side = int(round(math.sqrt(base.size)))
    stride = max(1, side // 15)
    keep = np.zeros(base.size, dtype=bool)
    idx = np.arange(base.size)
    keep[(idx // side) % stride == 0] = True
    keep &= (idx % side) % stride == 0
    spacing = 2.0 * manifest.config["field_extent"] / max(side - 1, 1) * stride
    peak = float(np.max(np.abs(vec))) if vec.size else 0.0
    scale = 0.9 * spacing / peak if peak > 0 else 0.0
    fig = Figure(f"Macroscopic velocity at t = {manifest.summaries.get('field_time')}")
    fig.add_curve("x_+", _curve_from(out, "zone_plus.csv"), color="#1f3a93")
    fig.add_curve("x_-", _curve_from(out, "zone_minus.csv"), color="#1f3a93")
    fig.add_arrows("velocity (scaled)", base[keep], scale * vec[keep])
    (out / "field.svg").write_text(fig.render(), encoding="utf-8")


RENDERERS = {
    "dissipation": _render_dissipation,
    "construct": _render_construct,
    "simulate": _render_simulate,
    "field": _render_field,
}


# ---------------------------------------------------------------------------
# pipelines


def _pipeline_dissipation(cfg: ExperimentConfig, out: Path, m: RunManifest) -> None:
    z0 = build_curve(cfg, cfg.resolution)
    wt0 = build_strength(cfg, z0.grid)
    eps = _eps(cfg, z0.grid)
    ell = z0.grid.length
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        c = subsolution.expansion_rate(wt0, cfg.N, cfg.fraction, eps)
        density = dissipation.initial_dissipation_density(z0, wt0, c, cfg.N)
    report = dissipation.dissipation_report(wt0, c, cfg.N)
    lower = dissipation.W_lower_bound(wt0, cfg.N, cfg.fraction, eps, ell / 8)
    a, cb = dissipation.an_cn(cfg.N)
    cs = np.linspace(0.0, 1.0, 101)
    write_csv(
        out / "dissipation_rates.csv",
        {
            "c": cs,
            "rate_N": np.array([dissipation.fan_dissipation_rate(cfg.N, float(x)) for x in cs]),
            "rate_limit": np.array([dissipation.fan_dissipation_rate(dissipation.INFINITE, float(x)) for x in cs]),
        },
    )
    write_curve_csv(out / "z0.csv", z0)
    write_field_csv(out / "strength.csv", wt0)
    write_field_csv(out / "expansion_rate.csv", c)
    write_field_csv(out / "dissipation_density.csv", ScalarField(z0.grid, density.combined))
    m.summaries.update(
        {
            "a_N": _num(a),
            "cbar_N": _num(cb),
            "eps": eps,
            "period": ell,
            "W": report.W_value,
            "W_max": report.W_max,
            "W_max_per_length": report.W_max / ell,
            "W_per_length": report.W_value / ell,
            "density_integral": density.integral,
            "density_cross_check": density.cross_check,
            "lower_bound_prefactor": lower.prefactor,
            "lower_bound_eps": lower.eps,
            "lower_bound_all_hold": lower.all_hold,
            "fan_optimum_rate": _num(dissipation.fan_dissipation_rate(cfg.N, cb)),
        }
    )


def _pipeline_construct(cfg: ExperimentConfig, out: Path, m: RunManifest) -> None:
    z0 = build_curve(cfg, cfg.resolution)
    wt0 = build_strength(cfg, z0.grid)
    eps = _eps(cfg, z0.grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        c = subsolution.expansion_rate(wt0, cfg.N, cfg.fraction, eps)
    if np.min(c.values) <= 0:
        raise subsolution.DegenerateStrengthError("expansion rate vanishes somewhere; the sheets would touch")
    diag = subsolution.TaylorDiagnostics()
    family = subsolution.construct_family(z0, wt0, c, cfg.N, diagnostics=diag)
    fam1 = family.with_n(1)
    residuals = np.array([subsolution.pointwise_residual(fam1, t) for t in RESIDUAL_TIMES])
    slope = float(np.polyfit(np.log(RESIDUAL_TIMES), np.log(residuals), 1)[0])
    margin = subsolution.equi_chord_arc_margin(family, cfg.zone_time)
    if margin <= 0:
        raise GeometryError(f"equi-chord-arc margin {margin:.3e} <= 0 at zone_time = {cfg.zone_time}")
    write_curve_csv(out / "z0.csv", z0)
    write_curve_csv(out / "zone_plus.csv", subsolution.zone_map(family, cfg.zone_time, 1.0))
    write_curve_csv(out / "zone_minus.csv", subsolution.zone_map(family, cfg.zone_time, -1.0))
    write_field_csv(out / "expansion_rate.csv", c)
    for k in range(4):
        write_curve_csv(out / f"z_coeff{k}.csv", family.taylor.z_coeffs[k])
        write_field_csv(out / f"wt_coeff{k}.csv", family.taylor.wt_coeffs[k])
    write_csv(out / "residual.csv", {"t": np.array(RESIDUAL_TIMES), "residual": residuals})
    m.summaries.update(
        {
            "eps": eps,
            "zone_time": cfg.zone_time,
            "margin": margin,
            "chord_arc": family.chord_arc,
            "residual_slope": slope,
            "residuals": [float(r) for r in residuals],
            "observed_order": {str(k): v for k, v in diag.observed_order.items()},
        }
    )


def _initial_states(cfg: ExperimentConfig):
    z0 = build_curve(cfg, cfg.S_count)
    wt0 = build_strength(cfg, z0.grid)
    center = blob_sim.init_from_curve(z0, wt0, cfg.S_count, cfg.delta)
    perturbed = blob_sim.init_from_curve(blob_sim.kh_perturb(z0, cfg.kh), wt0, cfg.S_count, cfg.delta)
    return z0, wt0, center, perturbed


def _pipeline_simulate(cfg: ExperimentConfig, out: Path, m: RunManifest) -> None:
    z0, wt0, center, perturbed = _initial_states(cfg)
    sim = cfg.sim_config()
    runs = {
        "center": blob_sim.run(center, sim, energy_every=cfg.energy_every),
        "perturbed": blob_sim.run(perturbed, sim, energy_every=cfg.energy_every),
    }
    t_end = runs["center"].states[-1].time
    overlay = blob_sim.zone_overlay(runs["center"], wt0, cfg.beta, _eps(cfg, z0.grid), t_end, runs["perturbed"])
    summaries: dict[str, Any] = {"final_time": t_end, "containment": overlay.containment}
    for name, traj in runs.items():
        _write_trajectory(out / f"trajectory_{name}.csv", traj)
        _write_diagnostics(out / f"diagnostics_{name}.csv", traj)
        write_curve_csv(out / f"{name}_final.csv", traj.states[-1].as_curve())
        start = traj.states[0]
        summaries[name] = {
            "circulation_drift": traj.circulation_drift(),
            "impulse_relative_drift": traj.impulse_drift(blob_sim.impulse_scale(start)),
            "energy_drift": traj.energy_drift(),
            "max_radius_deviation": float(np.max(np.abs(np.abs(traj.states[-1].positions) - cfg.radius))) if cfg.curve == "circle" else None,
            "below_resolution": start.below_resolution,
        }
    write_curve_csv(out / "zone_plus.csv", overlay.x_plus)
    write_curve_csv(out / "zone_minus.csv", overlay.x_minus)
    summaries["zone_half_width_max"] = float(np.max(np.abs(overlay.x_plus.points - overlay.x_minus.points)) / 2)
    m.summaries.update(summaries)


def _pipeline_field(cfg: ExperimentConfig, out: Path, m: RunManifest) -> None:
    z0, wt0, _, perturbed = _initial_states(cfg)
    t_field = cfg.field_time if cfg.field_time is not None else cfg.h * cfg.steps
    steps = int(round(t_field / cfg.h))
    if abs(steps * cfg.h - t_field) > 1e-9 * max(1.0, t_field):
        raise ConfigError([f"field_time: must be a multiple of h = {cfg.h} (got {t_field})"])
    traj = blob_sim.run(perturbed, cfg.sim_config(steps), with_energy=False)
    state = traj.states[-1]
    c = cfg.beta * mollify(abs(wt0), _eps(cfg, z0.grid))
    normal0 = perturbed.as_curve().normal
    sheets = [
        state.moved(state.positions + lam * t_field * c.values * normal0, state.time)
        for lam in dissipation.lambda_grid(cfg.N)
    ]
    axis = np.linspace(-cfg.field_extent, cfg.field_extent, cfg.field_points)
    X, Y = np.meshgrid(axis, axis)
    pts = (X + 1j * Y).ravel()
    vel = blob_sim.macroscopic_field(sheets, pts)
    write_csv(out / "field.csv", {"x": pts.real, "y": pts.imag, "u": vel.real, "v": vel.imag})
    write_curve_csv(out / "zone_plus.csv", sheets[-1].as_curve())
    write_curve_csv(out / "zone_minus.csv", sheets[0].as_curve())
    write_curve_csv(out / "interface.csv", state.as_curve())
    m.summaries.update(
        {
            "field_time": t_field,
            "sheets": len(sheets),
            "max_speed": float(np.max(np.abs(vel))),
            "circulation": blob_sim.circulation(state),
        }
    )


PIPELINE_FUNCS = {
    "dissipation": _pipeline_dissipation,
    "construct": _pipeline_construct,
    "simulate": _pipeline_simulate,
    "field": _pipeline_field,
}


def run_experiment(cfg: ExperimentConfig, out: Path | str) -> RunManifest:
    """Run the configured pipeline, write its files and ``manifest.json`` into ``out``."""
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    manifest = RunManifest(pipeline=cfg.pipeline, config=cfg.echo(), versions=_versions())
    PIPELINE_FUNCS[cfg.pipeline](cfg, out, manifest)
    RENDERERS[cfg.pipeline](out, manifest)
    manifest.write(out)
    return manifest


def rerender(out: Path | str) -> RunManifest:
    """Redraw the figures of a finished run from its CSV files and refresh the manifest."""
    out = Path(out)
    path = out / MANIFEST_NAME
    try:
        manifest = RunManifest.from_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError([f"out: no {MANIFEST_NAME} in {out}; run a pipeline first"]) from exc
    if manifest.pipeline not in RENDERERS:
        raise ConfigError([f"pipeline: manifest names unknown pipeline {manifest.pipeline!r}"])
    RENDERERS[manifest.pipeline](out, manifest)
    manifest.write(out)
    return manifest


# ---------------------------------------------------------------------------
# command line


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vortexzone", description="Turbulence-zone construction and vortex-blob experiments.")
    p.add_argument("command", choices=PIPELINES + ("report",))
    p.add_argument("--preset", help=f"start from a preset ({', '.join(PRESETS)})")
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--out", type=Path, default=Path("vortexzone-out"), help="output directory")
    p.add_argument("--resolution", type=int, help="grid size (dissipation, construct) or blob count (simulate, field)")
    p.add_argument("--full-scale", action="store_true", help=f"use {FULL_SCALE_NODES} blobs")
    return p


def _config_from_args(args) -> ExperimentConfig:
    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"config: cannot read {args.config}: {exc}"]) from exc
    overrides: dict[str, str] = {"pipeline": args.command}
    if args.preset:
        file_keys, _ = _tokenize(text)
        if "preset" in file_keys and file_keys["preset"] != args.preset:
            raise ConfigError([f"preset: --preset {args.preset!r} conflicts with preset {file_keys['preset']!r} in {args.config}"])
        overrides["preset"] = args.preset
    if args.full_scale:
        overrides["full_scale"] = "true"
        overrides["S_count"] = str(FULL_SCALE_NODES)
    if args.resolution is not None:
        key = "S_count" if args.command in ("simulate", "field") else "resolution"
        overrides[key] = str(args.resolution)
    return parse_config(text, overrides)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "report":
            manifest = rerender(args.out)
        else:
            cfg = _config_from_args(args)
            manifest = run_experiment(cfg, args.out)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    except PRECONDITION_ERRORS as exc:
        print(f"numerical precondition failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(f"{manifest.pipeline}: wrote {len(manifest.files) + 1} files to {args.out}")
    for key, value in sorted(manifest.summaries.items()):
        print(f"  {key} = {value}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
