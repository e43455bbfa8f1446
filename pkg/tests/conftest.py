import math

import numpy as np
import pytest

from vortexzone.curve import ClosedCurve, PeriodicGrid, ScalarField


@pytest.fixture
def circle128() -> ClosedCurve:
    return ClosedCurve.circle(128)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def trig_field(grid: PeriodicGrid, coeffs_cos, coeffs_sin=(), const: float = 0.0) -> ScalarField:
    theta = 2 * math.pi * grid.nodes / grid.length
    v = np.full(grid.n, const, dtype=float)
    for k, a in enumerate(coeffs_cos, start=1):
        v += a * np.cos(k * theta)
    for k, b in enumerate(coeffs_sin, start=1):
        v += b * np.sin(k * theta)
    return ScalarField(grid, v)


def random_smooth_strength(rng: np.random.Generator, grid: PeriodicGrid, degree: int = 4) -> ScalarField:
    """Random trigonometric polynomial bounded away from zero."""
    cos = rng.normal(scale=0.3, size=degree) / np.arange(1, degree + 1)
    sin = rng.normal(scale=0.3, size=degree) / np.arange(1, degree + 1)
    return trig_field(grid, cos, sin, const=1.0 + rng.random())


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion-marked test

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "PASS" if report.outcome == "passed" else "FAIL"
        _CRITERIA[number] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")
