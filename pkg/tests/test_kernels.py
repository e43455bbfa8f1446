import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexzone import kernels

HAVE_COMPILED = "cython" in kernels.available_backends()
needs_compiled = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled extension not built")


def random_cloud(rng, n):
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    w = rng.normal(size=n) / n
    return z, w


def direct_velocity(x, z, w, delta):
    diff = x[:, None] - z[None, :]
    return (1j * diff * w[None, :] / (np.abs(diff) ** 2 + delta**2)).sum(axis=1) / (2 * math.pi)


def direct_energy_rows(z, w, delta):
    diff = z[:, None] - z[None, :]
    logs = np.log(np.abs(diff) ** 2 + delta**2) * w[None, :]
    np.fill_diagonal(logs, 0.0)
    return logs.sum(axis=1)


@pytest.fixture(params=kernels.available_backends())
def each_backend(request):
    with kernels.use_backend(request.param):
        yield request.param


def test_velocity_matches_direct_sum(each_backend, rng):
    z, w = random_cloud(rng, 300)
    x = rng.normal(size=50) + 1j * rng.normal(size=50)
    got = kernels.induced_velocity(x, z, w, 0.01)
    assert np.max(np.abs(got - direct_velocity(x, z, w, 0.01))) < 1e-13


def test_energy_rows_match_direct_sum(each_backend, rng):
    z, w = random_cloud(rng, 200)
    got = kernels.log_energy_rows(z, w, 0.01)
    assert np.max(np.abs(got - direct_energy_rows(z, w, 0.01))) < 1e-13


def test_self_term_is_zero(each_backend):
    z = np.array([0.5 + 0.5j])
    assert kernels.induced_velocity(z, z, np.array([3.0]), 0.002)[0] == 0
    assert kernels.log_energy_rows(z, np.array([3.0]), 0.002)[0] == 0


def test_coincident_targets_with_zero_delta_skip(each_backend):
    z = np.array([0.0, 1.0], dtype=complex)
    v = kernels.induced_velocity(z, z, np.array([1.0, 1.0]), 1e-200)
    assert np.all(np.isfinite(v))


@needs_compiled
def test_backends_agree(rng):
    z, w = random_cloud(rng, 500)
    with kernels.use_backend("python"):
        vp = kernels.induced_velocity(z, z, w, 0.002)
        ep = kernels.log_energy_rows(z, w, 0.002)
    with kernels.use_backend("cython"):
        vc = kernels.induced_velocity(z, z, w, 0.002)
        ec = kernels.log_energy_rows(z, w, 0.002)
    assert np.max(np.abs(vp - vc)) <= 1e-14 * np.max(np.abs(vp))
    assert np.max(np.abs(ep - ec)) <= 1e-13 * np.max(np.abs(ep))


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 40), seed=st.integers(0, 2**32 - 1), delta=st.floats(1e-4, 1.0))
def test_antisymmetry_cancels_impulse_rate(n, seed, delta):
    """The kernel is odd, so sum_j w_j u(z_j) vanishes up to roundoff."""
    rng = np.random.default_rng(seed)
    z, w = random_cloud(rng, n)
    v = kernels.induced_velocity(z, z, w, delta)
    scale = np.sum(np.abs(w)) ** 2 / delta
    assert abs(np.sum(w * v)) <= 1e-13 * max(scale, 1.0)


def test_use_backend_restores():
    before = kernels.backend()
    with kernels.use_backend("python"):
        assert kernels.backend() == "python"
    assert kernels.backend() == before


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_environment_forces_fallback():
    env = dict(os.environ, VORTEXZONE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from vortexzone import kernels; print(kernels.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@needs_compiled
def test_compiled_is_default():
    env = {k: v for k, v in os.environ.items() if k != "VORTEXZONE_PURE_PYTHON"}
    out = subprocess.run(
        [sys.executable, "-c", "from vortexzone import kernels; print(kernels.backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "cython"
