"""Compiled kernel vs pure-numpy reference parity and backend selection."""

import os
import subprocess
import sys

import numpy as np
import pytest

from lightpos._kernels import BACKEND, solve_single
from lightpos._kernels import _ref

try:
    from lightpos._kernels import _core
except ImportError:
    _core = None


def random_problem(rng):
    point = np.array([rng.uniform(-2, 2), rng.uniform(-2, 2),
                      rng.uniform(0.5, 4.0)])
    while True:
        planes = rng.normal(size=(3, 3))
        planes /= np.linalg.norm(planes, axis=1)[:, None]
        dots = planes @ point
        if abs(np.linalg.det(planes)) > 0.05 and np.min(np.abs(dots)) > 0.05:
            break
    planes = np.where(dots[:, None] > 0, planes, -planes)
    k = rng.uniform(1, 50)
    if rng.uniform() < 0.5:
        kind, coeffs = 0, np.array([rng.uniform(0.5, 2.5)])
    else:
        kind, coeffs = 1, np.array([1.0, -0.4])
    d = np.linalg.norm(point)
    c = point[2] / d
    if kind == 0:
        g = c ** coeffs[0]
    else:
        g = coeffs[0] + coeffs[1] * np.arccos(c)
    s = k * (planes @ point) * g / d**3
    return planes, s, k, kind, coeffs, point


def test_reference_solver_recovers_position():
    rng = np.random.default_rng(21)
    for _ in range(100):
        planes, s, k, kind, coeffs, point = random_problem(rng)
        x, y, z, rms, status, _ = _ref.solve_single(
            planes, s, k, kind, coeffs, 0.0, 0.0, 1.0, max_iter=400)
        assert status == 0
        assert np.allclose([x, y, z], point, atol=1e-7)
        assert rms < 1e-8


@pytest.mark.skipif(_core is None, reason="compiled kernel not built")
def test_backends_agree():
    # Iteration counts may differ (float ordering changes the damping
    # path) but both must converge to the same point.
    rng = np.random.default_rng(22)
    for _ in range(200):
        planes, s, k, kind, coeffs, _ = random_problem(rng)
        ref = _ref.solve_single(planes, s, k, kind, coeffs,
                                0.0, 0.0, 1.0, max_iter=400)
        com = _core.solve_single(planes, s, k, kind, coeffs,
                                 0.0, 0.0, 1.0, max_iter=400)
        assert ref[4] == com[4]  # same status
        assert np.allclose(ref[:3], com[:3], atol=1e-10)


def test_active_backend_reported():
    assert BACKEND in ("cython", "python")
    rng = np.random.default_rng(23)
    planes, s, k, kind, coeffs, point = random_problem(rng)
    x, y, z, rms, status, _ = solve_single(
        planes, s, k, kind, coeffs, 0.0, 0.0, 1.0, max_iter=400)
    assert status == 0
    assert np.allclose([x, y, z], point, atol=1e-7)


def test_env_var_forces_python_fallback():
    env = dict(os.environ, LIGHTPOS_PURE_PY="1")
    out = subprocess.run(
        [sys.executable, "-c",
         "from lightpos._kernels import BACKEND; print(BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
