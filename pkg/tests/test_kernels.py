import os
import subprocess
import sys

import numpy as np
import pytest

from dasplit import kernels
from dasplit.surgery import build_theorem_map, stratified_points

compiled = pytest.mark.skipif(kernels.backend_name() != "compiled", reason="compiled kernels not built")


@pytest.fixture(scope="module")
def setup():
    f = build_theorem_map()
    X = stratified_points(f, 5000, 2000, 2000, np.random.default_rng(14))
    return f, X


@compiled
def test_step_agrees(setup):
    f, X = setup
    T = f.table
    py, c = kernels.python_backend, kernels.backend
    assert np.max(np.abs(py.step(T, X) - c.step(T, X))) < 1e-15
    Y = py.step(T, X)
    assert np.max(np.abs(py.step_inverse(T, Y) - c.step_inverse(T, Y))) < 1e-15


@compiled
def test_jacobian_agrees(setup):
    f, X = setup
    T = f.table
    a = kernels.python_backend.jacobian(T, X)
    b = kernels.backend.jacobian(T, X)
    rel = np.abs(a - b).max(axis=(1, 2)) / np.abs(a).max(axis=(1, 2))
    # steep inner profiles turn last-bit differences in chart coordinates into ~1e-10
    assert rel.max() < 1e-9


@compiled
def test_bundle_agrees(setup):
    f, X = setup
    T = f.table
    for which in (0, 1):
        a = kernels.python_backend.bundle(T, X[:2000], which, 200, 1e-10)[0]
        b = kernels.backend.bundle(T, X[:2000], which, 200, 1e-10)[0]
        assert np.abs(np.abs((a * b).sum(axis=1)) - 1).max() < 1e-12


def test_forced_python_backend():
    env = dict(os.environ, DASPLIT_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from dasplit import kernels; print(kernels.backend_name())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
