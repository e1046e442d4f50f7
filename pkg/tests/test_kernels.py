import os
import subprocess
import sys

import numpy as np
import pytest

from papsim import kernels


def random_problem(n_levels=2, n_steps=200, seed=0):
    rng = np.random.default_rng(seed)
    chi = 0.05 * (rng.standard_normal((n_levels, 2 * n_steps + 1)) + 1j * rng.standard_normal((n_levels, 2 * n_steps + 1)))
    det = 0.01 * rng.standard_normal(n_levels)
    psi0 = np.zeros(n_levels + 1, complex)
    psi0[0] = 1
    return np.ascontiguousarray(chi), det, psi0


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernel not built")
@pytest.mark.parametrize("n_levels,stride", [(1, 1), (2, 3), (3, 7)])
def test_compiled_matches_python(n_levels, stride):
    chi, det, psi0 = random_problem(n_levels)
    a = kernels.rk4_propagate(chi, det, 0.5, psi0, stride)
    b = kernels.python_rk4_propagate(chi, det, 0.5, psi0, stride)
    assert a.shape == b.shape
    assert np.allclose(a, b, rtol=0, atol=1e-14)


def test_record_layout():
    chi, det, psi0 = random_problem(2, 10)
    rec = kernels.python_rk4_propagate(chi, det, 0.5, psi0, 4)
    # initial state, steps 4 and 8, final step 10
    assert rec.shape == (4, 3)
    assert np.array_equal(rec[0], psi0)


def test_unitary_steps():
    _, det, psi0 = random_problem(2, 400, seed=3)
    t = np.linspace(-100, 100, 801)
    drive = 0.05 * np.exp(-0.5 * (t / 30) ** 2) * np.exp(0.01j * t)
    chi = np.ascontiguousarray(np.vstack([drive, 1.4 * drive]))
    rec = kernels.rk4_propagate(chi, det, 0.5, psi0, 10)
    assert np.max(np.abs(np.sum(np.abs(rec) ** 2, axis=1) - 1)) < 1e-9


def test_pure_python_fallback_selected():
    env = dict(os.environ, PAPSIM_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from papsim import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
