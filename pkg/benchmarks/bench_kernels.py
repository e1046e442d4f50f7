"""Compare the compiled and pure-Python RK4 kernels on a realistic drive.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from papsim import kernels
from papsim.experiments import Setup, simulate


def _drive():
    """Coupling and detuning arrays of a chirped double-window pi pulse."""
    setup = Setup()
    sim = simulate(setup, setup.pair_shape(270e3), np.pi)
    fld = sim.field
    n = 2 * 4000 + 1
    i0 = int(np.argmax(np.abs(fld.envelope))) - n // 2
    env = fld.scaled_envelope[i0 : i0 + n]
    chi = np.ascontiguousarray(np.vstack([w * env for w in setup.atom.dipole_weights]))
    det = np.ascontiguousarray(setup.atom.omegas - fld.carrier)
    return chi, det, 2.0 * fld.dt


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    chi, det, h = _drive()
    psi0 = np.array([1, 0, 0], dtype=complex)
    steps = (chi.shape[1] - 1) // 2
    t_py, ref = _time(lambda: kernels.python_rk4_propagate(chi, det, h, psi0, 1), args.repeat)
    print(f"steps: {steps}, levels: {chi.shape[0]}")
    print(f"python : {t_py * 1e3:9.2f} ms")
    if kernels.BACKEND != "cython":
        print("compiled kernel not available; build with `pip install -e . --no-build-isolation`")
        return
    t_cy, out = _time(lambda: kernels.rk4_propagate(chi, det, h, psi0, 1), args.repeat)
    print(f"cython : {t_cy * 1e3:9.2f} ms")
    print(f"speedup: {t_py / t_cy:9.1f}x, max |difference| {np.abs(out - ref).max():.1e}")


if __name__ == "__main__":
    main()
