"""Pure-Python RK4 kernel, used when the compiled extension is unavailable.

Same signature and arithmetic order as ``papsim._rk4.rk4_propagate``.
"""

import numpy as np


def _deriv(chi_s, detuning, b):
    b0 = b[0]
    acc = 0j
    out = [0j] * len(b)
    for i, c in enumerate(chi_s):
        acc = acc + 0.5 * c.conjugate() * b[i + 1]
        out[i + 1] = -1j * (detuning[i] * b[i + 1] + 0.5 * c * b0)
    out[0] = -1j * acc
    return out


def rk4_propagate(chi, detuning, dt, psi0, stride):
    chi = np.ascontiguousarray(chi, dtype=np.complex128)
    n = len(detuning)
    n_steps = (chi.shape[1] - 1) // 2
    n_rec = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    rec = np.empty((n_rec, n + 1), dtype=np.complex128)
    det = [float(x) for x in detuning]
    # column-major python lists: samples[s] is the tuple of drives at half-step s
    samples = [tuple(complex(v) for v in col) for col in chi.T]
    b = [complex(x) for x in psi0]
    rec[0] = b
    r = 1
    h = 0.5 * dt
    w = dt / 6.0
    rng = range(n + 1)
    for m in range(n_steps):
        k1 = _deriv(samples[2 * m], det, b)
        k2 = _deriv(samples[2 * m + 1], det, [b[j] + h * k1[j] for j in rng])
        k3 = _deriv(samples[2 * m + 1], det, [b[j] + h * k2[j] for j in rng])
        k4 = _deriv(samples[2 * m + 2], det, [b[j] + dt * k3[j] for j in rng])
        b = [b[j] + w * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) for j in rng]
        if (m + 1) % stride == 0 or m + 1 == n_steps:
            rec[r] = b
            r += 1
    return rec
