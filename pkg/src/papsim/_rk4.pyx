# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-step RK4 kernel for the 1+N rotating-wave equations.

Must stay numerically equivalent to ``papsim._rk4_py``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _deriv(const double complex[:, ::1] chi, Py_ssize_t s,
                        const double[::1] detuning, double complex[::1] b,
                        double complex[::1] out) noexcept nogil:
    cdef Py_ssize_t i, n = detuning.shape[0]
    cdef double complex acc = 0.0
    cdef double complex c
    for i in range(n):
        c = chi[i, s]
        acc = acc + 0.5 * c.conjugate() * b[i + 1]
        out[i + 1] = -1j * (detuning[i] * b[i + 1] + 0.5 * c * b[0])
    out[0] = -1j * acc


def rk4_propagate(const double complex[:, ::1] chi, const double[::1] detuning,
                  double dt, psi0, Py_ssize_t stride):
    """Integrate ``i b0' = sum conj(chi_i)/2 b_i``, ``i b_i' = D_i b_i + chi_i/2 b0``.

    ``chi`` holds the drive of each level at half-step spacing (``2*M + 1``
    samples for ``M`` steps). Returns the state every ``stride`` steps plus
    the final state, shape ``(n_records, N + 1)``.
    """
    cdef Py_ssize_t n = detuning.shape[0]
    cdef Py_ssize_t n_samples = chi.shape[1]
    cdef Py_ssize_t n_steps = (n_samples - 1) // 2
    cdef Py_ssize_t n_rec = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    out = np.empty((n_rec, n + 1), dtype=np.complex128)
    cdef double complex[:, ::1] rec = out
    cdef double complex[::1] b = np.array(psi0, dtype=np.complex128)
    cdef double complex[::1] k1 = np.empty(n + 1, dtype=np.complex128)
    cdef double complex[::1] k2 = np.empty(n + 1, dtype=np.complex128)
    cdef double complex[::1] k3 = np.empty(n + 1, dtype=np.complex128)
    cdef double complex[::1] k4 = np.empty(n + 1, dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(n + 1, dtype=np.complex128)
    cdef Py_ssize_t m, j, r = 0
    cdef double h = 0.5 * dt
    cdef double w = dt / 6.0

    with nogil:
        for j in range(n + 1):
            rec[0, j] = b[j]
        r = 1
        for m in range(n_steps):
            _deriv(chi, 2 * m, detuning, b, k1)
            for j in range(n + 1):
                tmp[j] = b[j] + h * k1[j]
            _deriv(chi, 2 * m + 1, detuning, tmp, k2)
            for j in range(n + 1):
                tmp[j] = b[j] + h * k2[j]
            _deriv(chi, 2 * m + 1, detuning, tmp, k3)
            for j in range(n + 1):
                tmp[j] = b[j] + dt * k3[j]
            _deriv(chi, 2 * m + 2, detuning, tmp, k4)
            for j in range(n + 1):
                b[j] = b[j] + w * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if (m + 1) % stride == 0 or m + 1 == n_steps:
                for j in range(n + 1):
                    rec[r, j] = b[j]
                r += 1
    return out
