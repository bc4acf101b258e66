# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled midpoint-exponential propagation loop."""
import numpy as np

from libc.math cimport cos, sin, sqrt


def propagate(const double[:, ::1] coeffs, const double[::1] dts):
    """Cumulative products ``U_{k+1} = exp(-i H_k dt_k) U_k`` with ``U_0 = I``.

    ``coeffs`` holds midpoint Pauli coefficients, shape (N, 4).
    Returns a complex array of shape (N + 1, 2, 2).
    """
    cdef Py_ssize_t n = coeffs.shape[0]
    if dts.shape[0] != n:
        raise ValueError("coeffs and dts disagree in length")
    out = np.empty((n + 1, 2, 2), dtype=np.complex128)
    cdef double complex[:, :, ::1] u = out
    cdef Py_ssize_t k
    cdef double c0, cx, cy, cz, dt, nrm, th, s, c
    cdef double complex ph, a00, a01, a10, a11, u00, u01, u10, u11
    u[0, 0, 0] = 1.0
    u[0, 0, 1] = 0.0
    u[0, 1, 0] = 0.0
    u[0, 1, 1] = 1.0
    with nogil:
        for k in range(n):
            c0 = coeffs[k, 0]
            cx = coeffs[k, 1]
            cy = coeffs[k, 2]
            cz = coeffs[k, 3]
            dt = dts[k]
            nrm = sqrt(cx * cx + cy * cy + cz * cz)
            th = nrm * dt
            c = cos(th)
            if nrm < 1e-300:
                s = dt
            else:
                s = sin(th) / nrm
            ph = cos(c0 * dt) - 1j * sin(c0 * dt)
            a00 = ph * (c - 1j * s * cz)
            a01 = ph * (-1j * s * (cx - 1j * cy))
            a10 = ph * (-1j * s * (cx + 1j * cy))
            a11 = ph * (c + 1j * s * cz)
            u00 = u[k, 0, 0]
            u01 = u[k, 0, 1]
            u10 = u[k, 1, 0]
            u11 = u[k, 1, 1]
            u[k + 1, 0, 0] = a00 * u00 + a01 * u10
            u[k + 1, 0, 1] = a00 * u01 + a01 * u11
            u[k + 1, 1, 0] = a10 * u00 + a11 * u10
            u[k + 1, 1, 1] = a10 * u01 + a11 * u11
    return out
