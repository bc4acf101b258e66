"""Exact 2x2 algebra: Pauli decompositions, closed-form exponentials, Bloch mapping.

All Hamiltonians are in units with hbar = 1 and are written as
``H = c0 I + cx sx + cy sy + cz sz``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NonHermitianError, NormalizationError

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z])

HERMITIAN_TOL = 1e-10
NORM_TOL = 1e-10
ZERO_FIELD = 1e-300


class PauliCoefficients(NamedTuple):
    c0: float
    cx: float
    cy: float
    cz: float

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz])


def hermitize(m, tol=HERMITIAN_TOL) -> np.ndarray:
    """Symmetrize ``m`` to ``(m + m^dagger)/2``, rejecting genuine asymmetry."""
    m = np.asarray(m, dtype=complex)
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym > tol:
        raise NonHermitianError(asym)
    return 0.5 * (m + m.conj().T)


def pauli_decompose(m) -> PauliCoefficients:
    """Coefficients ``c_i = Tr(sigma_i M)/2`` of a Hermitian 2x2 matrix."""
    m = hermitize(m)
    c = np.einsum("kij,ji->k", PAULI, m).real / 2
    return PauliCoefficients(*map(float, c))


def reconstruct(coeffs) -> np.ndarray:
    """Inverse of :func:`pauli_decompose`; accepts shape (4,) or (..., 4)."""
    c = np.asarray(coeffs, dtype=float)
    return np.tensordot(c, PAULI, axes=([-1], [0]))


def exp_coeffs(coeffs, dt) -> np.ndarray:
    """Vectorized ``exp(-i H dt)`` from Pauli coefficients of shape (..., 4).

    ``dt`` broadcasts against the leading dimensions. Returns (..., 2, 2).
    """
    c = np.asarray(coeffs, dtype=float)
    dt = np.asarray(dt, dtype=float)
    c0, cx, cy, cz = np.moveaxis(c, -1, 0)
    norm = np.sqrt(cx * cx + cy * cy + cz * cz)
    theta = norm * dt
    small = norm < ZERO_FIELD
    # sin(|c| dt)/|c|; the c -> 0 limit is dt
    s = np.where(small, dt, np.sin(theta) / np.where(small, 1.0, norm))
    cos = np.cos(theta)
    phase = np.exp(-1j * c0 * dt)
    out = np.empty(np.broadcast(c0, dt).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = phase * (cos - 1j * s * cz)
    out[..., 0, 1] = phase * (-1j * s * (cx - 1j * cy))
    out[..., 1, 0] = phase * (-1j * s * (cx + 1j * cy))
    out[..., 1, 1] = phase * (cos + 1j * s * cz)
    return out


def exp_hermitian(h, dt: float) -> np.ndarray:
    """Closed-form ``exp(-i H dt)`` for a Hermitian 2x2 ``h``."""
    if not np.isfinite(dt):
        raise ValueError(f"time step must be finite, got {dt!r}")
    return exp_coeffs(pauli_decompose(h), dt)


def qubit_state(a, b=None) -> np.ndarray:
    """Normalized state ``a|0> + b|1>``; also accepts a length-2 sequence."""
    if b is None:
        v = np.asarray(a, dtype=complex).reshape(2)
    else:
        v = np.array([a, b], dtype=complex)
    n = np.linalg.norm(v)
    if n == 0 or not np.isfinite(n):
        raise NormalizationError(n)
    return v / n


def check_normalized(psi, tol=NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    n = np.linalg.norm(psi)
    if abs(n - 1) > tol:
        raise NormalizationError(n)
    return psi


def bloch_vector(psi) -> np.ndarray:
    """Bloch vector ``<psi|sigma_i|psi>`` of a normalized state."""
    psi = check_normalized(psi)
    return bloch_vectors(psi)


def bloch_vectors(states) -> np.ndarray:
    """Vectorized Bloch map for states of shape (..., 2); no normalization check."""
    a = states[..., 0]
    b = states[..., 1]
    ab = np.conj(a) * b
    return np.stack(
        [2 * ab.real, 2 * ab.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=-1
    )


def fix_phase(psi, tol=1e-12) -> np.ndarray:
    """Rotate the global phase so the first non-vanishing component is real positive."""
    psi = np.asarray(psi, dtype=complex)
    for i, z in enumerate(psi):
        if abs(z) > tol:
            out = psi * (abs(z) / z)
            out[i] = abs(z)  # exactly real, no round-off imaginary part
            return out
    return psi


def state_from_bloch(r) -> np.ndarray:
    """Pure state with Bloch vector ``r`` (normalized), phase-fixed."""
    r = np.asarray(r, dtype=float)
    r = r / np.linalg.norm(r)
    rx, ry, rz = r
    # columns of the projector (I + r.sigma)/2; the longer one is well conditioned
    cols = np.array([[1 + rz, rx + 1j * ry], [rx - 1j * ry, 1 - rz]]) / 2
    v = cols[0] if np.linalg.norm(cols[0]) >= np.linalg.norm(cols[1]) else cols[1]
    return fix_phase(v / np.linalg.norm(v))


def rotation_matrix(u) -> np.ndarray:
    """SO(3) matrix ``R`` with ``u (r.sigma) u^dagger = (R r).sigma``."""
    u = np.asarray(u, dtype=complex)
    rows = []
    for s in PAULI[1:]:
        rows.append([np.real(np.trace(s @ u @ t @ u.conj().T)) / 2 for t in PAULI[1:]])
    return np.array(rows)


def wrap_phase(x):
    """Map angles to the principal interval (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    y = np.where(y <= -np.pi, y + 2 * np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


def unitarity_defect(u) -> float:
    u = np.asarray(u, dtype=complex)
    eye = np.eye(u.shape[-1])
    return float(np.max(np.abs(np.swapaxes(u.conj(), -1, -2) @ u - eye)))
