"""Phase functionals of a cyclic evolution and Bloch-sphere geometry.

Conventions (hbar = 1):

* total phase ``phi_x = arg <e_x|U(tau)|e_x>`` for the cyclic states ``e_x``,
* dynamical phase ``delta_x = -int <e_x|U^dagger H U|e_x> dt`` (unwrapped),
* geometric phase ``gamma_x = phi_x - delta_x`` (principal value),
* ``Omega`` is the signed solid angle of the label-0 loop, so that
  ``gamma_x = (x - 1/2) Omega`` modulo 2 pi for cyclic evolutions.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GaugeError, OpenPathError, QuadratureWarning, UndefinedPhaseError
from .propagator import Propagation
from .su2 import PAULI, check_normalized, state_from_bloch, wrap_phase

DEGENERACY_GAP = 1e-10
PHASE_FLOOR = 1e-12
CLOSED_TOL = 1e-8
CYCLIC_TOL = 1e-6
MAX_SPACING = 0.1
APEX_CLEARANCE = 1e-6
QUADRATURE_WARN = 1e-6


@dataclass(frozen=True)
class CyclicBasis:
    e0: np.ndarray
    e1: np.ndarray
    degenerate: bool = False
    gap: float = 0.0

    def __getitem__(self, x):
        return (self.e0, self.e1)[x]

    def coordinates(self, psi):
        """Amplitudes ``(a, b) = (<e0|psi>, <e1|psi>)``."""
        psi = np.asarray(psi, dtype=complex)
        return complex(np.vdot(self.e0, psi)), complex(np.vdot(self.e1, psi))

    def state(self, a, b):
        return a * self.e0 + b * self.e1


def cyclic_basis(u) -> CyclicBasis:
    """Eigenbasis of a 2x2 unitary with a reproducible labeling.

    Label 0 is the eigenvector with the larger <sz>, ties broken by <sx> and
    then <sy>. If the eigenvalues coincide (U proportional to I) the
    computational basis is returned with ``degenerate=True``.
    """
    u = np.asarray(u, dtype=complex)
    vec = np.einsum("kij,ji->k", PAULI[1:], u) / 2
    gap = 2 * float(np.linalg.norm(vec))
    if gap < DEGENERACY_GAP:
        return CyclicBasis(np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex), True, gap)
    # u_vec = -i e^{i alpha} sin(beta) n with n real
    j = int(np.argmax(np.abs(vec)))
    n = (vec * np.conj(vec[j])).real
    return basis_from_axis(n, gap)


def basis_from_axis(n, gap: float = math.nan) -> CyclicBasis:
    """Orthonormal pair with Bloch vectors +-n, labeled by the <sz>, <sx>, <sy> rule."""
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    for k in (2, 0, 1):
        if abs(n[k]) > 1e-12:
            if n[k] < 0:
                n = -n
            break
    return CyclicBasis(state_from_bloch(n), state_from_bloch(-n), False, gap)


def _expectation(u, e):
    return complex(np.vdot(e, u @ e))


def total_phase(x: int, basis: CyclicBasis, u) -> float:
    z = _expectation(np.asarray(u, dtype=complex), basis[x])
    if abs(z) < PHASE_FLOOR:
        raise UndefinedPhaseError(abs(z))
    return float(np.angle(z))


def _paired_integral(prop: Propagation, start, end):
    """Trapezoid on a grid with every other point removed, inside each segment."""
    seg = prop.segment_index
    first = np.r_[True, seg[1:] != seg[:-1]]
    local = np.arange(len(seg)) - np.maximum.accumulate(np.where(first, np.arange(len(seg)), 0))
    dts = prop.dts
    fine = dts * (start + end) / 2
    pair = (local[:-1] % 2 == 0) & (seg[:-1] == seg[1:])
    i = np.nonzero(pair)[0]
    coarse = fine.copy()
    coarse[i] = (dts[i] + dts[i + 1]) * (start[i] + end[i + 1]) / 2
    coarse[i + 1] = 0
    return complex(np.sum(coarse))


def _integral(prop: Propagation, bra, ket, estimate=False):
    start, end = prop.matrix_elements(bra, ket)
    value = prop.integrate(start, end)
    if not estimate:
        return value
    return value, abs(value - _paired_integral(prop, start, end)) / 3


def dynamical_phase_basis(x: int, basis: CyclicBasis, prop: Propagation) -> float:
    """``delta_x = -int <e_x|U^dagger H U|e_x> dt``, trapezoidal, unwrapped."""
    e = basis[x]
    value, err = _integral(prop, e, e, estimate=True)
    if err > QUADRATURE_WARN:
        warnings.warn(
            f"dynamical phase quadrature error estimate {err:.2e} exceeds {QUADRATURE_WARN:g}; "
            "refine the grid",
            QuadratureWarning,
            stacklevel=2,
        )
    return -value.real


def geometric_phase_basis(x: int, basis: CyclicBasis, prop: Propagation) -> float:
    return wrap_phase(total_phase(x, basis, prop.final) - dynamical_phase_basis(x, basis, prop))


@dataclass(frozen=True, eq=False)
class BlochPath:
    points: np.ndarray  # (M, 3) unit vectors

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3 or len(p) < 1:
            raise ValueError("Bloch path needs an (M, 3) array of points")
        object.__setattr__(self, "points", p)

    @property
    def gap(self) -> float:
        return _angle(self.points[0], self.points[-1])

    @property
    def closed(self) -> bool:
        return self.gap <= CLOSED_TOL

    @property
    def max_spacing(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.max(_angle(self.points[:-1], self.points[1:])))

    def reversed(self) -> "BlochPath":
        return BlochPath(self.points[::-1])

    def closed_geodesically(self) -> "BlochPath":
        if self.gap == 0.0:
            return self
        return BlochPath(np.vstack([self.points, self.points[:1]]))

    def refined(self, max_angle: float = MAX_SPACING) -> "BlochPath":
        """Insert great-circle points so consecutive points are < ``max_angle`` apart."""
        p = self.points
        if len(p) < 2:
            return self
        ang = _angle(p[:-1], p[1:])
        extra = np.maximum(np.ceil(ang / max_angle).astype(int) - 1, 0)
        if not extra.any():
            return self
        out = [p[:1]]
        for k in range(len(p) - 1):
            m = extra[k]
            if m:
                s = np.arange(1, m + 1) / (m + 1)
                out.append(_slerp(p[k], p[k + 1], ang[k], s))
            out.append(p[k + 1 : k + 2])
        return BlochPath(np.vstack(out))


def _angle(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.arctan2(cross, np.sum(a * b, axis=-1))


def _slerp(a, b, theta, s):
    if np.sin(theta) < 1e-12:
        raise ValueError("cannot interpolate between antipodal Bloch points")
    w0 = np.sin((1 - s) * theta) / np.sin(theta)
    w1 = np.sin(s * theta) / np.sin(theta)
    return w0[:, None] * a + w1[:, None] * b


class SolidAngle(NamedTuple):
    value: float  # principal value in (-2 pi, 2 pi]
    branch: int  # raw fan sum = value + 4 pi branch
    closure_gap: float

    @property
    def full(self) -> float:
        return self.value + 4 * math.pi * self.branch


def _principal(raw: float):
    k = math.ceil((raw - 2 * math.pi) / (4 * math.pi))
    return raw - 4 * math.pi * k, k


def _pick_apex(vertices):
    def clear(a):
        d = vertices @ a
        return np.all(d < math.cos(APEX_CLEARANCE)) and np.all(d > -math.cos(APEX_CLEARANCE))

    c = vertices.mean(axis=0)
    if np.linalg.norm(c) > 1e-9 and clear(c / np.linalg.norm(c)):
        return c / np.linalg.norm(c)
    distinct = [vertices[0]]
    for v in vertices[1:]:
        if all(_angle(v, w) > APEX_CLEARANCE for w in distinct):
            distinct.append(v)
        if len(distinct) == 3:
            break
    candidates = []
    if len(distinct) == 3:
        candidates.append(np.mean(distinct, axis=0))
    if len(distinct) >= 2:
        candidates.append(np.cross(distinct[0], distinct[1]))
    candidates += list(np.eye(3)) + [np.array([1.0, 2.0, 3.0]), np.array([-3.0, 1.0, 2.0])]
    for a in candidates:
        n = np.linalg.norm(a)
        if n > 1e-9 and clear(a / n):
            return a / n
    raise ValueError("no admissible fan apex for this path")


def solid_angle(path: BlochPath, close_tolerance: float = CYCLIC_TOL) -> SolidAngle:
    """Signed solid angle enclosed by a closed Bloch path.

    Counter-clockwise loops seen from outside the sphere are positive. The
    polygon is fanned from an apex near its centroid and the signed excesses
    of the spherical triangles are summed. Paths whose ends are apart by at
    most ``close_tolerance`` are closed along the connecting geodesic.
    """
    gap = path.gap
    if gap > CLOSED_TOL:
        if gap > close_tolerance:
            raise OpenPathError(gap)
        path = path.closed_geodesically()
    p = path.refined(MAX_SPACING).points
    if len(p) < 3 or np.max(_angle(p, p[0])) < 1e-14:
        return SolidAngle(0.0, 0, gap)
    a = _pick_apex(p[:-1])
    b, c = p[:-1], p[1:]
    triple = np.einsum("j,ij->i", a, np.cross(b, c))
    denom = 1 + b @ a + np.sum(b * c, axis=1) + c @ a
    raw = float(np.sum(2 * np.arctan2(triple, denom)))
    value, k = _principal(raw)
    return SolidAngle(value, k, gap)


@dataclass(frozen=True)
class PhaseDecomposition:
    label: int
    total: float
    dynamical: float
    geometric: float
    solid_angle: float
    solid_angle_branch: int = 0

    @property
    def expected_geometric(self) -> float:
        return (self.label - 0.5) * self.solid_angle

    def to_dict(self):
        return {
            "label": self.label,
            "total": self.total,
            "dynamical": self.dynamical,
            "geometric": self.geometric,
            "solid_angle": self.solid_angle,
            "solid_angle_branch": self.solid_angle_branch,
        }


def _label_solid_angle(x, basis, prop, close_tolerance=CYCLIC_TOL):
    # e1 traces the antipode of the e0 loop, whose signed area is the negative
    own = solid_angle(prop.bloch_path(basis[x]), close_tolerance)
    if x == 0:
        return own
    value, k = _principal(-own.full)
    return SolidAngle(value, k, own.closure_gap)


def decompose(prop: Propagation, basis: CyclicBasis | None = None):
    """Total, dynamical and geometric phase plus solid angle for both labels."""
    basis = cyclic_basis(prop.final) if basis is None else basis
    out = []
    for x in (0, 1):
        phi = total_phase(x, basis, prop.final)
        delta = dynamical_phase_basis(x, basis, prop)
        omega = _label_solid_angle(x, basis, prop)
        out.append(PhaseDecomposition(x, phi, delta, wrap_phase(phi - delta), omega.value, omega.branch))
    return tuple(out)


@dataclass(frozen=True)
class GammaOmegaReport:
    label: int
    geometric: float
    solid_angle: float
    expected: float
    discrepancy: float
    closure_gap: float

    def to_dict(self):
        return {
            "label": self.label,
            "geometric": self.geometric,
            "solid_angle": self.solid_angle,
            "expected": self.expected,
            "discrepancy": self.discrepancy,
            "closure_gap": self.closure_gap,
        }


def check_gamma_omega(x: int, basis: CyclicBasis, prop: Propagation) -> GammaOmegaReport:
    """Compare the integral form of gamma_x with (x - 1/2) times the enclosed solid angle."""
    gap = prop.bloch_path(basis[x]).gap
    if gap > CYCLIC_TOL:
        raise OpenPathError(gap)
    gamma = geometric_phase_basis(x, basis, prop)
    omega = _label_solid_angle(x, basis, prop)
    expected = (x - 0.5) * omega.value
    return GammaOmegaReport(x, gamma, omega.value, expected, abs(wrap_phase(gamma - expected)), gap)


def pancharatnam_phase(psi, u) -> float:
    psi = check_normalized(psi)
    z = complex(np.vdot(psi, np.asarray(u, dtype=complex) @ psi))
    if abs(z) < PHASE_FLOOR:
        raise UndefinedPhaseError(abs(z))
    return float(np.angle(z))


@dataclass(frozen=True)
class StateDynamicalPhase:
    direct: float
    decomposed: float
    diagonal_term: float
    cross_term: float
    direct_unwrapped: float

    @property
    def discrepancy(self) -> float:
        return abs(wrap_phase(self.direct - self.decomposed))

    def to_dict(self):
        return {
            "direct": self.direct,
            "decomposed": self.decomposed,
            "diagonal_term": self.diagonal_term,
            "cross_term": self.cross_term,
            "direct_unwrapped": self.direct_unwrapped,
            "discrepancy": self.discrepancy,
        }


def dynamical_phase_state(
    psi, basis: CyclicBasis, prop: Propagation, enforce_gauge: bool = True, gauge_tol: float = 1e-9
) -> StateDynamicalPhase:
    """Dynamical phase of an arbitrary input state, directly and via its basis split.

    The split into a diagonal term and a cross term holds only when the
    integral of Tr H vanishes; with ``enforce_gauge`` a violation raises
    :class:`GaugeError`.
    """
    psi = check_normalized(psi)
    trace = prop.trace_integral()
    if enforce_gauge and abs(trace) > gauge_tol:
        raise GaugeError(trace)
    a, b = basis.coordinates(psi)
    direct = -_integral(prop, psi, psi).real
    i00 = _integral(prop, basis.e0, basis.e0).real
    i10 = _integral(prop, basis.e1, basis.e0)
    diagonal = -(abs(a) ** 2 - abs(b) ** 2) * i00
    cross = -2 * (a * np.conj(b) * i10).real
    return StateDynamicalPhase(
        wrap_phase(direct), wrap_phase(diagonal + cross), float(diagonal), float(cross), float(direct)
    )


def relative_phase(u, basis: CyclicBasis | None = None) -> float:
    """``phi_0 - phi_1`` in (-pi, pi]; zero for a degenerate (global-phase) unitary."""
    basis = cyclic_basis(u) if basis is None else basis
    if basis.degenerate:
        return 0.0
    return wrap_phase(total_phase(0, basis, u) - total_phase(1, basis, u))


TOMOGRAPHIC_STATES = (
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([1, 1], dtype=complex) / math.sqrt(2),
    np.array([1, 1j], dtype=complex) / math.sqrt(2),
)


def transported_hamiltonian(prop: Propagation) -> np.ndarray:
    """Pauli coefficients of ``U^dagger H U`` at every step start.

    Rebuilt only from the diagonal integrands ``<psi|U^dagger H U|psi>`` of
    the four tomographic states, so vanishing integrands force H = 0.
    """
    f = np.array([prop.matrix_elements(s, s)[0].real for s in TOMOGRAPHIC_STATES])
    c0 = (f[0] + f[1]) / 2
    return np.stack([c0, f[2] - c0, f[3] - c0, (f[0] - f[1]) / 2], axis=-1)
