"""Schedules for the three geometric phase-gate schemes.

* orange slice: two pi rotations about equatorial axes; the computational
  states are parallel transported along a lune,
* parameter tuning: a rotating field whose (omega0, omega1) are tuned so that
  the cyclic states collect dynamical phases in 2 pi Z,
* spin echo: loop, pi flip, reversed loop, pi flip.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import AdiabaticityWarning, TuningError
from .phases import BlochPath, basis_from_axis, solid_angle, _principal
from .propagator import IntegratorConfig
from .schedule import (
    ConstantSegment,
    HamiltonianSchedule,
    RotatingSegment,
    concat_schedules,
    reverse_schedule,
)
from .su2 import bloch_vectors

ADIABATIC_WARN = 0.05


@dataclass(frozen=True)
class OrangeSliceParams:
    phi: float
    t1: float = 1.0
    t2: float = 1.0

    def __post_init__(self):
        if not 0 < self.phi <= 2 * math.pi:
            raise ValueError(f"lune angle must lie in (0, 2 pi], got {self.phi!r}")
        if not (self.t1 > 0 and self.t2 > 0):
            raise ValueError("pulse durations must be positive")


def orange_slice_schedule(p: OrangeSliceParams) -> HamiltonianSchedule:
    """pi about x, then pi about (cos phi, sin phi, 0); ``U(tau) = -exp(-i phi sz)``."""
    w1 = math.pi / (2 * p.t1)
    w2 = math.pi / (2 * p.t2)
    return HamiltonianSchedule(
        (
            ConstantSegment(p.t1, (0.0, w1, 0.0, 0.0)),
            ConstantSegment(p.t2, (0.0, w2 * math.cos(p.phi), w2 * math.sin(p.phi), 0.0)),
        )
    )


@dataclass(frozen=True)
class RotatingFieldParams:
    """``H(t) = (omega1 (cos(omega t) sx + sin(omega t) sy) + omega0 sz) / 2``."""

    omega: float
    omega1: float
    omega0: float
    loops: int = 1

    def __post_init__(self):
        if self.omega == 0:
            raise ValueError("drive frequency must be nonzero")
        if self.omega0 == 0 and self.omega1 == 0:
            raise ValueError("field amplitudes (omega0, omega1) must not both vanish")
        if self.loops < 1:
            raise ValueError("loops must be >= 1")

    @property
    def period(self) -> float:
        return 2 * math.pi / abs(self.omega)


def rotating_field_schedule(p: RotatingFieldParams) -> HamiltonianSchedule:
    seg = RotatingSegment(p.loops * p.period, p.omega1 / 2, p.omega, 0.0, p.omega0 / 2)
    return HamiltonianSchedule((seg,))


@dataclass
class TuningReport:
    target_omega: float
    n: int
    omega: float
    omega0: float = math.nan
    omega1: float = math.nan
    delta_residual: float = math.nan
    omega_residual: float = math.nan
    outer_iterations: int = 0
    inner_evaluations: int = 0
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            "target_omega": self.target_omega,
            "n": self.n,
            "omega": self.omega,
            "omega0": self.omega0,
            "omega1": self.omega1,
            "delta_residual": self.delta_residual,
            "omega_residual": self.omega_residual,
            "outer_iterations": self.outer_iterations,
            "inner_evaluations": self.inner_evaluations,
        }


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class _LoopEvaluator:
    """Phase data of one drive period, from the segment's closed-form propagator."""

    def __init__(self, omega, path_points=2048):
        self.omega = omega
        self.tau = 2 * math.pi / abs(omega)
        self.path_points = path_points
        self.calls = 0

    def segment(self, omega0, omega1):
        return RotatingSegment(self.tau, omega1 / 2, self.omega, 0.0, omega0 / 2)

    def cyclic_state(self, seg):
        # one period is a Floquet cycle: the cyclic states are the eigenvectors
        # of the rotating-frame generator, also where U(tau) is proportional to I
        return basis_from_axis(seg.frame_generator()[1:]).e0

    def dynamical_phase(self, omega0, omega1):
        self.calls += 1
        seg = self.segment(omega0, omega1)
        e0 = self.cyclic_state(seg)
        t = 0.5 * self.tau * (_GL_NODES + 1)
        psi = seg.propagator(t) @ e0
        c = seg.coeffs(t)
        r = bloch_vectors(psi)
        energy = c[:, 0] + np.sum(c[:, 1:] * r, axis=1)
        return -0.5 * self.tau * float(_GL_WEIGHTS @ energy)

    def solid_angle(self, omega0, omega1):
        seg = self.segment(omega0, omega1)
        e0 = self.cyclic_state(seg)

        def area(m):
            t = np.linspace(0.0, self.tau, m + 1)
            pts = bloch_vectors(seg.propagator(t) @ e0)
            pts[-1] = pts[0]
            return solid_angle(BlochPath(pts)).full

        # inscribed-polygon error is O(m^-2); one Richardson step removes it
        m = self.path_points
        a1, a2 = area(m), area(2 * m)
        return (4 * a2 - a1) / 3


def _roots(f, lo, hi, points, tol):
    """Sign-change roots of ``f`` on a scan grid, skipping jump discontinuities."""
    xs = np.linspace(lo, hi, points)
    fs = [f(x) for x in xs]
    return _refine_brackets(f, xs, fs, tol)


def _refine_brackets(f, xs, fs, tol):
    found = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], fs[:-1], fs[1:]):
        if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
            continue
        x = brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
        if abs(f(x)) < tol:
            found.append(float(x))
    return found


def parameter_tuned_schedule(
    target_omega: float,
    n: int,
    seed: RotatingFieldParams | None = None,
    omega0_bounds: tuple | None = None,
    omega1_bounds: tuple | None = None,
    scan_points: int = 32,
    fold_bisections: int = 10,
):
    """Tune a rotating field so that delta_0 = 2 pi n and the cyclic loop encloses ``target_omega``.

    The inner problem brackets and bisects in omega0 at fixed omega1 for the
    dynamical-phase condition. It can have several roots, so the outer
    bracketing in omega1 (for the solid angle) runs once per root branch and
    the solution closest to the seed wins. Targets above 2 pi are reached by
    driving clockwise; a target of exactly 2 pi forces resonance
    (omega0 = omega) and leaves only omega1 to tune.

    Returns ``(schedule, TuningReport)``; raises :class:`TuningError` when no
    bracket exists inside the parameter bounds.
    """
    if not 0 < target_omega < 4 * math.pi:
        raise ValueError("target solid angle must lie in (0, 4 pi)")
    seed = RotatingFieldParams(1.0, 1.0, 1.0) if seed is None else seed
    w = abs(seed.omega) if target_omega <= 2 * math.pi else -abs(seed.omega)
    scale = abs(w)
    lo0, hi0 = omega0_bounds or (w - 6 * scale, w + 6 * scale)
    lo1, hi1 = omega1_bounds or (1e-3 * scale, 4 * scale)
    ev = _LoopEvaluator(w)
    report = TuningReport(target_omega, n, w)
    goal = 2 * math.pi * n

    def fail():
        report.inner_evaluations = ev.calls
        raise TuningError(
            f"no (omega0, omega1) within bounds reaches delta_0 = 2 pi * {n} "
            f"with solid angle {target_omega:.6g}",
            report.trace,
        )

    if abs(target_omega - 2 * math.pi) < 1e-9:
        # equatorial cyclic states need a resonant drive
        roots = _roots(lambda x: ev.dynamical_phase(w, x) - goal, -hi1, hi1, 2 * scan_points, 1e-9)
        report.trace = [(x, w, math.nan) for x in roots]
        if not roots:
            fail()
        omega0, omega1 = w, min(roots, key=lambda x: (abs(x - seed.omega1), x))
    else:
        def inner_roots(omega1):
            return _roots(lambda x: ev.dynamical_phase(x, omega1) - goal, lo0, hi0, scan_points, 1e-9)

        def branch_mismatch(omega1, k):
            report.outer_iterations += 1
            roots = inner_roots(omega1)
            if k >= len(roots):
                return math.nan
            area = ev.solid_angle(roots[k], omega1)
            report.trace.append((omega1, roots[k], area))
            return _principal(area - target_omega)[0]

        xs = list(np.linspace(lo1, hi1, scan_points))
        scan = [inner_roots(x) for x in xs]
        # root branches appear and vanish at folds; resolve them by bisection
        for i in range(len(xs) - 1, 0, -1):
            a, b, ra, rb = xs[i - 1], xs[i], scan[i - 1], scan[i]
            new_x, new_r = [], []
            for _ in range(fold_bisections):
                if len(ra) == len(rb):
                    break
                m = 0.5 * (a + b)
                rm = inner_roots(m)
                new_x.append(m)
                new_r.append(rm)
                if len(rm) != len(ra):
                    b, rb = m, rm
                else:
                    a, ra = m, rm
            order = np.argsort(new_x)
            xs[i:i] = [new_x[j] for j in order]
            scan[i:i] = [new_r[j] for j in order]
        xs = np.array(xs)
        branches = max((len(r) for r in scan), default=0)
        solutions = []
        for k in range(branches):
            fs = []
            for x, roots in zip(xs, scan):
                if k < len(roots):
                    area = ev.solid_angle(roots[k], x)
                    report.trace.append((float(x), roots[k], area))
                    fs.append(_principal(area - target_omega)[0])
                else:
                    fs.append(math.nan)
            for omega1 in _refine_brackets(lambda x, k=k: branch_mismatch(x, k), xs, fs, 1e-6):
                solutions.append((omega1, inner_roots(omega1)[k]))
        if not solutions:
            fail()
        omega1, omega0 = min(solutions, key=lambda s: (abs(s[0] - seed.omega1), abs(s[1] - seed.omega0)))
    report.omega0, report.omega1 = omega0, omega1
    report.delta_residual = ev.dynamical_phase(omega0, omega1) - goal
    report.omega_residual = _principal(ev.solid_angle(omega0, omega1) - target_omega)[0]
    report.inner_evaluations = ev.calls
    params = RotatingFieldParams(w, omega1, omega0, 1)
    return rotating_field_schedule(params), report


@dataclass(frozen=True)
class SpinEchoParams:
    """Cone loop of half-angle ``theta`` in a field of Larmor frequency ``omega_larmor``.

    ``pulse_duration`` defaults to 1e-3 of the loop duration; ``zero_point``
    adds an identity energy to both loops.
    """

    theta: float
    omega_larmor: float = 1.0
    omega_loop: float = 1e-3
    pulse_axis: tuple = (0.0, 1.0, 0.0)
    pulse_duration: float | None = None
    zero_point: float = 0.0

    def __post_init__(self):
        if not 0 <= self.theta < math.pi / 2:
            raise ValueError("cone half-angle must lie in [0, pi/2)")
        if self.omega_larmor <= 0 or self.omega_loop <= 0:
            raise ValueError("frequencies must be positive")

    @classmethod
    def with_ratio(cls, theta, ratio, omega_larmor=1.0, **kw):
        return cls(theta, omega_larmor, ratio * omega_larmor, **kw)

    @property
    def ratio(self) -> float:
        return self.omega_loop / self.omega_larmor

    @property
    def loop_duration(self) -> float:
        return 2 * math.pi / self.omega_loop

    @property
    def solid_angle(self) -> float:
        """Adiabatic-limit cap area enclosed by one loop."""
        return 2 * math.pi * (1 - math.cos(self.theta))

    def integrator(self, steps_per_larmor: int = 20) -> IntegratorConfig:
        return IntegratorConfig(
            steps_per_segment=64, max_step=2 * math.pi / (self.omega_larmor * steps_per_larmor)
        )


def adiabatic_loop(p: SpinEchoParams) -> HamiltonianSchedule:
    if p.ratio > ADIABATIC_WARN:
        warnings.warn(
            f"adiabaticity ratio {p.ratio:.3g} exceeds {ADIABATIC_WARN}", AdiabaticityWarning, stacklevel=2
        )
    half = p.omega_larmor / 2
    seg = RotatingSegment(
        p.loop_duration,
        half * math.sin(p.theta),
        p.omega_loop,
        0.0,
        half * math.cos(p.theta),
        p.zero_point,
    )
    return HamiltonianSchedule((seg,))


def pi_pulse(axis, duration: float) -> HamiltonianSchedule:
    """Constant rotation by exactly pi about ``axis``; ``U = -i axis.sigma``."""
    a = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(a)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("pi pulse axis must be a nonzero finite vector")
    if not duration > 0:
        raise ValueError("pi pulse duration must be positive")
    c = (math.pi / (2 * duration)) * a / norm
    return HamiltonianSchedule((ConstantSegment(duration, (0.0, *c)),))


def spin_echo_schedule(p: SpinEchoParams) -> HamiltonianSchedule:
    """Loop, pi flip, reversed loop, pi flip."""
    loop = adiabatic_loop(p)
    width = p.pulse_duration if p.pulse_duration is not None else 1e-3 * p.loop_duration
    flip = pi_pulse(p.pulse_axis, width)
    return concat_schedules([loop, flip, reverse_schedule(loop), flip])
