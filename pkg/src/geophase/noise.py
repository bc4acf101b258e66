"""Seeded schedule perturbations for Monte-Carlo robustness sweeps.

Three kinds are provided:

* ``solid-angle-preserving-reparametrization``: a smooth monotone time warp
  ``t -> tau B(t / tau)`` combined with a twist about the cyclic axis that
  vanishes at both ends. The cyclic states run through the same Bloch
  pointset and ``U(tau)`` is unchanged, so relative phases are preserved
  while dynamical phases of superpositions are not.
* ``amplitude-jitter``: every segment's field is scaled by ``1 + s xi``.
* ``axis-tilt``: every segment's field is rotated by an independent random
  rotation with angle drawn from ``N(0, s)``.

Sample ``i`` draws from ``PCG64(SeedSequence(seed, spawn_key=(i,)))``, so any
sample can be regenerated on its own and in any order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from .errors import ScheduleError
from .phases import cyclic_basis
from .schedule import FunctionSegment, HamiltonianSchedule, Segment
from .su2 import bloch_vectors, exp_coeffs

NOISE_KINDS = ("solid-angle-preserving-reparametrization", "amplitude-jitter", "axis-tilt")


@dataclass(frozen=True)
class NoiseModel:
    kind: str
    strength: float
    samples: int
    seed: int

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not (np.isfinite(self.strength) and self.strength >= 0):
            raise ValueError("noise strength must be finite and >= 0")
        if self.kind == "solid-angle-preserving-reparametrization" and self.strength >= 1:
            raise ValueError("reparametrization strength must be < 1 to keep the warp monotone")
        if int(self.samples) < 1:
            raise ValueError("samples must be >= 1")

    def rng(self, index: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(index),))
        return np.random.Generator(np.random.PCG64(ss))

    def perturb(self, schedule: HamiltonianSchedule, index: int) -> HamiltonianSchedule:
        """Perturbed copy of ``schedule`` for sample ``index``."""
        if self.strength == 0:
            return schedule
        rng = self.rng(index)
        if self.kind == "amplitude-jitter":
            return amplitude_jitter(schedule, self.strength, rng)
        if self.kind == "axis-tilt":
            return axis_tilt(schedule, self.strength, rng)
        return reparametrize(schedule, self.strength, rng)

    def to_dict(self):
        return {"kind": self.kind, "strength": self.strength, "samples": self.samples, "seed": self.seed}


def _scaled(seg: Segment, factor: float) -> Segment:
    scale = np.array([1.0, factor, factor, factor])
    return FunctionSegment(seg.duration, lambda t, s=seg: s.coeffs(t) * scale, seg.c0_integral())


def _rotated(seg: Segment, rot: np.ndarray) -> Segment:
    def coeffs(t, s=seg):
        c = s.coeffs(t)
        return np.concatenate([c[..., :1], c[..., 1:] @ rot.T], axis=-1)

    return FunctionSegment(seg.duration, coeffs, seg.c0_integral())


def amplitude_jitter(schedule, strength, rng) -> HamiltonianSchedule:
    factors = 1 + strength * rng.standard_normal(len(schedule.segments))
    return HamiltonianSchedule(tuple(_scaled(s, f) for s, f in zip(schedule.segments, factors)))


def axis_tilt(schedule, strength, rng) -> HamiltonianSchedule:
    segs = []
    for s in schedule.segments:
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        angle = strength * rng.standard_normal()
        segs.append(_rotated(s, Rotation.from_rotvec(angle * axis).as_matrix()))
    return HamiltonianSchedule(tuple(segs))


@dataclass(frozen=True)
class BezierWarp:
    """Monotone cubic ``B`` on [0, 1] with ``B(0) = 0``, ``B(1) = 1``, end slopes ``d0``, ``d1``."""

    d0: float
    d1: float

    def __post_init__(self):
        if not (0 < self.d0 < 3 and 0 < self.d1 < 3):
            raise ValueError("end slopes must lie in (0, 3) for a monotone cubic")

    @classmethod
    def random(cls, strength, rng):
        d0, d1 = 1 + strength * rng.uniform(-1, 1, 2)
        return cls(float(d0), float(d1))

    def _ctrl(self):
        return self.d0 / 3, 1 - self.d1 / 3

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        p1, p2 = self._ctrl()
        v = 1 - u
        return 3 * v * v * u * p1 + 3 * v * u * u * p2 + u**3

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        p1, p2 = self._ctrl()
        v = 1 - u
        return 3 * v * v * p1 + 6 * v * u * (p2 - p1) + 3 * u * u * (1 - p2)

    def inverse(self, y: float) -> float:
        if y <= 0:
            return 0.0
        if y >= 1:
            return 1.0
        return brentq(lambda u: float(self(u)) - y, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _base_frame(schedule: HamiltonianSchedule):
    """Closed-form ``U_base(s)`` per segment plus the label-0 cyclic axis."""
    if not schedule.has_exact_propagator:
        return None, None
    starts = [np.eye(2, dtype=complex)]
    for u in schedule.segment_propagators()[:-1]:
        starts.append(u @ starts[-1])
    e0 = cyclic_basis(schedule.final_propagator()).e0
    return starts, e0


@dataclass(frozen=True)
class Reparametrization:
    warp: BezierWarp
    twist: float  # peak twist angle about the cyclic axis

    @classmethod
    def random(cls, strength, rng):
        warp = BezierWarp.random(strength, rng)
        return cls(warp, math.pi * strength * float(rng.standard_normal()))

    def time_of(self, s, tau):
        """Perturbed time at which the base schedule reaches ``s``."""
        return np.array([tau * self.warp.inverse(x / tau) for x in np.atleast_1d(s)])


def reparametrize(schedule: HamiltonianSchedule, strength: float, rng) -> HamiltonianSchedule:
    return apply_reparametrization(schedule, Reparametrization.random(strength, rng))


def apply_reparametrization(schedule: HamiltonianSchedule, rep: Reparametrization) -> HamiltonianSchedule:
    """Random monotone time warp plus an end-pinned twist about the cyclic axis.

    With ``s(t) = tau B(t / tau)`` and ``chi(t) = pi strength xi sin^2(pi t / tau)``
    the perturbed propagator is ``U_base(s(t)) exp(-i chi(t) n0.sigma)``, where
    ``n0`` is the Bloch vector of the label-0 cyclic state. The generating
    Hamiltonian is ``s'(t) H(s(t)) + chi'(t) r0(s(t)).sigma`` with
    ``r0 = U_base n0 U_base^dagger``. Segment boundaries are mapped through
    ``B^{-1}`` so every jump of H stays on a grid boundary.

    Schedules without closed-form propagators receive the time warp only.
    """
    tau = schedule.duration
    warp, twist = rep.warp, rep.twist
    starts, e0 = _base_frame(schedule)
    bounds = schedule.boundaries
    new_bounds = rep.time_of(bounds, tau)
    new_bounds[0], new_bounds[-1] = 0.0, tau
    if np.any(np.diff(new_bounds) <= 0):
        raise ScheduleError("reparametrization collapsed a segment")
    n0 = bloch_vectors(e0) if e0 is not None else None

    def s_of(t):
        return tau * warp(t / tau)

    def chi(t):
        return twist * np.sin(math.pi * t / tau) ** 2

    def chi_dot(t):
        return twist * (math.pi / tau) * np.sin(2 * math.pi * t / tau)

    segs = []
    for k, seg in enumerate(schedule.segments):
        w0, w1 = float(new_bounds[k]), float(new_bounds[k + 1])
        s0 = float(bounds[k])

        def local_s(t, w0=w0, s0=s0, seg=seg):
            return np.clip(s_of(w0 + t) - s0, 0.0, seg.duration)

        def coeffs(t, w0=w0, seg=seg, local_s=local_s, k=k):
            t = np.asarray(t, dtype=float)
            ls = local_s(t)
            c = seg.coeffs(ls) * warp.derivative((w0 + t) / tau)[..., None]
            if n0 is not None:
                u = seg.propagator(ls) @ starts[k]
                r0 = bloch_vectors(u @ e0)
                c = c.copy()
                c[..., 1:] += chi_dot(w0 + t)[..., None] * r0
            return c

        prop_fn = None
        if n0 is not None:

            def global_u(t, seg=seg, local_s=local_s, k=k, w0=w0):
                t = np.asarray(t, dtype=float)
                base = seg.propagator(local_s(t)) @ starts[k]
                v = exp_coeffs(np.concatenate([[0.0], n0]), chi(w0 + t))
                return base @ v

            def prop_fn(t, global_u=global_u):
                return global_u(t) @ np.linalg.inv(global_u(np.zeros(())))

        # trace integral: the twist is traceless and the warp preserves int c0 ds
        segs.append(FunctionSegment(w1 - w0, coeffs, seg.c0_integral(), propagator_fn=prop_fn))
    return HamiltonianSchedule(tuple(segs))


def hausdorff_distance(a, b) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))
