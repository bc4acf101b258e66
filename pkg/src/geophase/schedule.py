"""Piecewise Hamiltonian schedules H(t) on [0, tau].

A schedule is an ordered tuple of segments. Every segment maps local time
``0 <= t <= duration`` to Pauli coefficients ``(c0, cx, cy, cz)`` and knows the
exact integral of its identity part. Constant and rotating-field segments
also provide their exact propagator, which the noise models and the tuner
use; the integrator never does.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ScheduleError
from .su2 import exp_coeffs


class Segment:
    """Base class; subclasses set ``duration`` and ``kind``."""

    duration: float
    kind: str = "abstract"
    has_exact_propagator = False

    def coeffs(self, t) -> np.ndarray:
        """Pauli coefficients at local times ``t``; shape ``t.shape + (4,)``."""
        raise NotImplementedError

    def c0_integral(self) -> float:
        raise NotImplementedError

    def shifted(self, offset: float) -> "Segment":
        """Same segment with ``offset`` added to the identity coefficient."""
        return FunctionSegment(
            self.duration,
            lambda t, s=self: s.coeffs(t) + np.array([offset, 0.0, 0.0, 0.0]),
            self.c0_integral() + offset * self.duration,
            propagator_fn=(
                (lambda t, s=self: np.exp(-1j * offset * np.asarray(t))[..., None, None] * s.propagator(t))
                if self.has_exact_propagator
                else None
            ),
        )

    def mirrored(self) -> "Segment":
        """Segment with local time reversed, ``t -> duration - t``."""
        T = self.duration
        return FunctionSegment(T, lambda t, s=self: s.coeffs(T - np.asarray(t)), self.c0_integral())

    def propagator(self, t) -> np.ndarray:
        """Exact ``U(t, 0)`` within the segment, shape ``t.shape + (2, 2)``."""
        raise NotImplementedError(f"{self.kind} segments have no closed-form propagator")

    def to_dict(self) -> dict:
        raise TypeError(f"{self.kind} segments are not serializable")


@dataclass(frozen=True)
class ConstantSegment(Segment):
    duration: float
    values: tuple  # (c0, cx, cy, cz)
    kind = "constant"
    has_exact_propagator = True

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def coeffs(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.array(self.values), t.shape + (4,)).copy()

    def c0_integral(self):
        return self.values[0] * self.duration

    def shifted(self, offset):
        c0, cx, cy, cz = self.values
        return ConstantSegment(self.duration, (c0 + offset, cx, cy, cz))

    def mirrored(self):
        return self

    def propagator(self, t):
        return exp_coeffs(np.array(self.values), np.asarray(t, dtype=float))

    def to_dict(self):
        return {"kind": "constant", "duration": self.duration, "coeffs": list(self.values)}


@dataclass(frozen=True)
class RotatingSegment(Segment):
    """Transverse field of fixed magnitude rotating about z.

    ``H(t) = c0 + amplitude (cos(omega t + phase) sx + sin(omega t + phase) sy) + cz sz``
    """

    duration: float
    amplitude: float
    omega: float
    phase: float = 0.0
    cz: float = 0.0
    c0: float = 0.0
    kind = "rotating"
    has_exact_propagator = True

    def coeffs(self, t):
        t = np.asarray(t, dtype=float)
        arg = self.omega * t + self.phase
        return np.stack(
            [
                np.full_like(t, self.c0),
                self.amplitude * np.cos(arg),
                self.amplitude * np.sin(arg),
                np.full_like(t, self.cz),
            ],
            axis=-1,
        )

    def c0_integral(self):
        return self.c0 * self.duration

    def shifted(self, offset):
        return RotatingSegment(
            self.duration, self.amplitude, self.omega, self.phase, self.cz, self.c0 + offset
        )

    def mirrored(self):
        return RotatingSegment(
            self.duration,
            self.amplitude,
            -self.omega,
            self.omega * self.duration + self.phase,
            self.cz,
            self.c0,
        )

    def frame_generator(self) -> np.ndarray:
        """Pauli coefficients of the time-independent rotating-frame Hamiltonian."""
        return np.array(
            [
                self.c0,
                self.amplitude * np.cos(self.phase),
                self.amplitude * np.sin(self.phase),
                self.cz - self.omega / 2,
            ]
        )

    def propagator(self, t):
        # rotating frame: U(t) = Rz(omega t) exp(-i (H(0) - omega sz / 2) t)
        t = np.asarray(t, dtype=float)
        u_rot = exp_coeffs(self.frame_generator(), t)
        rz = np.zeros(t.shape + (2, 2), dtype=complex)
        rz[..., 0, 0] = np.exp(-0.5j * self.omega * t)
        rz[..., 1, 1] = np.exp(0.5j * self.omega * t)
        return rz @ u_rot

    def to_dict(self):
        return {
            "kind": "rotating",
            "duration": self.duration,
            "amplitude": self.amplitude,
            "omega": self.omega,
            "phase": self.phase,
            "cz": self.cz,
            "c0": self.c0,
        }


@dataclass(frozen=True, eq=False)
class SampledSegment(Segment):
    """Coefficients sampled on a uniform local grid, linearly interpolated."""

    duration: float
    samples: np.ndarray
    kind = "sampled"

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 4 or s.shape[0] < 2:
            raise ScheduleError("sampled segment needs an (M >= 2, 4) coefficient array")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def coeffs(self, t):
        t = np.asarray(t, dtype=float)
        grid = np.linspace(0.0, self.duration, len(self.samples))
        return np.stack([np.interp(t, grid, self.samples[:, k]) for k in range(4)], axis=-1)

    def c0_integral(self):
        c0 = self.samples[:, 0]
        h = self.duration / (len(c0) - 1)
        return float(h * (c0.sum() - 0.5 * (c0[0] + c0[-1])))

    def shifted(self, offset):
        return SampledSegment(self.duration, self.samples + np.array([offset, 0, 0, 0]))

    def mirrored(self):
        return SampledSegment(self.duration, self.samples[::-1])

    def to_dict(self):
        return {"kind": "sampled", "duration": self.duration, "samples": self.samples.tolist()}


@dataclass(frozen=True, eq=False)
class FunctionSegment(Segment):
    """Arbitrary coefficient function; produced by transforms and noise models."""

    duration: float
    func: Callable
    trace_integral: float
    propagator_fn: Optional[Callable] = None
    kind = "function"

    @property
    def has_exact_propagator(self):
        return self.propagator_fn is not None

    def coeffs(self, t):
        return np.asarray(self.func(np.asarray(t, dtype=float)), dtype=float)

    def c0_integral(self):
        return self.trace_integral

    def propagator(self, t):
        if self.propagator_fn is None:
            return super().propagator(t)
        return self.propagator_fn(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class HamiltonianSchedule:
    segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ScheduleError("schedule needs at least one segment")
        for k, s in enumerate(segs):
            if not (np.isfinite(s.duration) and s.duration > 0):
                raise ScheduleError(f"duration must be positive and finite, got {s.duration!r}", k)
        object.__setattr__(self, "segments", segs)

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    @property
    def has_exact_propagator(self) -> bool:
        return all(s.has_exact_propagator for s in self.segments)

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        b = self.boundaries
        idx = np.clip(np.searchsorted(b, t, side="right") - 1, 0, len(self.segments) - 1)
        return t, idx, t - b[idx]

    def coeffs(self, t) -> np.ndarray:
        """Coefficients at global times (right-continuous at boundaries)."""
        t, idx, local = self._locate(t)
        out = np.empty(t.shape + (4,))
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if np.any(mask):
                out[mask] = seg.coeffs(local[mask])
        return out

    def trace_integral(self) -> float:
        """Exact integral of Tr H(t) over [0, tau]."""
        return 2.0 * sum(s.c0_integral() for s in self.segments)

    def segment_propagators(self) -> list:
        """Exact full-segment propagators ``U_k`` (requires closed forms)."""
        return [s.propagator(s.duration) for s in self.segments]

    def propagator(self, t) -> np.ndarray:
        """Exact ``U(t, 0)`` at global times ``t`` from segment closed forms."""
        t, idx, local = self._locate(t)
        starts = [np.eye(2, dtype=complex)]
        for u in self.segment_propagators()[:-1]:
            starts.append(u @ starts[-1])
        out = np.empty(t.shape + (2, 2), dtype=complex)
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if np.any(mask):
                out[mask] = seg.propagator(local[mask]) @ starts[k]
        return out

    def final_propagator(self) -> np.ndarray:
        u = np.eye(2, dtype=complex)
        for uk in self.segment_propagators():
            u = uk @ u
        return u

    def to_dict(self) -> dict:
        return {"segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, data: dict) -> "HamiltonianSchedule":
        return cls(tuple(segment_from_dict(d) for d in data["segments"]))


def segment_from_dict(d: dict) -> Segment:
    kind = d["kind"]
    if kind == "constant":
        return ConstantSegment(float(d["duration"]), tuple(d["coeffs"]))
    if kind == "rotating":
        return RotatingSegment(
            float(d["duration"]),
            float(d["amplitude"]),
            float(d["omega"]),
            float(d.get("phase", 0.0)),
            float(d.get("cz", 0.0)),
            float(d.get("c0", 0.0)),
        )
    if kind == "sampled":
        return SampledSegment(float(d["duration"]), np.asarray(d["samples"], dtype=float))
    raise ScheduleError(f"unknown segment kind {kind!r}")


def constant_schedule(coeffs, duration: float) -> HamiltonianSchedule:
    return HamiltonianSchedule((ConstantSegment(duration, tuple(coeffs)),))


def piecewise_constant(coeff_rows: Sequence, durations: Sequence) -> HamiltonianSchedule:
    return HamiltonianSchedule(
        tuple(ConstantSegment(float(d), tuple(c)) for c, d in zip(coeff_rows, durations))
    )


def make_traceless(schedule: HamiltonianSchedule) -> HamiltonianSchedule:
    """Shift the identity part by one global constant so that the integral of Tr H vanishes."""
    total = sum(s.c0_integral() for s in schedule.segments)
    if total == 0.0:
        return schedule
    offset = -total / schedule.duration
    return HamiltonianSchedule(tuple(s.shifted(offset) for s in schedule.segments))


def reverse_schedule(schedule: HamiltonianSchedule) -> HamiltonianSchedule:
    """Time-reversed control: segment order reversed and each segment mirrored."""
    return HamiltonianSchedule(tuple(s.mirrored() for s in reversed(schedule.segments)))


def concat_schedules(schedules: Sequence[HamiltonianSchedule]) -> HamiltonianSchedule:
    if not schedules:
        raise ValueError("cannot concatenate an empty list of schedules")
    return HamiltonianSchedule(tuple(seg for s in schedules for seg in s.segments))
