"""Time-ordered integration of U(t, 0) with the midpoint exponential rule."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import ScheduleError
from .schedule import HamiltonianSchedule
from .su2 import bloch_vectors, check_normalized


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control for :func:`evolve`.

    Each segment gets ``max(steps_per_segment, ceil(duration / max_step))``
    uniform steps, so long segments can be resolved without oversampling
    short ones.
    """

    steps_per_segment: int = 10_000
    refinement_tolerance: float = 1e-9
    max_refinements: int = 8
    max_step: Optional[float] = None

    def __post_init__(self):
        if int(self.steps_per_segment) < 1:
            raise ValueError("steps_per_segment must be >= 1")
        if not self.refinement_tolerance > 0:
            raise ValueError("refinement_tolerance must be positive")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be non-negative")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")

    def steps_for(self, duration: float) -> int:
        n = int(self.steps_per_segment)
        if self.max_step is not None:
            n = max(n, math.ceil(duration / self.max_step))
        return n

    def doubled(self) -> "IntegratorConfig":
        return replace(
            self,
            steps_per_segment=2 * int(self.steps_per_segment),
            max_step=None if self.max_step is None else self.max_step / 2,
        )


@dataclass(frozen=True, eq=False)
class Propagation:
    """Grid record of an evolution.

    ``h_start[k]`` and ``h_end[k]`` are the Pauli coefficients at the two ends
    of step ``k`` taken from inside that step's segment, so quadratures stay
    exact across discontinuities between segments.
    """

    times: np.ndarray  # (N + 1,)
    unitaries: np.ndarray  # (N + 1, 2, 2)
    h_start: np.ndarray  # (N, 4)
    h_end: np.ndarray  # (N, 4)
    segment_index: np.ndarray  # (N,) segment owning each step
    schedule: HamiltonianSchedule

    def __post_init__(self):
        for a in (self.times, self.unitaries, self.h_start, self.h_end, self.segment_index):
            a.setflags(write=False)

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def dts(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.unitaries[-1]

    def states(self, psi) -> np.ndarray:
        """``U(t_k, 0) psi`` at every grid point, shape (N + 1, 2)."""
        return self.unitaries @ np.asarray(psi, dtype=complex)

    def bloch_path(self, psi):
        from .phases import BlochPath

        psi = check_normalized(psi)
        return BlochPath(bloch_vectors(self.states(psi)))

    def matrix_elements(self, bra, ket):
        """``<bra|U^dagger H U|ket>`` at both ends of every step.

        Returns ``(start, end)``, each of shape (N,).
        """
        sb = self.states(bra)
        sk = self.states(ket)
        return (
            _sandwich(sb[:-1], self.h_start, sk[:-1]),
            _sandwich(sb[1:], self.h_end, sk[1:]),
        )

    def integrate(self, start, end) -> complex:
        """Trapezoidal rule on the propagation grid for per-step end values."""
        return complex(np.sum(self.dts * (start + end)) / 2)

    def trace_integral(self) -> float:
        """Integral of Tr H dt by the same quadrature used for phase integrals."""
        return float(np.sum(self.dts * (self.h_start[:, 0] + self.h_end[:, 0])))

    def max_hamiltonian_norm(self) -> float:
        """Largest operator norm ``|c0| + |c|`` over all stored samples."""
        h = np.concatenate([self.h_start, self.h_end])
        return float(np.max(np.abs(h[:, 0]) + np.linalg.norm(h[:, 1:], axis=1)))


def _sandwich(bra_states, coeffs, ket_states):
    c0, cx, cy, cz = coeffs.T
    k0, k1 = ket_states[:, 0], ket_states[:, 1]
    h0 = (c0 + cz) * k0 + (cx - 1j * cy) * k1
    h1 = (cx + 1j * cy) * k0 + (c0 - cz) * k1
    return np.conj(bra_states[:, 0]) * h0 + np.conj(bra_states[:, 1]) * h1


def evolve(schedule: HamiltonianSchedule, config: IntegratorConfig = IntegratorConfig()) -> Propagation:
    """Integrate ``U(t, 0)`` on a uniform grid per segment.

    Each step applies the exact exponential of the Hamiltonian sampled at the
    step midpoint, ``U_{k+1} = exp(-i H(t_k + dt/2) dt) U_k``.
    """
    times, mids, starts, ends, dts, owner = [np.zeros(1)], [], [], [], [], []
    offset = 0.0
    for k, seg in enumerate(schedule.segments):
        n = config.steps_for(seg.duration)
        local = np.linspace(0.0, seg.duration, n + 1)
        h = local[1:] - local[:-1]
        mid = seg.coeffs(local[:-1] + h / 2)
        edge = seg.coeffs(local)
        if not (np.all(np.isfinite(mid)) and np.all(np.isfinite(edge))):
            raise ScheduleError("non-finite Hamiltonian coefficients", k)
        mids.append(mid)
        starts.append(edge[:-1])
        ends.append(edge[1:])
        dts.append(h)
        owner.append(np.full(n, k))
        times.append(offset + local[1:])
        offset += seg.duration
    t = np.concatenate(times)
    # the last grid point is tau exactly, not a float sum of durations
    t[-1] = schedule.duration
    if np.any(np.diff(t) <= 0):
        raise ScheduleError("time grid is not strictly increasing")
    mid = np.ascontiguousarray(np.concatenate(mids))
    dt = np.ascontiguousarray(np.concatenate(dts))
    u = kernels.propagate(mid, dt)
    return Propagation(t, u, np.concatenate(starts), np.concatenate(ends), np.concatenate(owner), schedule)


@dataclass(frozen=True)
class RefinementResult:
    propagation: Propagation
    error_estimate: float
    converged: bool
    refinements: int
    config: IntegratorConfig


def refine_until_converged(
    schedule: HamiltonianSchedule, config: IntegratorConfig = IntegratorConfig()
) -> RefinementResult:
    """Double the step count until ``U(tau)`` stops changing.

    The error estimate is the maximum entrywise change of the final unitary
    between the last two resolutions. After ``max_refinements`` doublings the
    finest result is returned with ``converged=False``.
    """
    prop = evolve(schedule, config)
    estimate = math.inf
    cfg = config
    for i in range(1, config.max_refinements + 1):
        cfg = cfg.doubled()
        finer = evolve(schedule, cfg)
        estimate = float(np.max(np.abs(finer.final - prop.final)))
        prop = finer
        if estimate < config.refinement_tolerance:
            return RefinementResult(prop, estimate, True, i, cfg)
    return RefinementResult(prop, estimate, False, config.max_refinements, cfg)
