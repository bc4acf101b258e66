import math

import numpy as np
import pytest

from geophase.gates import OrangeSliceParams, orange_slice_schedule
from geophase.noise import (
    BezierWarp,
    NoiseModel,
    Reparametrization,
    apply_reparametrization,
    hausdorff_distance,
)
from geophase.phases import cyclic_basis, dynamical_phase_state, relative_phase
from geophase.propagator import IntegratorConfig, evolve
from geophase.schedule import HamiltonianSchedule, RotatingSegment, SampledSegment
from geophase.su2 import bloch_vectors, wrap_phase

KINDS = ["solid-angle-preserving-reparametrization", "amplitude-jitter", "axis-tilt"]


def orange():
    return orange_slice_schedule(OrangeSliceParams(math.pi / 2))


@pytest.mark.parametrize(
    "kw",
    [
        {"kind": "white", "strength": 0.1},
        {"kind": "axis-tilt", "strength": -0.1},
        {"kind": "axis-tilt", "strength": 0.1, "samples": 0},
        {"kind": KINDS[0], "strength": 1.0},
    ],
)
def test_model_validation(kw):
    kw = {"samples": 3, "seed": 1, **kw}
    with pytest.raises(ValueError):
        NoiseModel(**kw)


@pytest.mark.parametrize("kind", KINDS)
def test_zero_strength_is_baseline(kind):
    s = orange()
    assert NoiseModel(kind, 0.0, 5, 3).perturb(s, 2) is s


@pytest.mark.parametrize("kind", KINDS)
def test_samples_reproducible(kind):
    m = NoiseModel(kind, 0.2, 5, 11)
    t = np.linspace(0, 2, 33)
    a = m.perturb(orange(), 3).coeffs(t)
    b = m.perturb(orange(), 3).coeffs(t)
    c = m.perturb(orange(), 4).coeffs(t)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_rng_streams_are_independent_of_order():
    m = NoiseModel("axis-tilt", 0.1, 10, 99)
    first = [m.rng(i).standard_normal() for i in range(10)]
    again = [m.rng(i).standard_normal() for i in reversed(range(10))][::-1]
    assert first == again


class TestBezierWarp:
    @pytest.mark.parametrize("d0, d1", [(1.0, 1.0), (0.7, 1.3), (1.3, 0.7)])
    def test_monotone_endpoints(self, d0, d1):
        w = BezierWarp(d0, d1)
        u = np.linspace(0, 1, 1001)
        assert w(0.0) == 0.0 and w(1.0) == pytest.approx(1.0, abs=1e-15)
        assert np.all(w.derivative(u) > 0)
        assert w.derivative(0.0) == pytest.approx(d0)
        assert w.derivative(1.0) == pytest.approx(d1)

    def test_inverse(self, rng):
        w = BezierWarp.random(0.3, rng)
        for y in rng.uniform(size=20):
            assert w(w.inverse(y)) == pytest.approx(y, abs=1e-14)

    def test_identity(self):
        np.testing.assert_allclose(BezierWarp(1.0, 1.0)(np.linspace(0, 1, 9)), np.linspace(0, 1, 9), atol=1e-15)


class TestReparametrization:
    def test_preserves_final_unitary(self, rng):
        base = orange()
        pert = apply_reparametrization(base, Reparametrization.random(0.3, rng))
        np.testing.assert_allclose(pert.final_propagator(), base.final_propagator(), atol=1e-13)
        assert pert.duration == pytest.approx(base.duration)

    def test_generator_matches_closed_form(self, rng):
        pert = apply_reparametrization(orange(), Reparametrization.random(0.3, rng))
        prop = evolve(pert, IntegratorConfig(4000))
        np.testing.assert_allclose(prop.unitaries, pert.propagator(prop.times), atol=1e-7)

    def test_hausdorff(self, rng):
        base = orange()
        rep = Reparametrization.random(0.3, rng)
        pert = apply_reparametrization(base, rep)
        e0 = cyclic_basis(base.final_propagator()).e0
        s = np.linspace(0, base.duration, 4001)
        a = bloch_vectors(base.propagator(s) @ e0)
        b = bloch_vectors(pert.propagator(rep.time_of(s, base.duration)) @ e0)
        assert hausdorff_distance(a, b) < 1e-9

    def test_changes_delta_not_relative_phase(self):
        base = orange()
        cfg = IntegratorConfig(2000)
        m = NoiseModel(KINDS[0], 0.3, 8, 5)
        b0 = evolve(base, cfg)
        basis = cyclic_basis(b0.final)
        psi = basis.state(1 / math.sqrt(2), 1 / math.sqrt(2))
        rel0 = relative_phase(b0.final)
        deltas = []
        for i in range(m.samples):
            p = evolve(m.perturb(base, i), cfg)
            assert abs(wrap_phase(relative_phase(p.final) - rel0)) < 1e-6
            deltas.append(dynamical_phase_state(psi, cyclic_basis(p.final), p).direct_unwrapped)
        assert np.std(deltas) > 1e-2

    def test_rotating_segments(self, rng):
        base = HamiltonianSchedule((RotatingSegment(2 * math.pi, 0.4, 1.0, 0.0, 0.3),))
        pert = apply_reparametrization(base, Reparametrization.random(0.2, rng))
        np.testing.assert_allclose(pert.final_propagator(), base.final_propagator(), atol=1e-12)

    def test_warp_only_without_closed_form(self, rng):
        base = HamiltonianSchedule((SampledSegment(1.0, [[0, 1, 0, 0], [0, 0, 1, 0]]),))
        pert = apply_reparametrization(base, Reparametrization.random(0.2, rng))
        assert not pert.has_exact_propagator
        a = evolve(base, IntegratorConfig(20000)).final
        b = evolve(pert, IntegratorConfig(20000)).final
        np.testing.assert_allclose(a, b, atol=1e-7)


@pytest.mark.parametrize("kind", ["amplitude-jitter", "axis-tilt"])
def test_non_preserving_noise_moves_relative_phase(kind):
    base = orange()
    m = NoiseModel(kind, 0.05, 10, 8)
    rel = [relative_phase(evolve(m.perturb(base, i), IntegratorConfig(200)).final) for i in range(10)]
    rel0 = relative_phase(base.final_propagator())
    spread = np.std([rel0 + wrap_phase(r - rel0) for r in rel])
    assert spread > 1e-3


def test_trace_preserved(rng):
    base = orange_slice_schedule(OrangeSliceParams(1.0))
    for kind in KINDS:
        assert NoiseModel(kind, 0.2, 1, 4).perturb(base, 0).trace_integral() == pytest.approx(0.0, abs=1e-14)


def test_hausdorff_distance():
    a = np.array([[0, 0, 1.0], [1.0, 0, 0]])
    b = np.array([[0, 0, 1.0], [0, 1.0, 0]])
    assert hausdorff_distance(a, b) == pytest.approx(math.sqrt(2))
    assert hausdorff_distance(a, a) == 0.0
