import numpy as np
import pytest

from geophase.errors import ScheduleError
from geophase.schedule import (
    ConstantSegment,
    FunctionSegment,
    HamiltonianSchedule,
    RotatingSegment,
    SampledSegment,
    concat_schedules,
    constant_schedule,
    make_traceless,
    piecewise_constant,
    reverse_schedule,
)
from tests.conftest import random_piecewise, rk_propagator


@pytest.mark.parametrize("duration", [0.0, -1.0, np.inf, np.nan])
def test_rejects_bad_duration(duration):
    with pytest.raises(ScheduleError):
        constant_schedule([0, 1, 0, 0], duration)


def test_empty_schedule():
    with pytest.raises(ScheduleError):
        HamiltonianSchedule(())
    with pytest.raises(ValueError):
        concat_schedules([])


def test_coeffs_right_continuous():
    s = piecewise_constant([[0, 1, 0, 0], [0, 0, 2, 0]], [1.0, 1.0])
    np.testing.assert_allclose(s.coeffs(np.array([0.5, 1.0, 2.0])), [[0, 1, 0, 0], [0, 0, 2, 0], [0, 0, 2, 0]])
    np.testing.assert_allclose(s.boundaries, [0, 1, 2])


def test_trace_integral_and_gauge(rng):
    s = random_piecewise(rng, identity=True)
    expected = 2 * sum(seg.values[0] * seg.duration for seg in s.segments)
    assert s.trace_integral() == pytest.approx(expected)
    t = make_traceless(s)
    assert abs(t.trace_integral()) < 1e-12
    # shifting c0 only multiplies U(tau) by a phase
    ratio = t.final_propagator() @ np.linalg.inv(s.final_propagator())
    np.testing.assert_allclose(ratio, ratio[0, 0] * np.eye(2), atol=1e-12)


def test_make_traceless_identity():
    s = constant_schedule([0, 1, 0, 0], 1.0)
    assert make_traceless(s) is s


def test_rotating_exact_propagator():
    seg = RotatingSegment(3.0, 0.7, 1.3, 0.4, 0.2, 0.1)
    s = HamiltonianSchedule((seg,))
    np.testing.assert_allclose(s.final_propagator(), rk_propagator(s), atol=1e-10)


def test_global_propagator_matches_oracle(rng):
    s = concat_schedules([random_piecewise(rng), HamiltonianSchedule((RotatingSegment(1.0, 0.5, 2.0),))])
    t = np.array([0.3, s.boundaries[2], s.duration])
    u = s.propagator(t)
    np.testing.assert_allclose(u[-1], rk_propagator(s), atol=1e-10)


def test_shifted_segments_keep_propagator():
    seg = RotatingSegment(1.0, 0.5, 1.0)
    f = FunctionSegment(1.0, seg.coeffs, 0.0, propagator_fn=seg.propagator)
    g = f.shifted(0.3)
    assert g.has_exact_propagator
    np.testing.assert_allclose(g.propagator(1.0), np.exp(-0.3j) * seg.propagator(1.0))


def test_reverse_is_inverse_for_piecewise_constant(rng):
    # reversed constant segments with flipped sign undo the evolution
    s = random_piecewise(rng)
    rows = [(-np.array(seg.values)) for seg in reversed(s.segments)]
    undo = piecewise_constant(rows, [seg.duration for seg in reversed(s.segments)])
    np.testing.assert_allclose(concat_schedules([s, undo]).final_propagator(), np.eye(2), atol=1e-12)


def test_reverse_rotating_mirrors_field():
    seg = RotatingSegment(2.0, 0.5, 1.5, 0.3)
    rev = reverse_schedule(HamiltonianSchedule((seg,))).segments[0]
    t = np.linspace(0, 2, 7)
    np.testing.assert_allclose(rev.coeffs(t), seg.coeffs(2.0 - t), atol=1e-14)


def test_sampled_segment():
    samples = np.array([[0, 0, 0, 0], [2, 1, 0, 0]])
    seg = SampledSegment(2.0, samples)
    np.testing.assert_allclose(seg.coeffs(1.0), [1, 0.5, 0, 0])
    assert seg.c0_integral() == pytest.approx(2.0)
    with pytest.raises(ScheduleError):
        SampledSegment(1.0, np.zeros((1, 4)))
    with pytest.raises(NotImplementedError):
        seg.propagator(1.0)


def test_serialization_roundtrip(rng):
    s = concat_schedules(
        [
            random_piecewise(rng),
            HamiltonianSchedule((RotatingSegment(1.0, 0.5, 2.0, 0.1, 0.2, 0.3),)),
            HamiltonianSchedule((SampledSegment(1.0, rng.normal(size=(5, 4))),)),
        ]
    )
    back = HamiltonianSchedule.from_dict(s.to_dict())
    t = np.linspace(0, s.duration, 101)
    np.testing.assert_array_equal(back.coeffs(t), s.coeffs(t))


def test_unknown_segment_kind():
    with pytest.raises(ScheduleError):
        HamiltonianSchedule.from_dict({"segments": [{"kind": "spline", "duration": 1}]})


def test_constant_segment_values_are_floats():
    seg = ConstantSegment(1, (0, 1, 2, 3))
    assert all(isinstance(v, float) for v in seg.values)
