import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cprobust.pulses import (
    SEQUENCE_NAMES,
    PulseSequence,
    Segment,
    SequenceError,
    Trapezoid,
    as_control,
    build_sequence,
    discretize,
    ideal_propagator,
    rotation,
    same_up_to_phase,
    sequence_from_config,
    square_equivalent,
    target_unitary,
    trapezoidalize,
)

OMEGA = 1.5e6
PHI1 = np.arccos(-1 / 4)
K = np.arcsin(0.5)


@pytest.mark.parametrize("name", SEQUENCE_NAMES)
def test_catalog_realizes_pi_rotation(name):
    seq = build_sequence(name, np.pi, OMEGA)
    assert same_up_to_phase(ideal_propagator(seq), rotation(np.pi, 0.0))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([n for n in SEQUENCE_NAMES if n != "DCG"]), st.floats(0.05, 2 * np.pi))
def test_catalog_realizes_any_angle(name, theta):
    seq = build_sequence(name, theta, 2.0)
    assert same_up_to_phase(ideal_propagator(seq), rotation(theta, 0.0), tol=1e-10)


def test_rotation_matches_definition():
    theta, phi = 1.1, 0.4
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    from scipy.linalg import expm
    ref = expm(-0.5j * theta * (np.cos(phi) * sx + np.sin(phi) * sy))
    np.testing.assert_allclose(rotation(theta, phi), ref, atol=1e-14)


def test_sk1_and_bb1_segment_table():
    sk1 = build_sequence("SK1", np.pi, OMEGA)
    np.testing.assert_allclose(sk1.angles, [np.pi, 2 * np.pi, 2 * np.pi])
    np.testing.assert_allclose([s.phase for s in sk1.segments], [0, -PHI1, PHI1])
    bb1 = build_sequence("BB1", np.pi, OMEGA)
    np.testing.assert_allclose(bb1.angles, [np.pi, np.pi, 2 * np.pi, np.pi])
    np.testing.assert_allclose([s.phase for s in bb1.segments], [0, PHI1, 3 * PHI1, PHI1])
    # both take 5 pi / Omega
    assert sk1.duration == pytest.approx(5 * np.pi / OMEGA)
    assert bb1.duration == pytest.approx(5 * np.pi / OMEGA)


def test_corpse_family_table():
    corpse = build_sequence("CORPSE", np.pi, OMEGA)
    np.testing.assert_allclose(corpse.angles, [2 * np.pi + np.pi / 2 - K, 2 * np.pi - 2 * K, np.pi / 2 - K])
    np.testing.assert_allclose([s.phase for s in corpse.segments], [0, np.pi, 0])
    cinsk = build_sequence("CinSK", np.pi, OMEGA)
    cinbb = build_sequence("CinBB", np.pi, OMEGA)
    assert len(cinsk.segments) == 5 and len(cinbb.segments) == 6
    np.testing.assert_allclose(cinbb.angles[3:], [np.pi, 2 * np.pi, np.pi])


def test_dcg_structure():
    dcg = build_sequence("DCG", np.pi, OMEGA)
    np.testing.assert_allclose([s.amplitude for s in dcg.segments], [OMEGA, OMEGA / 2, OMEGA])
    np.testing.assert_allclose([s.duration for s in dcg.segments], np.array([1, 2, 1]) * np.pi / OMEGA)
    np.testing.assert_allclose(ideal_propagator(dcg), -rotation(np.pi, 0.0), atol=1e-14)
    assert dcg.peak_amplitude == OMEGA


@pytest.mark.parametrize("kwargs", [
    dict(name="XY4", theta=np.pi, omega=1.0),
    dict(name="SK1", theta=np.pi, omega=0.0),
    dict(name="SK1", theta=0.0, omega=1.0),
    dict(name="DCG", theta=np.pi / 2, omega=1.0),
])
def test_build_sequence_rejects(kwargs):
    with pytest.raises(SequenceError):
        build_sequence(**kwargs)


def test_target_unitary_detects_wrong_sequence():
    bad = PulseSequence("bad", (Segment(1.0, 1.0, 0.0),), np.pi)
    with pytest.raises(SequenceError):
        target_unitary(bad)


def test_segment_validation():
    with pytest.raises(SequenceError):
        Segment(0.0, 1.0, 0.0)
    with pytest.raises(SequenceError):
        Segment(1.0, -1.0, 0.0)
    with pytest.raises(SequenceError):
        Segment(1.0, 1.0, 0.0, Trapezoid(0.1, 0.5))


@pytest.mark.parametrize("name", ["SK1", "CORPSE", "DCG"])
def test_trapezoid_keeps_angles_and_stretches_time(name):
    seq = build_sequence(name, np.pi, 1.0)
    ramp = 0.2
    shaped = trapezoidalize(seq, ramp)
    np.testing.assert_allclose(shaped.angles, seq.angles, rtol=1e-14)
    stretch = [ramp * seq.peak_amplitude / s.amplitude for s in seq.segments]
    np.testing.assert_allclose([s.duration for s in shaped.segments],
                               [s.duration + r for s, r in zip(seq.segments, stretch)])
    assert same_up_to_phase(ideal_propagator(shaped), rotation(np.pi, 0))


def test_trapezoid_dcg_middle_ramp_is_doubled():
    shaped = trapezoidalize(build_sequence("DCG", np.pi, 1.0), 0.3)
    ramps = [s.shape.ramp for s in shaped.segments]
    assert ramps[1] == pytest.approx(2 * ramps[0])


def test_trapezoid_errors():
    seq = build_sequence("SK1", np.pi, 1.0)
    assert trapezoidalize(seq, 0.0) is seq
    with pytest.raises(SequenceError):
        trapezoidalize(seq, -0.1)
    with pytest.raises(SequenceError):
        trapezoidalize(seq, 10.0)
    with pytest.raises(SequenceError):
        trapezoidalize(trapezoidalize(seq, 0.1), 0.1)


def test_discretize_preserves_angle_and_time():
    shaped = trapezoidalize(build_sequence("CinBB", np.pi, 1.0), 0.25)
    control = discretize(shaped, 16)
    assert control.duration == pytest.approx(shaped.duration, rel=1e-14)
    per_segment = np.bincount(control.segment_index, weights=control.amplitude * control.dt)
    np.testing.assert_allclose(per_segment, shaped.angles, rtol=1e-13)
    assert len(control) == 3 * 16 * len(shaped.segments)


def test_as_control_square_uses_one_step_per_segment():
    seq = build_sequence("BB1", np.pi, 1.0)
    assert len(as_control(seq)) == 4
    with pytest.raises(TypeError):
        as_control("BB1")


def test_square_equivalent_matches_durations():
    shaped = trapezoidalize(build_sequence("SK1", np.pi, 1.0), 0.2)
    square = square_equivalent(shaped)
    assert square.is_square
    np.testing.assert_allclose(square.boundary_times, shaped.boundary_times)
    np.testing.assert_allclose(square.angles, shaped.angles)


def test_sequence_from_config():
    seq = sequence_from_config({"name": "BB1", "omega": 2.0, "shape": {"ramp": 0.1}})
    assert not seq.is_square and seq.name == "BB1"
    with pytest.raises(SequenceError):
        sequence_from_config({"name": "BB1"})
