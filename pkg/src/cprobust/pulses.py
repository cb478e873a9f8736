"""Control sequences: the composite-pulse catalog, trapezoidal shaping and
discretization into piecewise-constant steps.

Rotations follow ``R(theta, phi) = exp[-i theta (cos(phi) sx + sin(phi) sy) / 2]``.
Each segment stores its *duration* and Rabi rate; the rotation angle is the
integrated amplitude.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

SEQUENCE_NAMES = ("primitive", "SK1", "BB1", "CORPSE", "CinSK", "CinBB", "DCG")

# Quadrature each sequence is designed to correct.
DESIGNED_FOR = {
    "primitive": (),
    "SK1": ("a",),
    "BB1": ("a",),
    "CORPSE": ("d",),
    "CinSK": ("a", "d"),
    "CinBB": ("a", "d"),
    "DCG": ("d",),
}

UNITARY_TOL = 1e-10


class SequenceError(ValueError):
    """Invalid sequence request or construction failure."""


@dataclass(frozen=True)
class Square:
    pass


@dataclass(frozen=True)
class Trapezoid:
    """Linear ramp up over ``ramp``, hold for ``hold``, linear ramp down."""

    ramp: float
    hold: float

    def __post_init__(self):
        if self.ramp < 0 or self.hold < 0:
            raise SequenceError("trapezoid ramp and hold must be non-negative")


Shape = Union[Square, Trapezoid]


@dataclass(frozen=True)
class Segment:
    """One control segment at constant phase.

    ``amplitude`` is the peak Rabi rate in rad/s, ``duration`` the total
    segment time in seconds.
    """

    duration: float
    amplitude: float
    phase: float
    shape: Shape = Square()

    def __post_init__(self):
        if not self.duration > 0:
            raise SequenceError(f"segment duration must be positive, got {self.duration}")
        if self.amplitude < 0:
            raise SequenceError(f"segment amplitude must be non-negative, got {self.amplitude}")
        if isinstance(self.shape, Trapezoid):
            total = self.shape.hold + 2 * self.shape.ramp
            if not np.isclose(total, self.duration, rtol=1e-12, atol=0):
                raise SequenceError("trapezoid duration must equal hold + 2*ramp")

    @property
    def angle(self) -> float:
        """Rotation angle produced by this segment."""
        if isinstance(self.shape, Trapezoid):
            return self.amplitude * (self.shape.hold + self.shape.ramp)
        return self.amplitude * self.duration


@dataclass(frozen=True)
class PulseSequence:
    name: str
    segments: tuple
    target_theta: float
    target_phi: float = 0.0

    def __post_init__(self):
        if len(self.segments) == 0:
            raise SequenceError("a sequence needs at least one segment")
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def boundary_times(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def is_square(self) -> bool:
        return all(isinstance(s.shape, Square) for s in self.segments)

    @property
    def peak_amplitude(self) -> float:
        return max(s.amplitude for s in self.segments)

    @property
    def angles(self) -> np.ndarray:
        return np.array([s.angle for s in self.segments])


@dataclass(frozen=True, eq=False)
class PiecewiseConstantControl:
    """Piecewise-constant steps ``(dt, amplitude, phase)``."""

    dt: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    source: str = ""
    segment_index: np.ndarray = field(default=None)

    def __post_init__(self):
        dt = np.asarray(self.dt, dtype=float)
        amp = np.asarray(self.amplitude, dtype=float)
        ph = np.asarray(self.phase, dtype=float)
        if not (dt.shape == amp.shape == ph.shape) or dt.ndim != 1:
            raise SequenceError("dt, amplitude and phase must be 1-d arrays of equal length")
        if np.any(dt <= 0):
            raise SequenceError("every step needs dt > 0")
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "phase", ph)
        if self.segment_index is None:
            object.__setattr__(self, "segment_index", np.arange(len(dt)))

    def __len__(self):
        return len(self.dt)

    @property
    def times(self) -> np.ndarray:
        """Step boundary times, starting at 0."""
        return np.concatenate([[0.0], np.cumsum(self.dt)])

    @property
    def duration(self) -> float:
        return float(np.sum(self.dt))

    @property
    def peak_amplitude(self) -> float:
        return float(np.max(self.amplitude))


def rotation(theta: float, phi: float) -> np.ndarray:
    """``R(theta, phi)`` as a 2x2 unitary."""
    axis = np.cos(phi) * SIGMA_X + np.sin(phi) * SIGMA_Y
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * axis


def same_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    """True when ``|Tr(u^dag v)| = 2`` within ``tol``."""
    return abs(abs(np.trace(u.conj().T @ v)) - 2.0) <= tol


def _catalog_angles(name: str, theta: float) -> list:
    phi1 = np.arccos(-theta / (4 * np.pi))
    k = np.arcsin(np.sin(theta / 2) / 2)
    corpse = [(2 * np.pi + theta / 2 - k, 0.0), (2 * np.pi - 2 * k, np.pi), (theta / 2 - k, 0.0)]
    sk1_tail = [(2 * np.pi, -phi1), (2 * np.pi, phi1)]
    bb1_tail = [(np.pi, phi1), (2 * np.pi, 3 * phi1), (np.pi, phi1)]
    table = {
        "primitive": [(theta, 0.0)],
        "SK1": [(theta, 0.0)] + sk1_tail,
        "BB1": [(theta, 0.0)] + bb1_tail,
        "CORPSE": corpse,
        "CinSK": corpse + sk1_tail,
        "CinBB": corpse + bb1_tail,
    }
    return table[name]


def build_sequence(name: str, theta: float, omega: float) -> PulseSequence:
    """Construct a catalog sequence realizing ``R(theta, 0)`` at Rabi rate ``omega``.

    DCG is only defined for ``theta = pi``: three segments at phase 0 with
    amplitudes (omega, omega/2, omega) over (tau/4, tau/2, tau/4), each a
    pi rotation, so the ideal product is ``-R(pi, 0)``.
    """
    if name not in SEQUENCE_NAMES:
        raise SequenceError(f"unknown sequence {name!r}; expected one of {SEQUENCE_NAMES}")
    if not omega > 0:
        raise SequenceError("omega must be positive")
    if not 0 < theta <= 2 * np.pi:
        raise SequenceError("theta must lie in (0, 2*pi]")

    if name == "DCG":
        if not np.isclose(theta, np.pi, rtol=0, atol=1e-12):
            raise SequenceError("DCG is only constructed for theta = pi")
        quarter = np.pi / omega
        segments = (
            Segment(quarter, omega, 0.0),
            Segment(2 * quarter, omega / 2, 0.0),
            Segment(quarter, omega, 0.0),
        )
        seq = PulseSequence(name, segments, np.pi, 0.0)
    else:
        segments = tuple(Segment(angle / omega, omega, phase) for angle, phase in _catalog_angles(name, theta))
        seq = PulseSequence(name, segments, theta, 0.0)
    target_unitary(seq)
    return seq


def ideal_propagator(seq: PulseSequence) -> np.ndarray:
    """Ordered product of the ideal segment rotations (first segment acts first)."""
    u = np.eye(2, dtype=complex)
    for s in seq.segments:
        u = rotation(s.angle, s.phase) @ u
    return u


def target_unitary(seq: PulseSequence) -> np.ndarray:
    """Return ``R(target_theta, target_phi)`` after checking the sequence realizes it."""
    target = rotation(seq.target_theta, seq.target_phi)
    if not same_up_to_phase(ideal_propagator(seq), target):
        raise SequenceError(f"sequence {seq.name!r} does not realize its target rotation")
    return target


def trapezoidalize(seq: PulseSequence, ramp: float) -> PulseSequence:
    """Replace every square segment by a trapezoid of the same peak amplitude and angle.

    A segment of original duration ``T`` becomes ``hold = T - r``, total
    ``T + r``. The ramp is stretched by ``peak/amplitude`` so a segment at
    half amplitude gets twice the ramp and twice the hold (stretched-and-scaled
    profile, which is what the DCG construction requires).
    """
    if ramp < 0:
        raise SequenceError("ramp must be non-negative")
    if not seq.is_square:
        raise SequenceError("sequence is already shaped")
    if ramp == 0:
        return seq
    peak = seq.peak_amplitude
    segments = []
    for s in seq.segments:
        r = ramp * peak / s.amplitude
        hold = s.duration - r
        if hold <= 0:
            raise SequenceError(f"ramp {ramp} too long for a segment of duration {s.duration}")
        segments.append(Segment(hold + 2 * r, s.amplitude, s.phase, Trapezoid(r, hold)))
    return PulseSequence(seq.name, tuple(segments), seq.target_theta, seq.target_phi)


def square_equivalent(seq: PulseSequence) -> PulseSequence:
    """Square sequence with the same segment durations, angles and phases as ``seq``."""
    segments = tuple(Segment(s.duration, s.angle / s.duration, s.phase) for s in seq.segments)
    return PulseSequence(seq.name, segments, seq.target_theta, seq.target_phi)


def discretize(seq: PulseSequence, steps_per_segment: int = 1) -> PiecewiseConstantControl:
    """Split a sequence into piecewise-constant steps.

    Square segments are split into ``steps_per_segment`` equal steps. For a
    trapezoid each section (ramp up, hold, ramp down) gets
    ``steps_per_segment`` steps, ramps sampled at sub-step midpoints.
    """
    n = int(steps_per_segment)
    if n < 1:
        raise SequenceError("steps_per_segment must be >= 1")
    dts, amps, phases, index = [], [], [], []
    for i, s in enumerate(seq.segments):
        if isinstance(s.shape, Trapezoid):
            mid = (np.arange(n) + 0.5) / n
            sections = [
                (s.shape.ramp, s.amplitude * mid),
                (s.shape.hold, np.full(n, s.amplitude)),
                (s.shape.ramp, s.amplitude * mid[::-1]),
            ]
        else:
            sections = [(s.duration, np.full(n, s.amplitude))]
        for length, values in sections:
            if length <= 0:
                continue
            dts.append(np.full(n, length / n))
            amps.append(values)
            phases.append(np.full(n, s.phase))
            index.append(np.full(n, i))
    control = PiecewiseConstantControl(
        np.concatenate(dts), np.concatenate(amps), np.concatenate(phases), seq.name, np.concatenate(index)
    )
    return control


def as_control(obj, steps_per_segment: int = 64) -> PiecewiseConstantControl:
    """Coerce a sequence or control into a ``PiecewiseConstantControl``.

    Square sequences map one step per segment; shaped sequences are
    discretized with ``steps_per_segment``.
    """
    if isinstance(obj, PiecewiseConstantControl):
        return obj
    if isinstance(obj, PulseSequence):
        return discretize(obj, 1 if obj.is_square else steps_per_segment)
    raise TypeError(f"expected PulseSequence or PiecewiseConstantControl, got {type(obj).__name__}")


def sequence_from_config(cfg: dict) -> PulseSequence:
    """Build a sequence from ``{"name", "theta", "omega", "shape": {"ramp"}}``."""
    try:
        name = cfg["name"]
        theta = float(cfg.get("theta", np.pi))
        omega = float(cfg["omega"])
    except KeyError as exc:
        raise SequenceError(f"sequence config missing {exc}") from None
    seq = build_sequence(name, theta, omega)
    ramp = float((cfg.get("shape") or {}).get("ramp", 0.0))
    return trapezoidalize(seq, ramp) if ramp > 0 else seq
