"""Monte Carlo propagation under time-dependent classical noise.

Each realization draws amplitude and detuning noise from independent
streams, holds both constant over a propagation step (sampled at the step
midpoint) and propagates the perturbed Hamiltonian exactly. The fidelity
loss of a realization is ``1 - |Tr(U0^dag U)|^2 / 4``.
"""
from __future__ import annotations

import hashlib
import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .analytic import deficit_quaternion
from .noisegen import (
    BINS_PER_DECADE,
    NoiseTrajectory,
    NyquistWarning,
    draw_harmonics,
    evaluate_harmonics,
    harmonic_bins,
)
from .pulses import PAULIS, PiecewiseConstantControl, PulseSequence, as_control

STEPS_PER_PERIOD = 20
CHUNK = 256
THREADS_ENV = "CPROBUST_THREADS"


class GridMismatchError(ValueError):
    """Noise samples do not line up with the control steps."""


@dataclass(frozen=True)
class EnsembleResult:
    sequence: str
    mean_loss: float
    std_error: float
    N: int
    seed: int
    dt: float
    frozen: bool
    clipped_power: tuple  # (amplitude, detuning) variance dropped above Nyquist
    digest: str
    losses: np.ndarray = None

    def as_row(self) -> dict:
        return {"sequence": self.sequence, "N": self.N, "mean_loss": self.mean_loss,
                "std_error": self.std_error, "seed": self.seed}


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def default_dt(control) -> float:
    """Step length resolving the fastest Rabi period with 20 samples."""
    return 2 * np.pi / (STEPS_PER_PERIOD * as_control(control).peak_amplitude)


def refine(control, dt: float) -> PiecewiseConstantControl:
    """Split every step into ``ceil(step / dt)`` equal sub-steps."""
    control = as_control(control)
    counts = np.maximum(1, np.ceil(control.dt / dt - 1e-9).astype(int))
    return PiecewiseConstantControl(
        np.repeat(control.dt / counts, counts),
        np.repeat(control.amplitude, counts),
        np.repeat(control.phase, counts),
        control.source,
        np.repeat(control.segment_index, counts),
    )


def step_midpoints(control) -> np.ndarray:
    t = as_control(control).times
    return 0.5 * (t[:-1] + t[1:])


def quaternion_to_matrix(q) -> np.ndarray:
    """``q0 I - i q . sigma`` for a quaternion or stack of quaternions."""
    q = np.asarray(q, dtype=float)
    eye = np.eye(2, dtype=complex)
    return q[..., 0, None, None] * eye - 1j * sum(q[..., k + 1, None, None] * PAULIS[k] for k in range(3))


def _samples(noise, n):
    if noise is None:
        return np.zeros(n)
    values = noise.samples if isinstance(noise, NoiseTrajectory) else np.asarray(noise, dtype=float)
    values = np.broadcast_to(values, (n,)) if np.ndim(values) == 0 else values
    if values.shape != (n,):
        raise GridMismatchError(f"expected {n} noise samples, got {values.shape}")
    return values


def propagate(control, beta_a=None, beta_d=None, backend=None) -> np.ndarray:
    """Propagator of one realization; noise holds one value per control step."""
    control = as_control(control)
    n = len(control)
    for noise in (beta_a, beta_d):
        if isinstance(noise, NoiseTrajectory) and not np.isclose(noise.dt, control.dt[0], rtol=1e-9):
            raise GridMismatchError("noise trajectory step differs from the control step")
    ba = _samples(beta_a, n)[None, :]
    bd = _samples(beta_d, n)[None, :]
    q = kernels.propagate_batch(control.amplitude, control.phase, control.dt, ba, bd, backend)
    return quaternion_to_matrix(q[0])


def fidelity(U, U0) -> float:
    """``|Tr(U0^dag U)|^2 / 4``."""
    return float(abs(np.trace(np.asarray(U0).conj().T @ np.asarray(U))) ** 2 / 4)


def losses_from_quaternions(q0, q) -> np.ndarray:
    d = deficit_quaternion(q0, q)
    vec = np.sum(d[..., 1:] ** 2, axis=-1)
    return vec / (d[..., 0] ** 2 + vec)


def _spectrum_key(spec):
    if spec is None:
        return None
    if hasattr(spec, "omegas"):
        return {"table": hashlib.sha256(np.stack([spec.omegas, spec.values]).tobytes()).hexdigest(),
                "convention": spec.convention}
    return {k: repr(getattr(spec, k)) for k in ("A", "omega_min", "omega_b", "omega_max", "convention")}


class _Quadrature:
    """Harmonic bins of one noise quadrature, or nothing when it is switched off."""

    def __init__(self, spec, cut, bins_per_decade, stream):
        self.spec = spec
        self.stream = stream
        active = spec is not None and spec.total_power() > 0
        self.bins = harmonic_bins(spec, cut, bins_per_decade) if active else None

    @property
    def clipped(self):
        return 0.0 if self.bins is None else self.bins.clipped_power

    def sample(self, seed, indices, times, frozen):
        if self.bins is None:
            return np.zeros((len(indices), len(times)))
        omega, a, b, offset = draw_harmonics(self.spec, self.bins, seed, indices, self.stream)
        if frozen:
            return np.repeat((offset + a.sum(axis=1))[:, None], len(times), axis=1)
        return evaluate_harmonics(omega, a, b, offset, times)


def ensemble(seq, spec_a, spec_d, N: int = 2000, seed: int = 0, dt: float = None,
             frozen: bool = False, steps_per_segment: int = 64, chunk: int = CHUNK,
             threads: int = None, backend: str = None, bins_per_decade: int = BINS_PER_DECADE,
             keep_losses: bool = False) -> EnsembleResult:
    """Mean fidelity loss over ``N`` noise realizations.

    Realization ``i`` uses generators seeded by ``(seed, i, 0)`` for amplitude
    noise and ``(seed, i, 1)`` for detuning noise, so the result does not
    depend on ``chunk`` or ``threads``. With ``frozen=True`` each realization
    holds its initial noise value for the whole sequence.
    """
    if N < 2:
        raise ValueError("need at least two realizations for a standard error")
    control = as_control(seq, steps_per_segment)
    dt = default_dt(control) if dt is None else float(dt)
    grid = refine(control, dt)
    times = step_midpoints(grid)
    cut = np.pi / dt
    quads = (_Quadrature(spec_a, cut, bins_per_decade, 0), _Quadrature(spec_d, cut, bins_per_decade, 1))
    clipped = tuple(q.clipped for q in quads)
    if any(c > 0 for c in clipped):
        warnings.warn(f"noise above the Nyquist frequency {cut:.4g} rad/s dropped (variance {clipped})",
                      NyquistWarning, stacklevel=2)
    q0 = kernels.propagate_batch(grid.amplitude, grid.phase, grid.dt, np.zeros((1, len(grid))),
                                 np.zeros((1, len(grid))), backend)[0]

    def run(start):
        indices = range(start, min(start + chunk, N))
        ba = quads[0].sample(seed, indices, times, frozen)
        bd = quads[1].sample(seed, indices, times, frozen)
        q = kernels.propagate_batch(grid.amplitude, grid.phase, grid.dt, ba, bd, backend)
        return losses_from_quaternions(q0, q)

    starts = range(0, N, chunk)
    threads = default_threads() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    losses = np.concatenate(parts)
    name = seq.name if isinstance(seq, PulseSequence) else control.source
    key = json.dumps({"sequence": name, "steps": grid.dt.tolist(), "amp": grid.amplitude.tolist(),
                      "phase": grid.phase.tolist(), "a": _spectrum_key(spec_a), "d": _spectrum_key(spec_d),
                      "N": N, "seed": seed, "frozen": frozen, "bins": bins_per_decade}, sort_keys=True)
    return EnsembleResult(
        name,
        float(np.mean(losses)),
        float(np.std(losses, ddof=1) / np.sqrt(N)),
        N,
        seed,
        dt,
        frozen,
        clipped,
        hashlib.sha256(key.encode()).hexdigest()[:16],
        losses if keep_losses else None,
    )
