"""Vector-chain picture of amplitude-error cancellation.

Each square segment contributes the toggled amplitude direction
``rho_l`` scaled by a weight. With weight ``theta_l`` the chain closes
exactly for a sequence that cancels static amplitude errors to first order.
With weights ``A_l / w`` and ``B_l / w``, where
``A_l = cos(w t_l) - cos(w t_{l-1})`` and ``B_l = sin(w t_l) - sin(w t_{l-1})``,
the two chains give the amplitude filter function
``F_a = w^2 (|sum A-chain|^2 + |sum B-chain|^2) / 4``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .pulses import PulseSequence, as_control
from .toggling import control_trajectories

CHAIN_KINDS = ("static", "A", "B")
PLANAR_TOL = 1e-10


class ProjectionError(ValueError):
    """Chain leaves the x-y plane, so a planar drawing would be wrong."""


@dataclass(frozen=True, eq=False)
class VectorChain:
    terms: np.ndarray  # (n, 3)
    kind: str
    omega: float = None

    @property
    def total(self) -> np.ndarray:
        return self.terms.sum(axis=0)

    @property
    def defect(self) -> float:
        """Length of the gap between the chain's start and end."""
        return float(np.linalg.norm(self.total))

    @property
    def path_length(self) -> float:
        return float(np.linalg.norm(self.terms, axis=1).sum())

    def vertices(self) -> np.ndarray:
        """Cumulative head positions, starting at the origin."""
        return np.vstack([np.zeros(3), np.cumsum(self.terms, axis=0)])

    def projection_2d(self) -> np.ndarray:
        """x-y components of the terms; raises if any z component exceeds 1e-10."""
        z = np.abs(self.terms[:, 2])
        if np.any(z > PLANAR_TOL):
            raise ProjectionError(f"chain leaves the x-y plane (max |z| = {z.max():.3g})")
        return self.terms[:, :2].copy()


def _square_control(seq):
    if isinstance(seq, PulseSequence) and not seq.is_square:
        raise ValueError("vector chains are defined for square segments")
    return as_control(seq)


def static_chain(seq) -> VectorChain:
    """Terms ``theta_l rho_l``; the defect vanishes for first-order amplitude correction."""
    control = _square_control(seq)
    traj = control_trajectories(control)
    theta = control.amplitude * control.dt
    return VectorChain(theta[:, None] * traj.amp, "static")


def frequency_chains(seq, omega: float) -> tuple:
    """A- and B-chains at angular frequency ``omega > 0``."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    control = _square_control(seq)
    traj = control_trajectories(control)
    t = control.times
    a = (np.cos(omega * t[1:]) - np.cos(omega * t[:-1])) / omega
    b = (np.sin(omega * t[1:]) - np.sin(omega * t[:-1])) / omega
    return (VectorChain(a[:, None] * traj.amp, "A", omega),
            VectorChain(b[:, None] * traj.amp, "B", omega))


def ff_from_chains(seq, omega: float) -> float:
    chain_a, chain_b = frequency_chains(seq, omega)
    return 0.25 * omega**2 * (chain_a.defect**2 + chain_b.defect**2)


def crossover_bound(seq: PulseSequence) -> float:
    """Frequency where ``(w tau_P)^2 / 4`` meets ``(w tau_CP)^4 / 16``.

    ``tau_P = theta / Omega`` is the primitive duration at the peak Rabi rate
    and ``tau_CP`` the sequence duration, giving ``w = 2 tau_P / tau_CP^2``.
    """
    tau_p = seq.target_theta / seq.peak_amplitude
    tau_cp = seq.duration
    return 2.0 * tau_p / tau_cp**2


def write_chains_csv(path, chains) -> None:
    """Rows ``index, kind, x, y, z`` for every term of every chain."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "kind", "x", "y", "z"])
        for chain in chains:
            for i, term in enumerate(chain.terms):
                writer.writerow([i, chain.kind, *(f"{v:.17g}" for v in term)])
