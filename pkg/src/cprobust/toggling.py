"""Toggling-frame quantities for piecewise-constant control.

Vectors are row vectors: the toggled amplitude direction of step ``l`` is
``rho_l @ Lambda[l]`` where ``Lambda[l]`` is the conjugation matrix of the
ideal propagator accumulated before step ``l``,
``Lambda_ij = Tr[R'^dag s_i R' s_j] / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pulses import PAULIS, as_control


def axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """Active SO(3) rotation by ``angle`` about unit ``axis`` (Rodrigues)."""
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


def conjugation_matrix(u: np.ndarray) -> np.ndarray:
    """``M_ij = Tr[u^dag s_i u s_j] / 2`` for a 2x2 unitary ``u``."""
    m = np.empty((3, 3))
    for i, si in enumerate(PAULIS):
        conj = u.conj().T @ si @ u
        for j, sj in enumerate(PAULIS):
            m[i, j] = 0.5 * np.trace(conj @ sj).real
    return m


@dataclass(frozen=True, eq=False)
class TogglingFrame:
    lambdas: np.ndarray  # (n, 3, 3), Lambda^(l-1) for each step l
    boundary_times: np.ndarray  # (n + 1,)
    final: np.ndarray  # conjugation matrix of the full ideal propagator


@dataclass(frozen=True, eq=False)
class ControlVectorTrajectory:
    """Per-step closed-form description of the control vectors.

    On step ``l`` (``t = start[l] + delta``)::

        rho_a(t) = amp[l] / 2
        rho_d(t) = (cos(rate[l] delta) z_axis[l] + sin(rate[l] delta) s_axis[l]) / 2
    """

    amp: np.ndarray
    z_axis: np.ndarray
    s_axis: np.ndarray
    rate: np.ndarray
    start: np.ndarray
    dt: np.ndarray

    def _locate(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.searchsorted(self.start, t, side="right") - 1
        return t, np.clip(idx, 0, len(self.start) - 1)

    def amplitude(self, t) -> np.ndarray:
        _, idx = self._locate(t)
        return 0.5 * self.amp[idx]

    def detuning(self, t) -> np.ndarray:
        t, idx = self._locate(t)
        phase = (self.rate[idx] * (t - self.start[idx]))[:, None]
        return 0.5 * (np.cos(phase) * self.z_axis[idx] + np.sin(phase) * self.s_axis[idx])


def toggling_matrices(seq) -> TogglingFrame:
    """Conjugation matrices of the accumulated ideal propagator at each step start."""
    control = as_control(seq)
    n = len(control)
    lambdas = np.empty((n, 3, 3))
    current = np.eye(3)
    for l in range(n):
        lambdas[l] = current
        phi = control.phase[l]
        axis = np.array([np.cos(phi), np.sin(phi), 0.0])
        current = axis_rotation(axis, control.amplitude[l] * control.dt[l]) @ current
    return TogglingFrame(lambdas, control.times, current)


def control_trajectories(seq) -> ControlVectorTrajectory:
    control = as_control(seq)
    frame = toggling_matrices(control)
    cphi, sphi = np.cos(control.phase), np.sin(control.phase)
    zeros = np.zeros_like(cphi)
    rho = np.stack([cphi, sphi, zeros], axis=1)
    s_dir = np.stack([-sphi, cphi, zeros], axis=1)
    z_dir = np.tile([0.0, 0.0, 1.0], (len(control), 1))
    amp = np.einsum("li,lij->lj", rho, frame.lambdas)
    z_axis = np.einsum("li,lij->lj", z_dir, frame.lambdas)
    s_axis = np.einsum("li,lij->lj", s_dir, frame.lambdas)
    return ControlVectorTrajectory(amp, z_axis, s_axis, control.amplitude.copy(), control.times[:-1], control.dt)


def first_order_integrals(seq) -> tuple:
    """``(int rho_a dt, int rho_d dt)`` over the whole sequence, from exact per-step antiderivatives."""
    traj = control_trajectories(seq)
    amp_integral = 0.5 * np.sum(traj.dt[:, None] * traj.amp, axis=0)
    x = traj.rate * traj.dt
    # sin(x)/rate and (1 - cos x)/rate written to survive rate -> 0
    cos_part = traj.dt * np.sinc(x / np.pi)
    sin_part = traj.dt * np.sin(x / 2) * np.sinc(x / (2 * np.pi))
    det_integral = 0.5 * np.sum(cos_part[:, None] * traj.z_axis + sin_part[:, None] * traj.s_axis, axis=0)
    return amp_integral, det_integral
