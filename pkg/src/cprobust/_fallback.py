"""Pure-numpy implementation of the propagation kernel.

An SU(2) element is stored as a real 4-vector ``(q0, q1, q2, q3)`` with
``U = q0*I - 1j*(q1*sx + q2*sy + q3*sz)``.
"""
import numpy as np


def step_quaternions(amplitude, phase, dt, beta_a, beta_d):
    """Quaternions of exp(-i H dt) for the noisy piecewise-constant Hamiltonian.

    ``H = (amplitude + beta_a)/2 (cos(phase) sx + sin(phase) sy) + beta_d/2 sz``.
    All arguments broadcast against each other.
    """
    drive = (amplitude + beta_a) * dt
    hx = drive * np.cos(phase)
    hy = drive * np.sin(phase)
    hz = beta_d * dt
    norm = np.sqrt(hx * hx + hy * hy + hz * hz)
    half = 0.5 * norm
    # sin(x/2)/x with the x -> 0 limit
    k = 0.5 * np.sinc(half / np.pi)
    return np.stack([np.cos(half), k * hx, k * hy, k * hz], axis=-1)


def qmul(p, r):
    """Product ``P @ R`` of SU(2) quaternions (last axis of length 4)."""
    p0, p1, p2, p3 = np.moveaxis(p, -1, 0)
    r0, r1, r2, r3 = np.moveaxis(r, -1, 0)
    return np.stack(
        [
            p0 * r0 - p1 * r1 - p2 * r2 - p3 * r3,
            p0 * r1 + r0 * p1 + p2 * r3 - p3 * r2,
            p0 * r2 + r0 * p2 + p3 * r1 - p1 * r3,
            p0 * r3 + r0 * p3 + p1 * r2 - p2 * r1,
        ],
        axis=-1,
    )


def propagate_batch(amplitude, phase, dt, beta_a, beta_d):
    """Time-ordered product of step propagators for a batch of noise realizations.

    Parameters
    ----------
    amplitude, phase, dt : ndarray, shape (S,)
        Piecewise-constant control.
    beta_a, beta_d : ndarray, shape (N, S)
        Amplitude and detuning noise held constant over each step.

    Returns
    -------
    ndarray, shape (N, 4)
        Quaternion of the full propagator for each realization.
    """
    amplitude = np.asarray(amplitude, dtype=float)
    beta_a = np.asarray(beta_a, dtype=float)
    beta_d = np.asarray(beta_d, dtype=float)
    n_steps = amplitude.shape[0]
    if beta_a.shape[1] != n_steps or beta_d.shape != beta_a.shape:
        raise ValueError("noise arrays do not match the control grid")
    if len(phase) != n_steps or len(dt) != n_steps:
        raise ValueError("control arrays have inconsistent lengths")
    q = np.zeros((beta_a.shape[0], 4))
    q[:, 0] = 1.0
    for s in range(n_steps):
        step = step_quaternions(amplitude[s], phase[s], dt[s], beta_a[:, s], beta_d[:, s])
        q = qmul(step, q)
    return q
