"""Generalized filter functions for amplitude and detuning noise.

``F(w) = |rho(w)|^2`` with ``rho(w) = -i w int rho(t) exp(i w t) dt``, where
``rho(t)`` are the control vectors of :mod:`cprobust.toggling` (they carry
the factor 1/2).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .pulses import PiecewiseConstantControl, PulseSequence, as_control, build_sequence
from .toggling import control_trajectories

NOISE_MODELS = ("additive_amp", "multiplicative_amp", "detuning")


class DegenerateFitError(ValueError):
    """Slope fit requested over a band where the filter function vanishes."""


@dataclass(frozen=True, eq=False)
class FilterFunctionCurve:
    omegas: np.ndarray
    F_a: np.ndarray
    F_d: np.ndarray
    sequence: str

    def values(self, quadrature: str) -> np.ndarray:
        if quadrature == "a":
            return self.F_a
        if quadrature == "d":
            return self.F_d
        raise ValueError(f"quadrature must be 'a' or 'd', got {quadrature!r}")


def _phase_integral(k, length):
    """``int_0^length exp(i k x) dx``, exact including ``k = 0``."""
    return length * np.exp(0.5j * k * length) * np.sinc(k * length / (2 * np.pi))


def _require_square(seq):
    if isinstance(seq, PulseSequence) and not seq.is_square:
        raise ValueError("shaped sequences go through ff_discretized")


def _amplitude_from_control(control: PiecewiseConstantControl, omega, weights=None):
    traj = control_trajectories(control)
    vecs = traj.amp if weights is None else traj.amp * weights[:, None]
    w = np.atleast_1d(np.asarray(omega, dtype=float))[:, None]
    t = control.times
    a_coef = np.cos(w * t[1:]) - np.cos(w * t[:-1])
    b_coef = np.sin(w * t[1:]) - np.sin(w * t[:-1])
    a_vec = a_coef @ vecs
    b_vec = b_coef @ vecs
    return 0.25 * (np.sum(a_vec**2, axis=1) + np.sum(b_vec**2, axis=1))


def _detuning_from_control(control: PiecewiseConstantControl, omega):
    traj = control_trajectories(control)
    w = np.atleast_1d(np.asarray(omega, dtype=float))[:, None]
    rate, length = traj.rate[None, :], traj.dt[None, :]
    plus = _phase_integral(w + rate, length)
    minus = _phase_integral(w - rate, length)
    shift = np.exp(1j * w * traj.start[None, :])
    c_int = shift * 0.5 * (plus + minus)
    s_int = shift * (plus - minus) / 2j
    vec = 0.5 * (-1j * w) * (c_int @ traj.z_axis + s_int @ traj.s_axis)
    return np.sum(np.abs(vec) ** 2, axis=1)


def _chunked(fn, control, omega, *args, chunk_elems=2_000_000):
    """Evaluate ``fn`` over ``omega`` in chunks bounding the (n_omega, n_steps) temporaries."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    size = max(1, chunk_elems // max(len(control), 1))
    if len(w) <= size:
        return fn(control, w, *args)
    return np.concatenate([fn(control, w[i:i + size], *args) for i in range(0, len(w), size)])


def _shape_result(omega, values):
    return values if np.ndim(omega) else float(values[0])


def ff_amplitude(seq, omega):
    """Amplitude filter function ``1/4 (|sum A_l r_l|^2 + |sum B_l r_l|^2)``."""
    _require_square(seq)
    return _shape_result(omega, _chunked(_amplitude_from_control, as_control(seq), omega))


def ff_detuning(seq, omega):
    """Detuning filter function from per-segment closed-form Fourier integrals.

    The integrals ``int exp(i w t) {cos, sin}(W_l t)`` are written through
    ``sinc`` so ``|w| = W_l`` needs no special branch.
    """
    _require_square(seq)
    return _shape_result(omega, _chunked(_detuning_from_control, as_control(seq), omega))


def ff_discretized(control, omega, noise_model: str = "detuning"):
    """Filter function of a piecewise-constant control.

    ``multiplicative_amp`` weights each step's amplitude control vector by
    ``amplitude / peak amplitude``.
    """
    control = as_control(control)
    if noise_model == "additive_amp":
        values = _chunked(_amplitude_from_control, control, omega)
    elif noise_model == "multiplicative_amp":
        values = _chunked(_amplitude_from_control, control, omega, control.amplitude / control.peak_amplitude)
    elif noise_model == "detuning":
        values = _chunked(_detuning_from_control, control, omega)
    else:
        raise ValueError(f"noise_model must be one of {NOISE_MODELS}")
    return _shape_result(omega, values)


def filter_function(seq, omega, quadrature: str, multiplicative: bool = False):
    """Dispatch on quadrature for square or shaped sequences."""
    if quadrature == "a":
        model = "multiplicative_amp" if multiplicative else "additive_amp"
    elif quadrature == "d":
        model = "detuning"
    else:
        raise ValueError(f"quadrature must be 'a' or 'd', got {quadrature!r}")
    return ff_discretized(as_control(seq), omega, model)


def log_grid(lo: float, hi: float, points_per_decade: int = 200) -> np.ndarray:
    n = int(np.ceil(np.log10(hi / lo) * points_per_decade)) + 1
    return np.logspace(np.log10(lo), np.log10(hi), n)


def ff_curve(seq, omegas, multiplicative: bool = False) -> FilterFunctionCurve:
    omegas = np.asarray(omegas, dtype=float)
    name = seq.name if isinstance(seq, PulseSequence) else seq.source
    return FilterFunctionCurve(
        omegas,
        filter_function(seq, omegas, "a", multiplicative),
        filter_function(seq, omegas, "d"),
        name,
    )


def lowfreq_slope(curve: FilterFunctionCurve, quadrature: str, fit_band) -> float:
    """Least-squares slope of ``log F`` against ``log w`` inside ``fit_band``."""
    lo, hi = fit_band
    if lo < curve.omegas.min() * (1 - 1e-12) or hi > curve.omegas.max() * (1 + 1e-12):
        raise ValueError("fit band extends beyond the curve grid")
    mask = (curve.omegas >= lo * (1 - 1e-12)) & (curve.omegas <= hi * (1 + 1e-12))
    values = curve.values(quadrature)[mask]
    if mask.sum() < 2:
        raise DegenerateFitError("fewer than two grid points in the fit band")
    if np.any(values <= 0):
        raise DegenerateFitError("filter function vanishes inside the fit band")
    slope, _ = np.polyfit(np.log(curve.omegas[mask]), np.log(values), 1)
    return float(slope)


def crossover(seq: PulseSequence, quadrature: str, n_grid: int = 2000):
    """Smallest ``w <= Omega`` at which the sequence FF reaches the primitive FF.

    The primitive reference uses the same target angle and peak Rabi rate.
    Returns ``None`` when no crossing exists below ``Omega``.
    """
    omega = seq.peak_amplitude
    primitive = build_sequence("primitive", seq.target_theta, omega)

    def gap(w):
        return float(filter_function(seq, w, quadrature) - filter_function(primitive, w, quadrature))

    grid = np.linspace(omega / n_grid, omega, n_grid)
    diff = filter_function(seq, grid, quadrature) - filter_function(primitive, grid, quadrature)
    above = np.nonzero(diff > 0)[0]
    if len(above) == 0:
        return None
    i = above[0]
    if i == 0:
        return float(grid[0])
    return float(brentq(gap, grid[i - 1], grid[i], xtol=1e-14 * omega, rtol=1e-12))
