"""Fidelity-loss estimates: first-order filter-function overlap, slow-noise
(dc) limit from the residual error rotation, and their combination.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .filterfn import filter_function
from .pulses import PulseSequence, as_control
from .spectra import gaussian_moment

DC_FIT_AMPLITUDES = (1e-3, 5e-4, 2.5e-4)
DC_FIT_TOL = 0.01


class QuadratureError(RuntimeError):
    """Adaptive spectral-overlap integration did not converge."""


class DcFitError(RuntimeError):
    """Residual rotation does not follow the assumed power law."""


@dataclass(frozen=True)
class DcCoefficient:
    """``lambda^2 = c * beta^(2(m+1))`` with ``beta`` in rad/s (``c`` in s^(2(m+1))).

    For the cross term, ``lambda^2 = c * beta_a^2 beta_d^2`` and ``m = 1``.
    """

    sequence: str
    quadrature: str
    m: int
    c: float
    omega: float
    residual: float

    @property
    def dimensionless(self) -> float:
        """Coefficient with ``beta`` measured in units of the peak Rabi rate."""
        power = 4 if self.quadrature == "cross" else 2 * (self.m + 1)
        return self.c * self.omega**power


@dataclass(frozen=True)
class FidelityEstimate:
    ff_loss: float
    dc_loss: float
    combined: float
    ff_terms: dict = field(default_factory=dict)
    dc_terms: dict = field(default_factory=dict)


def _name(seq):
    return seq.name if isinstance(seq, PulseSequence) else seq.source


def _active(spec):
    return spec is not None and spec.total_power() > 0


def _simpson(y, h):
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def _integration_edges(control, specs, cap_factor):
    peak = control.peak_amplitude
    lo = min(s.omega_min for s in specs)
    hi = min(max(s.omega_max for s in specs), cap_factor * peak)
    edges = {lo, hi}
    for s in specs:
        edges.update(b for b in s.breakpoints() if lo < b < hi)
    edges.update(x for x in (0.01 * peak, 0.1 * peak, peak, 3 * peak) if lo < x < hi)
    return np.array(sorted(edges))


def ff_fidelity_loss(seq, spec_a, spec_d, rtol: float = 1e-4, multiplicative: bool = False,
                     cap_factor: float = 50.0, max_level: int = 10, return_terms: bool = False):
    """First-order loss ``k * int_{-inf}^{inf} dw / w^2 sum_mu S_mu F_mu``.

    ``k`` is the spectrum's moment scale, ``1/2pi`` under the Wiener-Khinchin
    convention. The integral is done on ``u = ln w`` with Simpson's rule,
    piecewise between spectral breakpoints, doubling each piece until the
    total changes by less than ``rtol``. Frequencies above ``cap_factor``
    times the peak Rabi rate are dropped; their share is below the integrand
    decay ``S F / w^2 ~ w^-4`` and is reported as ``tail_bound``.
    """
    control = as_control(seq)
    terms = {}
    for quad, spec in (("a", spec_a), ("d", spec_d)):
        if not _active(spec):
            terms[quad] = 0.0
            continue
        edges = _integration_edges(control, [spec], cap_factor)

        def integrand(u, quad=quad, spec=spec):
            w = np.exp(u)
            f = filter_function(control, w, quad, multiplicative)
            return spec.psd(w) * f / w

        pieces = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            n = max(16, int(np.ceil(64 * np.log10(hi / lo))))
            n += n % 2
            u = np.linspace(np.log(lo), np.log(hi), n + 1)
            pieces.append([u, integrand(u), _simpson(integrand(u), u[1] - u[0])])
        total = sum(p[2] for p in pieces)
        for _ in range(max_level):
            changed = False
            new_total = 0.0
            for p in pieces:
                u = p[0]
                mids = 0.5 * (u[1:] + u[:-1])
                fine_u = np.empty(2 * len(u) - 1)
                fine_u[0::2], fine_u[1::2] = u, mids
                fine_y = np.empty_like(fine_u)
                fine_y[0::2], fine_y[1::2] = p[1], integrand(mids)
                value = _simpson(fine_y, fine_u[1] - fine_u[0])
                if abs(value - p[2]) > rtol * abs(total) / len(pieces):
                    changed = True
                p[:] = [fine_u, fine_y, value]
                new_total += value
            converged = abs(new_total - total) <= rtol * abs(new_total) and not changed
            total = new_total
            if converged:
                break
        else:
            raise QuadratureError(f"fidelity-loss integral for {_name(seq)} ({quad}) did not converge")
        terms[quad] = 2.0 * spec.moment_scale * total
        hi = edges[-1]
        if spec.omega_max > hi:
            # bounds on F from |cos, sin differences| <= 2 per step (amplitude) and
            # integration by parts per step (detuning)
            n = len(control)
            if quad == "a":
                f_max = 2.0 * n**2
            else:
                f_max = (n + 0.5 * np.sum(control.amplitude * control.dt)) ** 2
            terms[quad + "_tail_bound"] = 2.0 * spec.moment_scale * f_max * spec.psd(hi * 1.000001) * hi / (3 * hi**2)
    terms = {k: float(v) for k, v in terms.items()}
    loss = terms["a"] + terms["d"]
    return (loss, terms) if return_terms else loss


def _constant_noise_quaternions(control, beta_a, beta_d):
    beta_a = np.atleast_1d(np.asarray(beta_a, dtype=float))
    beta_d = np.atleast_1d(np.asarray(beta_d, dtype=float))
    beta_a, beta_d = np.broadcast_arrays(beta_a, beta_d)
    n = len(control)
    ba = np.repeat(beta_a[:, None], n, axis=1)
    bd = np.repeat(beta_d[:, None], n, axis=1)
    return kernels.propagate_batch(control.amplitude, control.phase, control.dt, ba, bd)


def deficit_quaternion(q0, q):
    """Quaternion of ``U0^dag U`` for SU(2) quaternions ``q0`` (ideal) and ``q`` (actual)."""
    p0, pv = q0[..., 0], q0[..., 1:]
    r0, rv = q[..., 0], q[..., 1:]
    d0 = p0 * r0 + np.sum(pv * rv, axis=-1)
    dv = p0[..., None] * rv - r0[..., None] * pv - np.cross(pv, rv)
    return np.concatenate([d0[..., None], dv], axis=-1)


def error_rotation(seq, beta_a, beta_d) -> np.ndarray:
    """Vector ``phi`` with ``U0^dag U = exp(-i phi . sigma)`` for constant noise.

    Uses the principal branch (``|phi| <= pi``); ``beta_a`` and ``beta_d``
    broadcast, giving an array of shape ``(..., 3)``.
    """
    control = as_control(seq)
    ideal = _constant_noise_quaternions(control, 0.0, 0.0)[0]
    q = _constant_noise_quaternions(control, beta_a, beta_d)
    d = deficit_quaternion(ideal, q)
    vec_norm = np.linalg.norm(d[:, 1:], axis=1)
    lam = np.arctan2(vec_norm, d[:, 0])
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(vec_norm > 0, lam / vec_norm, 0.0)
    return d[:, 1:] * scale[:, None]


def _lambda_sq(control, beta_a, beta_d):
    return np.sum(error_rotation(control, beta_a, beta_d) ** 2, axis=1)


def suppression_order(seq, quadrature: str, amplitude: float = DC_FIT_AMPLITUDES[0]) -> int:
    """Order ``m`` such that the residual rotation scales as ``beta^(m+1)``."""
    control = as_control(seq)
    beta = np.array([amplitude, amplitude / 2]) * control.peak_amplitude
    zero = np.zeros_like(beta)
    lam2 = _lambda_sq(control, beta, zero) if quadrature == "a" else _lambda_sq(control, zero, beta)
    if np.any(lam2 <= 0):
        raise DcFitError("residual rotation vanishes at the probe amplitude")
    exponent = np.log(lam2[0] / lam2[1]) / np.log(2.0)
    return int(round(exponent / 2 - 1))


def _fit(values, powers, m, name, quadrature):
    ratios = values / powers
    c = float(np.mean(ratios))
    residual = float(np.max(np.abs(ratios / c - 1))) if c != 0 else np.inf
    if residual > DC_FIT_TOL:
        raise DcFitError(
            f"{name} {quadrature}: residual {residual:.3g} exceeds {DC_FIT_TOL} for order m={m}; "
            "the sequence suppresses this quadrature to a different order"
        )
    return c, residual


def dc_coefficient(seq, quadrature: str, m: int = None, amplitudes=DC_FIT_AMPLITUDES) -> DcCoefficient:
    """Fit the slow-noise coefficient from exact constant-noise propagators.

    For ``quadrature`` in ``{"a", "d"}`` the fit is ``lambda^2 = c beta^(2(m+1))``
    over ``beta = amplitudes * Omega``; ``m`` defaults to the detected order.
    ``"cross"`` fits ``c_11`` from sign-symmetrized pairs,
    ``[lambda^2(a, b) + lambda^2(a, -b)]/2 - lambda^2(a, 0) - lambda^2(0, b) = c_11 a^2 b^2``,
    which needs both quadratures suppressed to at least first order.
    """
    if isinstance(seq, PulseSequence):
        return _dc_coefficient_cached(seq, quadrature, m, tuple(amplitudes))
    return _dc_coefficient(seq, quadrature, m, tuple(amplitudes))


@lru_cache(maxsize=256)
def _dc_coefficient_cached(seq, quadrature, m, amplitudes):
    return _dc_coefficient(seq, quadrature, m, amplitudes)


def _dc_coefficient(seq, quadrature, m, amplitudes):
    control = as_control(seq)
    name = _name(seq)
    omega = control.peak_amplitude
    beta = np.asarray(amplitudes, dtype=float) * omega
    zero = np.zeros_like(beta)
    if quadrature in ("a", "d"):
        if m is None:
            m = suppression_order(control, quadrature, amplitudes[0])
        lam2 = _lambda_sq(control, beta, zero) if quadrature == "a" else _lambda_sq(control, zero, beta)
        c, residual = _fit(lam2, beta ** (2 * (m + 1)), m, name, quadrature)
        return DcCoefficient(name, quadrature, m, c, omega, residual)
    if quadrature != "cross":
        raise ValueError(f"quadrature must be 'a', 'd' or 'cross', got {quadrature!r}")
    orders = {q: suppression_order(control, q, amplitudes[0]) for q in ("a", "d")}
    if min(orders.values()) < 1:
        raise DcFitError(f"{name}: cross term needs first-order suppression in both quadratures, got {orders}")
    ba, bd = (g.ravel() for g in np.meshgrid(beta, beta))
    sym = 0.5 * (_lambda_sq(control, ba, bd) + _lambda_sq(control, ba, -bd))
    cross = sym - _lambda_sq(control, ba, 0 * bd) - _lambda_sq(control, 0 * ba, bd)
    c, residual = _fit(cross, ba**2 * bd**2, 1, name, "cross")
    return DcCoefficient(name, "cross", 1, c, omega, residual)


def dc_fidelity_loss(seq, spec_a, spec_d, return_terms: bool = False):
    """Slow-noise loss ``sum_mu c_mu (2m+1)!! <beta_mu^2>^(m+1)``.

    When both quadratures are suppressed to at least first order the cross
    term ``c_11 <beta_a^2><beta_d^2>`` is added (independent zero-mean noises).
    """
    terms = {}
    orders = {}
    for quad, spec in (("a", spec_a), ("d", spec_d)):
        if not _active(spec):
            continue
        coef = dc_coefficient(seq, quad)
        orders[quad] = coef.m
        terms[quad] = coef.c * gaussian_moment(spec, coef.m)
    if orders.get("a", 0) >= 1 and orders.get("d", 0) >= 1:
        coef = dc_coefficient(seq, "cross")
        terms["cross"] = coef.c * spec_a.total_power() * spec_d.total_power()
    loss = float(sum(terms.values()))
    return (loss, terms) if return_terms else loss


def combined_estimate(seq, spec_a, spec_d, **ff_kwargs) -> FidelityEstimate:
    """Larger of the first-order filter-function loss and the dc-limit loss."""
    ff_loss, ff_terms = ff_fidelity_loss(seq, spec_a, spec_d, return_terms=True, **ff_kwargs)
    dc_loss, dc_terms = dc_fidelity_loss(seq, spec_a, spec_d, return_terms=True)
    return FidelityEstimate(ff_loss, dc_loss, max(ff_loss, dc_loss), ff_terms, dc_terms)
