"""Noise power spectral densities and Gaussian moments.

Spectra are two-sided and even in ``omega``. The ``convention`` fixes how a
spectrum maps to the noise autocorrelation:

``wiener_khinchin``
    ``<beta^2> = (1/2pi) int S dw`` (the transform pair used for the
    first-order fidelity-loss integral).
``paper_moment``
    ``<beta^2> = int S dw``.

Every consumer (moments, noise synthesis, the fidelity-loss integral) goes
through :attr:`moment_scale`, so one spectrum object is used consistently.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import factorial2

CONVENTIONS = ("wiener_khinchin", "paper_moment")
DEFAULT_CONVENTION = "wiener_khinchin"

CAPTION_SCALE = 2.07e9
CAPTION_OMEGA_MIN = 2 * np.pi
CAPTION_OMEGA_MAX = 4.5e9
CAPTION_RABI = 1.5e6


class SpectrumError(ValueError):
    pass


def _check_convention(convention):
    if convention not in CONVENTIONS:
        raise SpectrumError(f"convention must be one of {CONVENTIONS}, got {convention!r}")


class _SpectrumBase:
    convention: str

    @property
    def moment_scale(self) -> float:
        """Factor turning ``int S dw`` into ``<beta^2>``."""
        return 1.0 / (2 * np.pi) if self.convention == "wiener_khinchin" else 1.0

    def total_power(self) -> float:
        """``<beta^2>`` under the active convention."""
        return self.moment_scale * 2.0 * self.band_power(0.0, np.inf)

    def variance_in_band(self, lo: float, hi: float) -> float:
        """Contribution of ``lo <= |w| < hi`` to ``<beta^2>``."""
        return self.moment_scale * 2.0 * self.band_power(lo, hi)

    def gaussian_moment(self, m: int) -> float:
        """``<beta^(2(m+1))> = (2m+1)!! <beta^2>^(m+1)``."""
        return gaussian_moment(self, m)

    def sample_frequency(self, lo, hi, u):
        """Map uniforms ``u`` to frequencies in ``[lo, hi)``; log-uniform by default."""
        return lo * (hi / lo) ** u

    def breakpoints(self) -> list:
        return []


@dataclass(frozen=True)
class NoiseSpectrum(_SpectrumBase):
    """1/f spectrum rolling off to 1/f^2 at the knee ``omega_b``.

    ``S(w) = A/|w|`` on ``(omega_min, omega_b)``, ``omega_b A / w^2`` on
    ``(omega_b, omega_max)`` and zero elsewhere.
    """

    A: float
    omega_min: float
    omega_b: float
    omega_max: float
    convention: str = DEFAULT_CONVENTION

    def __post_init__(self):
        _check_convention(self.convention)
        if self.A < 0:
            raise SpectrumError("A must be non-negative")
        if not 0 < self.omega_min < self.omega_b <= self.omega_max:
            raise SpectrumError("need 0 < omega_min < omega_b <= omega_max")

    @classmethod
    def from_total(cls, scale: float, omega_b: float, omega_min: float = CAPTION_OMEGA_MIN,
                   omega_max: float = CAPTION_OMEGA_MAX, convention: str = DEFAULT_CONVENTION):
        """Amplitude ``A = scale / [ln(omega_b/omega_min) + 1 - omega_b/omega_max]``.

        This keeps ``int_0^inf S dw = scale`` for every knee position.
        """
        norm = np.log(omega_b / omega_min) + 1.0 - omega_b / omega_max
        return cls(scale / norm, omega_min, omega_b, omega_max, convention)

    @classmethod
    def caption(cls, omega_b: float, convention: str = DEFAULT_CONVENTION):
        """Reference spectrum with scale 2.07e9, omega_min = 2pi rad/s, omega_max = 4.5e9 rad/s."""
        return cls.from_total(CAPTION_SCALE, omega_b, CAPTION_OMEGA_MIN, CAPTION_OMEGA_MAX, convention)

    def psd(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            flicker = np.where((w > self.omega_min) & (w < self.omega_b), self.A / w, 0.0)
            rolloff = np.where((w >= self.omega_b) & (w < self.omega_max), self.omega_b * self.A / w**2, 0.0)
        out = flicker + rolloff
        return out if np.ndim(omega) else float(out)

    def band_power(self, lo: float, hi: float) -> float:
        """``int_lo^hi S dw`` over positive frequencies."""
        lo_f, hi_f = max(lo, self.omega_min), min(hi, self.omega_b)
        total = self.A * np.log(hi_f / lo_f) if hi_f > lo_f else 0.0
        lo_r, hi_r = max(lo, self.omega_b), min(hi, self.omega_max)
        if hi_r > lo_r:
            total += self.omega_b * self.A * (1.0 / lo_r - 1.0 / hi_r)
        return float(total)

    def breakpoints(self) -> list:
        return [self.omega_min, self.omega_b, self.omega_max]

    def sample_frequency(self, lo, hi, u):
        """Inverse-CDF sampling of ``S`` restricted to ``[lo, hi)`` (one power-law piece)."""
        if hi <= self.omega_b:
            return lo * (hi / lo) ** u
        if lo >= self.omega_b:
            return 1.0 / (1.0 / lo - u * (1.0 / lo - 1.0 / hi))
        return super().sample_frequency(lo, hi, u)

    def scaled(self, factor: float) -> "NoiseSpectrum":
        return NoiseSpectrum(self.A * factor, self.omega_min, self.omega_b, self.omega_max, self.convention)

    def with_convention(self, convention: str) -> "NoiseSpectrum":
        return NoiseSpectrum(self.A, self.omega_min, self.omega_b, self.omega_max, convention)


@dataclass(frozen=True, eq=False)
class TabulatedSpectrum(_SpectrumBase):
    """Spectrum given on a monotone positive-frequency table, linearly interpolated, zero outside."""

    omegas: np.ndarray
    values: np.ndarray
    convention: str = DEFAULT_CONVENTION

    def __post_init__(self):
        _check_convention(self.convention)
        w = np.asarray(self.omegas, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if w.ndim != 1 or w.shape != v.shape or len(w) < 2:
            raise SpectrumError("table needs matching 1-d omega and value arrays")
        if np.any(np.diff(w) <= 0) or w[0] < 0:
            raise SpectrumError("table frequencies must be non-negative and strictly increasing")
        if np.any(v < 0):
            raise SpectrumError("spectral density must be non-negative")
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "values", v)

    @property
    def omega_min(self):
        return float(self.omegas[0])

    @property
    def omega_max(self):
        return float(self.omegas[-1])

    def psd(self, omega):
        w = np.abs(np.asarray(omega, dtype=float))
        out = np.interp(w, self.omegas, self.values, left=0.0, right=0.0)
        return out if np.ndim(omega) else float(out)

    def band_power(self, lo: float, hi: float) -> float:
        lo, hi = max(lo, self.omega_min), min(hi, self.omega_max)
        if hi <= lo:
            return 0.0
        inner = self.omegas[(self.omegas > lo) & (self.omegas < hi)]
        knots = np.concatenate([[lo], inner, [hi]])
        return float(np.trapezoid(self.psd(knots), knots))

    def breakpoints(self) -> list:
        return [self.omega_min, self.omega_max]


def gaussian_moment(spec, m: int) -> float:
    """``(2m+1)!! * total_power^(m+1)`` for a zero-mean Gaussian process."""
    if m < 0:
        raise ValueError("moment order must be >= 0")
    return float(factorial2(2 * m + 1, exact=True)) * spec.total_power() ** (m + 1)


def zero_spectrum(convention: str = DEFAULT_CONVENTION) -> NoiseSpectrum:
    return NoiseSpectrum(0.0, CAPTION_OMEGA_MIN, 2 * CAPTION_OMEGA_MIN, CAPTION_OMEGA_MAX, convention)


def spectrum_from_config(cfg: dict):
    """Build a spectrum from JSON-style config.

    Accepts ``{"A", "omega_min", "omega_b", "omega_max", "convention"}``; with
    ``"scale"`` instead of ``"A"`` the amplitude follows the constant-total-power
    normalization; ``{"table": [[w, S], ...]}`` gives a tabulated spectrum.
    """
    convention = cfg.get("convention", DEFAULT_CONVENTION)
    try:
        if "table" in cfg:
            table = np.asarray(cfg["table"], dtype=float)
            return TabulatedSpectrum(table[:, 0], table[:, 1], convention)
        omega_min = float(cfg.get("omega_min", CAPTION_OMEGA_MIN))
        omega_max = float(cfg.get("omega_max", CAPTION_OMEGA_MAX))
        omega_b = float(cfg["omega_b"])
        if "A" in cfg:
            return NoiseSpectrum(float(cfg["A"]), omega_min, omega_b, omega_max, convention)
        return NoiseSpectrum.from_total(float(cfg.get("scale", CAPTION_SCALE)), omega_b, omega_min, omega_max, convention)
    except (KeyError, IndexError, TypeError) as exc:
        raise SpectrumError(f"bad spectrum config: {exc}") from None
