"""Stationary zero-mean Gaussian noise with a prescribed spectrum.

Two synthesis routes share the same calibration, ``<beta^2> =
spec.total_power()`` (so the spectrum's convention carries through):

* ``"fft"`` draws independent Gaussian Fourier coefficients on the record's
  own frequency grid. Each bin carries exactly the spectral power of its
  band, so the ensemble periodogram reproduces the band-averaged spectrum.
  Power below half the first bin becomes a random static offset.
* ``"harmonic"`` sums a few hundred random-phase harmonics on log-spaced
  bins from ``omega_min`` up to the Nyquist cut. Each bin's frequency is
  redrawn per realization from the spectrum inside the bin, so the ensemble
  autocorrelation is exact even far below ``1/duration``. This is the route
  used by the Monte Carlo simulator, whose records are much shorter than
  the slowest noise period.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

BINS_PER_DECADE = 40


class NyquistWarning(UserWarning):
    """Spectrum extends beyond the sampling Nyquist frequency and was clipped."""


@dataclass(frozen=True, eq=False)
class NoiseTrajectory:
    dt: float
    samples: np.ndarray
    seed: int
    spectrum: object
    times: np.ndarray
    clipped_power: float = 0.0

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class HarmonicBins:
    lo: np.ndarray
    hi: np.ndarray
    variance: np.ndarray
    static_variance: float
    clipped_power: float


@dataclass(frozen=True, eq=False)
class Periodogram:
    omega: np.ndarray
    psd: np.ndarray
    width: np.ndarray
    moment_scale: float

    def integral(self) -> float:
        """``<beta^2>`` implied by the estimate (equals the sample variance)."""
        return float(2.0 * self.moment_scale * np.sum(self.psd * self.width))


def realization_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Generator for realization ``index``, independent of generation order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index), int(stream)]))


def nyquist_clip(spec, dt: float, warn: bool = True) -> tuple:
    """Cut frequency ``pi/dt`` and the variance above it."""
    cut = np.pi / dt
    clipped = spec.variance_in_band(cut, np.inf)
    if warn and clipped > 0:
        warnings.warn(
            f"spectrum extends past the Nyquist frequency {cut:.4g} rad/s; "
            f"clipping variance {clipped:.4g}",
            NyquistWarning,
            stacklevel=3,
        )
    return cut, clipped


def harmonic_bins(spec, omega_cut: float, bins_per_decade: int = BINS_PER_DECADE) -> HarmonicBins:
    """Log-spaced bins covering the spectrum's support below ``omega_cut``.

    Spectral breakpoints are bin edges, so each bin lies inside one
    analytic piece of the spectrum.
    """
    hi = min(spec.omega_max, omega_cut)
    lo = spec.omega_min if spec.omega_min > 0 else hi * 1e-12
    static = spec.variance_in_band(0.0, lo)
    clipped = spec.variance_in_band(hi, np.inf)
    if hi <= lo:
        return HarmonicBins(np.empty(0), np.empty(0), np.empty(0), static, clipped)
    n = max(1, int(np.ceil(np.log10(hi / lo) * bins_per_decade)))
    edges = set(np.geomspace(lo, hi, n + 1))
    edges.update(b for b in spec.breakpoints() if lo < b < hi)
    edges = np.array(sorted(edges))
    variance = np.array([spec.variance_in_band(a, b) for a, b in zip(edges[:-1], edges[1:])])
    keep = variance > 0
    return HarmonicBins(edges[:-1][keep], edges[1:][keep], variance[keep], static, clipped)


def draw_harmonics(spec, bins: HarmonicBins, seed: int, indices, stream: int = 0) -> tuple:
    """Harmonic parameters for realizations ``indices``.

    Returns frequencies, cosine and sine amplitudes of shape
    ``(len(indices), n_bins)`` and static offsets of shape ``(len(indices),)``.
    Realization ``i`` only consumes ``realization_rng(seed, i, stream)``.
    """
    k = len(bins.variance)
    n = len(indices)
    u = np.empty((n, k))
    coef = np.empty((n, 2, k))
    offset = np.empty(n)
    for row, index in enumerate(indices):
        rng = realization_rng(seed, index, stream)
        u[row] = rng.random(k)
        coef[row] = rng.standard_normal((2, k))
        offset[row] = rng.standard_normal()
    omega = np.empty((n, k))
    for j in range(k):
        omega[:, j] = spec.sample_frequency(bins.lo[j], bins.hi[j], u[:, j])
    sd = np.sqrt(bins.variance)
    return omega, coef[:, 0] * sd, coef[:, 1] * sd, offset * np.sqrt(bins.static_variance)


def evaluate_harmonics(omega, a, b, offset, times) -> np.ndarray:
    """Sum of harmonics at ``times``; leading axes of ``omega``/``a``/``b`` are realizations."""
    times = np.asarray(times, dtype=float)
    phase = omega[..., :, None] * times
    return offset[..., None] + np.einsum("...k,...kt->...t", a, np.cos(phase)) + np.einsum(
        "...k,...kt->...t", b, np.sin(phase)
    )


def _fft_record(spec, dt, n, rng):
    dw = 2 * np.pi / (n * dt)
    k = np.arange(n // 2 + 1)
    centers = k * dw
    lo = np.maximum(centers - dw / 2, 0.0)
    hi = np.where(k == n // 2, centers, centers + dw / 2)
    variance = np.array([spec.variance_in_band(a, b) for a, b in zip(lo, hi)])
    a = rng.standard_normal(len(k)) * np.sqrt(variance)
    b = rng.standard_normal(len(k)) * np.sqrt(variance)
    spectrum = 0.5 * n * (a - 1j * b)
    spectrum[0] = n * a[0]
    spectrum[-1] = n * a[-1]
    return np.fft.irfft(spectrum, n)


def synthesize(spec, dt: float, duration: float, seed: int, method: str = "fft",
               bins_per_decade: int = BINS_PER_DECADE) -> NoiseTrajectory:
    """Noise record sampled every ``dt`` covering at least ``duration``.

    Deterministic for a given ``(spec, dt, duration, seed, method)``. Power
    above ``pi/dt`` is dropped with a :class:`NyquistWarning`; the dropped
    variance is kept in ``clipped_power``.
    """
    if dt <= 0 or duration <= 0:
        raise ValueError("dt and duration must be positive")
    n = int(np.ceil(duration / dt - 1e-9))
    n += n % 2
    n = max(n, 2)
    times = np.arange(n) * dt
    cut, clipped = nyquist_clip(spec, dt)
    if method == "fft":
        samples = _fft_record(spec, dt, n, realization_rng(seed, 0))
    elif method == "harmonic":
        bins = harmonic_bins(spec, cut, bins_per_decade)
        omega, a, b, offset = draw_harmonics(spec, bins, seed, [0])
        samples = evaluate_harmonics(omega, a, b, offset, times)[0]
    else:
        raise ValueError(f"method must be 'fft' or 'harmonic', got {method!r}")
    return NoiseTrajectory(dt, samples, seed, spec, times, clipped)


def periodogram(traj: NoiseTrajectory) -> Periodogram:
    """Unwindowed one-sided periodogram in units of the two-sided spectrum.

    The mean (zero-frequency bin) is excluded, so ``integral()`` equals the
    sample variance with ``ddof=0``.
    """
    x = np.asarray(traj.samples, dtype=float)
    n = len(x)
    if n < 256:
        raise ValueError("periodogram needs at least 256 samples")
    dw = 2 * np.pi / (n * traj.dt)
    power = np.abs(np.fft.rfft(x)) ** 2 / n**2
    power[1:] *= 2
    width = np.full(len(power), dw)
    if n % 2 == 0:
        power[-1] /= 2
        width[-1] = dw / 2
    scale = traj.spectrum.moment_scale if traj.spectrum is not None else 1.0 / (2 * np.pi)
    omega = np.arange(len(power)) * dw
    psd = power / (2 * scale * width)
    return Periodogram(omega[1:], psd[1:], width[1:], scale)


def write_trajectory_csv(path, traj: NoiseTrajectory) -> None:
    """Dump a trajectory as rows ``t, beta``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "beta"])
        for t, b in zip(traj.times, traj.samples):
            writer.writerow([repr(float(t)), repr(float(b))])
