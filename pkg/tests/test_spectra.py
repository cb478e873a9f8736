import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from cprobust.spectra import (
    CAPTION_OMEGA_MAX,
    CAPTION_OMEGA_MIN,
    CAPTION_SCALE,
    NoiseSpectrum,
    SpectrumError,
    TabulatedSpectrum,
    gaussian_moment,
    spectrum_from_config,
    zero_spectrum,
)

OMEGA = 1.5e6


def log_quad(f, lo, hi):
    """``int_lo^hi f dw`` on a log variable, which handles many decades."""
    return quad(lambda x: f(np.exp(x)) * np.exp(x), np.log(lo), np.log(hi), epsrel=1e-12, limit=400)[0]


def test_psd_shape():
    sp = NoiseSpectrum(2.0, 1.0, 10.0, 100.0)
    assert sp.psd(5.0) == pytest.approx(0.4)
    assert sp.psd(-5.0) == pytest.approx(0.4)
    assert sp.psd(20.0) == pytest.approx(10 * 2.0 / 400)
    assert sp.psd(0.5) == 0.0 and sp.psd(200.0) == 0.0
    # continuous at the knee
    assert sp.psd(10.0 * (1 - 1e-12)) == pytest.approx(sp.psd(10.0), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 6.0), st.floats(0.0, 6.0))
def test_band_power_matches_quadrature(x, y):
    sp = NoiseSpectrum(3.0, 2.0, 50.0, 1e4)
    lo, hi = sorted((10**x, 10**y))
    if hi / lo < 1 + 1e-9:
        return
    ref = sum(log_quad(sp.psd, max(a, lo), min(b, hi)) for a, b in [(2.0, 50.0), (50.0, 1e4)]
              if min(b, hi) > max(a, lo))
    assert sp.band_power(lo, hi) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_total_power_is_constant_across_knee_sweep():
    knees = np.geomspace(1e-3, 1e-1, 10) * OMEGA
    totals = [NoiseSpectrum.caption(k, "paper_moment").band_power(0, np.inf) for k in knees]
    np.testing.assert_allclose(totals, CAPTION_SCALE, rtol=1e-12)


def test_caption_amplitude_formula():
    k = 1e-2 * OMEGA
    sp = NoiseSpectrum.caption(k)
    expected = 2.07e9 / (np.log(k / (2 * np.pi)) + 1 - k / 4.5e9)
    assert sp.A == pytest.approx(expected, rel=1e-14)
    assert sp.omega_min == CAPTION_OMEGA_MIN and sp.omega_max == CAPTION_OMEGA_MAX


def test_conventions_differ_by_two_pi():
    wk = NoiseSpectrum.caption(1e4, "wiener_khinchin")
    pm = wk.with_convention("paper_moment")
    assert pm.total_power() == pytest.approx(2 * np.pi * wk.total_power(), rel=1e-14)
    assert pm.total_power() == pytest.approx(2 * CAPTION_SCALE, rel=1e-14)
    assert wk.moment_scale == pytest.approx(1 / (2 * np.pi))


def test_gaussian_moments_match_sampling():
    sp = NoiseSpectrum(1.0, 1.0, 10.0, 100.0)
    var = sp.total_power()
    x = np.random.default_rng(0).normal(0, np.sqrt(var), 400_000)
    for m in (0, 1, 2):
        assert gaussian_moment(sp, m) == pytest.approx(np.mean(x ** (2 * (m + 1))), rel=0.03)
    assert gaussian_moment(sp, 1) == pytest.approx(3 * var**2)
    assert sp.gaussian_moment(2) == pytest.approx(15 * var**3)
    with pytest.raises(ValueError):
        gaussian_moment(sp, -1)


@pytest.mark.parametrize("band", [(3.0, 7.0), (20.0, 90.0), (1.0, 10.0)])
def test_sample_frequency_follows_spectrum(band):
    # the sampled frequency's CDF inside a band is the normalized band power
    sp = NoiseSpectrum(1.0, 1.0, 10.0, 100.0)
    lo, hi = band
    u = np.linspace(0.01, 0.99, 25)
    w = np.array([sp.sample_frequency(lo, hi, x) for x in u])
    assert np.all((w >= lo) & (w <= hi))
    cdf = np.array([sp.band_power(lo, x) for x in w]) / sp.band_power(lo, hi)
    np.testing.assert_allclose(cdf, u, atol=1e-12)


def test_sample_frequency_vectorized():
    sp = NoiseSpectrum(1.0, 1.0, 10.0, 100.0)
    u = np.linspace(0, 1, 7)
    np.testing.assert_allclose(sp.sample_frequency(20.0, 90.0, u), [sp.sample_frequency(20.0, 90.0, x) for x in u])


def test_spectrum_validation():
    with pytest.raises(SpectrumError):
        NoiseSpectrum(1.0, 10.0, 1.0, 100.0)
    with pytest.raises(SpectrumError):
        NoiseSpectrum(-1.0, 1.0, 10.0, 100.0)
    with pytest.raises(SpectrumError):
        NoiseSpectrum(1.0, 1.0, 10.0, 100.0, "unitary")


def test_scaled_and_zero():
    sp = NoiseSpectrum(1.0, 1.0, 10.0, 100.0)
    assert sp.scaled(4.0).total_power() == pytest.approx(4 * sp.total_power())
    assert zero_spectrum().total_power() == 0.0


def test_tabulated_spectrum():
    w = np.array([0.0, 1.0, 2.0, 4.0])
    s = np.array([1.0, 1.0, 0.5, 0.0])
    tab = TabulatedSpectrum(w, s, "paper_moment")
    assert tab.band_power(0, np.inf) == pytest.approx(1.0 + 0.75 + 0.5)
    assert tab.band_power(0.5, 1.5) == pytest.approx(0.5 + 0.4375)
    assert tab.psd(3.0) == pytest.approx(0.25)
    assert tab.psd(5.0) == 0.0
    with pytest.raises(SpectrumError):
        TabulatedSpectrum(w[::-1], s)
    with pytest.raises(SpectrumError):
        TabulatedSpectrum(w, -s)


def test_spectrum_from_config():
    sp = spectrum_from_config({"omega_b": 1e4})
    assert sp.A == pytest.approx(NoiseSpectrum.caption(1e4).A)
    sp = spectrum_from_config({"A": 5.0, "omega_min": 1.0, "omega_b": 2.0, "omega_max": 3.0,
                               "convention": "paper_moment"})
    assert sp.A == 5.0 and sp.convention == "paper_moment"
    tab = spectrum_from_config({"table": [[0, 1], [1, 1]]})
    assert isinstance(tab, TabulatedSpectrum)
    with pytest.raises(SpectrumError):
        spectrum_from_config({"A": 1.0})
