import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal

from oracles import direct_dft, sine
from qeeg.dsp import (
    BANDS,
    BandPowerVector,
    ConfigError,
    FilterSpec,
    FrequencyBand,
    InputError,
    PsdEstimate,
    SignalRecord,
    StandardizationError,
    StandardizerStats,
    WelchConfig,
    apply_standardizer,
    apply_zero_phase_filter,
    band_power,
    band_powers,
    design_butterworth_bandpass,
    extract_band_features,
    fft_power_spectrum,
    fit_standardizer,
    welch_psd,
)

FS = 250.0
INV_SQRT2 = 1 / math.sqrt(2)


@pytest.fixture(scope="module")
def eeg_filter():
    return design_butterworth_bandpass(FilterSpec())


# --- filter design ----------------------------------------------------------


def test_default_filter_shape_and_stability(eeg_filter):
    assert len(eeg_filter.denominator) == 11  # 2 * order + 1
    assert eeg_filter.denominator[0] == 1.0
    assert np.max(np.abs(np.roots(eeg_filter.denominator))) < 1 - 1e-9


def test_default_filter_passband_and_cutoffs(eeg_filter):
    h = np.abs(eeg_filter.frequency_response([0.5, 45.0, math.sqrt(0.5 * 45.0)], FS))
    assert h[0] == pytest.approx(INV_SQRT2, rel=0.01)
    assert h[1] == pytest.approx(INV_SQRT2, rel=0.01)
    assert h[2] >= 0.99


def test_filter_matches_scipy_design(eeg_filter):
    b, a = signal.butter(5, [0.5, 45.0], btype="bandpass", fs=FS)
    np.testing.assert_allclose(eeg_filter.numerator, b, atol=1e-12)
    np.testing.assert_allclose(eeg_filter.denominator, a, atol=1e-10)


@pytest.mark.parametrize(
    "spec",
    [
        FilterSpec(0.5, 130.0, 5, 250.0),
        FilterSpec(0.5, 125.0, 5, 250.0),
        FilterSpec(0.5, 45.0, 0, 250.0),
        FilterSpec(50.0, 40.0, 5, 250.0),
        FilterSpec(0.0, 40.0, 5, 250.0),
    ],
)
def test_invalid_filter_specs(spec):
    with pytest.raises(ConfigError):
        design_butterworth_bandpass(spec)


@settings(max_examples=40, deadline=None)
@given(
    fs=st.sampled_from([128.0, 250.0, 500.0, 1000.0]),
    order=st.integers(1, 6),
    low_frac=st.floats(0.01, 0.1),
    high_frac=st.floats(0.2, 0.4),
)
def test_cutoffs_are_half_power_for_any_valid_spec(fs, order, low_frac, high_frac):
    spec = FilterSpec(low_frac * fs, high_frac * fs, order, fs)
    c = design_butterworth_bandpass(spec)
    h = np.abs(c.frequency_response([spec.low_cut_hz, spec.high_cut_hz], fs))
    np.testing.assert_allclose(h, INV_SQRT2, rtol=0.01)
    assert c.is_stable()


# --- zero-phase filtering ---------------------------------------------------


def _dft_bin(x, freq, fs):
    n = len(x)
    t = np.arange(n)
    return np.sum(x * np.exp(-2j * np.pi * freq * t / fs))


def test_passband_sine_keeps_amplitude_and_phase(eeg_filter):
    x = sine(10.0, 1.0, FS, 10.0)
    y = apply_zero_phase_filter(eeg_filter, x)
    assert len(y) == len(x)
    amp_in = 2 * abs(_dft_bin(x, 10.0, FS)) / len(x)
    amp_out = 2 * abs(_dft_bin(y, 10.0, FS)) / len(y)
    assert amp_out == pytest.approx(amp_in, rel=0.02)
    xc = np.correlate(y, x, mode="full")
    assert np.argmax(xc) - (len(x) - 1) == 0


def test_stopband_sine_is_attenuated(eeg_filter):
    # edge transients ring through the 0.5 Hz poles for a few seconds;
    # compare the settled interior with the two-pass gain |H(60)|^2
    x = sine(60.0, 1.0, FS, 20.0)
    y = apply_zero_phase_filter(eeg_filter, x)
    settled = slice(1000, -1000)
    ratio = np.sqrt(np.mean(y[settled] ** 2) / np.mean(x[settled] ** 2))
    h2 = abs(eeg_filter.frequency_response([60.0], FS)[0]) ** 2
    assert ratio < 0.05
    assert ratio == pytest.approx(h2, rel=0.05)


def test_zero_in_zero_out(eeg_filter):
    assert np.all(apply_zero_phase_filter(eeg_filter, np.zeros(500)) == 0.0)


def test_matches_reference_two_pass_routine(eeg_filter):
    rng = np.random.default_rng(3)
    x = rng.normal(size=1000)
    ref = signal.filtfilt(eeg_filter.numerator, eeg_filter.denominator, x, padlen=30)
    np.testing.assert_allclose(apply_zero_phase_filter(eeg_filter, x), ref, atol=1e-10)


def test_too_short_for_padding(eeg_filter):
    with pytest.raises(InputError):
        apply_zero_phase_filter(eeg_filter, np.ones(30))


# --- Welch ------------------------------------------------------------------


def test_welch_sine_power_matches_parseval():
    x = sine(10.0, 2.0, FS, 10.0)
    oracle = np.sum(np.abs(np.fft.fft(x - x.mean())) ** 2) / len(x) ** 2
    assert oracle == pytest.approx(2.0, rel=1e-6)
    psd = welch_psd(x, FS, WelchConfig())
    assert psd.total_power() == pytest.approx(oracle, rel=0.05)
    assert psd.resolution_hz == FS / 256


def test_welch_constant_signal_vanishes():
    c = 3.7
    psd = welch_psd(np.full(1000, c), FS)
    assert np.max(psd.power_density) <= 1e-12 * c**2


def test_welch_white_noise_variance():
    rng = np.random.default_rng(11)
    x = rng.normal(0.0, 1.5, size=int(100 * FS))
    psd = welch_psd(x, FS)
    assert psd.total_power() == pytest.approx(np.var(x), rel=0.10)


def test_welch_matches_scipy():
    rng = np.random.default_rng(5)
    x = rng.normal(size=3000) + sine(12.0, 1.0, FS, 12.0)
    f, p = signal.welch(x, FS, window="hann", nperseg=256, noverlap=128, detrend="constant")
    psd = welch_psd(x, FS)
    np.testing.assert_allclose(psd.frequencies_hz, f)
    np.testing.assert_allclose(psd.power_density, p, rtol=1e-10, atol=1e-15)


def test_welch_psd_shape_invariants():
    psd = welch_psd(np.random.default_rng(0).normal(size=1000), FS)
    assert psd.frequencies_hz[0] == 0.0
    assert psd.frequencies_hz[-1] == FS / 2
    assert np.all(np.diff(psd.frequencies_hz) > 0)
    assert np.all(psd.power_density >= 0)


def test_welch_rejects_short_signal():
    with pytest.raises(InputError):
        welch_psd(np.ones(255), FS)


def test_welch_config_validation():
    with pytest.raises(ConfigError):
        welch_psd(np.ones(1000), FS, WelchConfig(overlap_fraction=1.0))
    with pytest.raises(ConfigError):
        welch_psd(np.ones(1000), FS, WelchConfig(segment_length=4))


# --- FFT spectrum -----------------------------------------------------------


def test_fft_spectrum_matches_direct_dft():
    x = sine(10.0, 2.0, FS, 2.0) + np.random.default_rng(1).normal(size=500)
    psd = fft_power_spectrum(x, FS)
    xd = direct_dft(x - x.mean())
    n = len(x)
    expected = np.abs(xd) ** 2 / (FS * n)
    expected[1:-1] *= 2
    np.testing.assert_allclose(psd.power_density, expected, rtol=1e-9, atol=1e-12)


def test_fft_single_tone_in_one_bin():
    x = sine(10.0, 2.0, FS, 2.0)  # 20 whole periods
    psd = fft_power_spectrum(x, FS)
    k = np.argmax(psd.power_density)
    assert psd.frequencies_hz[k] == 10.0
    assert psd.power_density[k] >= 0.99 * psd.power_density.sum()
    assert psd.total_power() == pytest.approx(2.0, rel=1e-9)


def test_fft_zero_signal():
    assert np.all(fft_power_spectrum(np.zeros(64), FS).power_density == 0)


def test_fft_two_tone_ratio():
    x = sine(6.0, 1.0, FS, 4.0) + sine(20.0, 3.0, FS, 4.0)
    psd = fft_power_spectrum(x, FS)

    def near(f0):
        return band_power(psd, FrequencyBand("x", f0 - 1, f0 + 1))

    assert near(20.0) / near(6.0) == pytest.approx(9.0, rel=0.05)


# --- band power -------------------------------------------------------------


def test_alpha_tone_lands_in_alpha():
    psd = welch_psd(sine(10.0, 2.0, FS, 10.0), FS)
    p = dict(zip([b.name for b in BANDS], band_powers(psd)))
    assert p["alpha"] >= 0.95 * psd.total_power()


def test_delta_tone_dominates():
    psd = welch_psd(sine(2.0, 2.0, FS, 10.0), FS)
    d, t, a, b = band_powers(psd)
    assert max(t, a, b) < 0.05 * d


def test_zero_psd_zero_bands():
    psd = PsdEstimate(np.linspace(0, 125, 129), np.zeros(129), 125 / 128)
    assert np.all(band_powers(psd) == 0)


def test_band_narrower_than_resolution():
    psd = welch_psd(np.random.default_rng(0).normal(size=1000), FS)
    with pytest.raises(InputError, match="resolution"):
        band_power(psd, FrequencyBand("narrow", 10.0, 10.5))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=129, max_size=129))
def test_bands_partition_power(values):
    f = np.linspace(0, 125, 129)
    psd = PsdEstimate(f, np.array(values), f[1])
    total = np.sum(psd.power_density[(f >= 0.5) & (f < 30)]) * psd.resolution_hz
    assert np.sum(band_powers(psd)) <= total + 1e-9


@settings(max_examples=25, deadline=None)
@given(
    amps=st.permutations([0.5, 1.0, 2.0, 4.0]),
    offsets=st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4),
)
def test_welch_and_fft_rank_bands_identically(amps, offsets):
    # tones kept >= 1 Hz inside each band so leakage cannot cross an edge
    centres = [(1.5, 2.5), (5.0, 7.0), (9.0, 12.0), (15.0, 28.0)]
    x = sum(
        a * sine(lo + off * (hi - lo), 1.0, FS, 8.0)
        for a, (lo, hi), off in zip(amps, centres, offsets)
    )
    w = band_powers(welch_psd(x, FS))
    f = band_powers(fft_power_spectrum(x, FS))
    assert list(np.argsort(w)) == list(np.argsort(f))


# --- feature extraction -----------------------------------------------------


def _record(*channels, fs=FS):
    return SignalRecord(fs, {f"c{i}": c for i, c in enumerate(channels)}, trial_id="t1")


@pytest.mark.parametrize("method", ["welch", "fft"])
def test_alpha_trial_has_largest_alpha(method):
    v = extract_band_features(_record(sine(10.0, 1.0, FS, 4.0)), method=method)
    arr = v.as_array()
    assert np.argmax(arr) == 2
    assert not v.standardized and np.all(arr >= 0)


def test_identical_channels_equal_single_channel():
    x = sine(7.0, 1.0, FS, 4.0) + np.random.default_rng(2).normal(size=1000)
    one = extract_band_features(_record(x)).as_array()
    two = extract_band_features(_record(x, x.copy())).as_array()
    np.testing.assert_allclose(one, two, rtol=1e-15)


def test_short_trial_reports_trial_id():
    with pytest.raises(InputError, match="t1"):
        extract_band_features(_record(np.ones(200)))


def test_signal_record_invariants():
    with pytest.raises(InputError):
        SignalRecord(FS, {"a": np.ones(10), "b": np.ones(9)})
    with pytest.raises(InputError):
        SignalRecord(0.0, {"a": np.ones(10)})
    with pytest.raises(InputError):
        SignalRecord(FS, {"a": np.ones(1)})


# --- standardizer -----------------------------------------------------------


def _bpv(*x):
    return BandPowerVector.from_array(x)


def test_fit_single_vector_has_zero_std():
    s = fit_standardizer([_bpv(1, 2, 3, 4)])
    assert np.all(s.std_dev == 0)


def test_fit_two_symmetric_points():
    s = fit_standardizer([_bpv(0, 0, 0, 0), _bpv(2, 2, 2, 2)])
    np.testing.assert_array_equal(s.mean, [1, 1, 1, 1])
    np.testing.assert_array_equal(s.std_dev, [1, 1, 1, 1])


def test_fit_empty_list():
    with pytest.raises(InputError):
        fit_standardizer([])


def test_apply_examples():
    s = StandardizerStats(np.ones(4), 2 * np.ones(4))
    assert apply_standardizer(s, _bpv(3, 3, 3, 3)).as_array().tolist() == [1, 1, 1, 1]
    assert apply_standardizer(s, _bpv(1, 1, 1, 1)).as_array().tolist() == [0, 0, 0, 0]
    s0 = StandardizerStats(np.ones(4), np.array([0.0, 1, 1, 1]))
    assert apply_standardizer(s0, _bpv(9, 1, 1, 1)).delta == 0.0


def test_double_standardization_is_an_error():
    s = StandardizerStats(np.zeros(4), np.ones(4))
    z = apply_standardizer(s, _bpv(1, 2, 3, 4))
    assert z.standardized
    with pytest.raises(StandardizationError):
        apply_standardizer(s, z)
    with pytest.raises(StandardizationError):
        fit_standardizer([z])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_standardize_then_refit_is_unit(seed):
    rng = np.random.default_rng(seed)
    raw = [BandPowerVector.from_array(v) for v in rng.lognormal(0, 1, size=(100, 4))]
    stats = fit_standardizer(raw)
    z = np.stack([apply_standardizer(stats, v).as_array() for v in raw])
    refit = fit_standardizer([BandPowerVector.from_array(r) for r in z])
    assert np.all(np.abs(refit.mean) < 1e-9)
    assert np.all(np.abs(refit.std_dev - 1) < 1e-9)
