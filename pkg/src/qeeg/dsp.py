"""Spectral preprocessing: Butterworth bandpass, zero-phase filtering, PSD
estimation (Welch and whole-record FFT), band power and standardization.

All functions are pure. Arrays are float64 numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy import signal as _sig


class ConfigError(ValueError):
    """Invalid filter / estimator configuration."""


class InputError(ValueError):
    """Data that cannot be processed with the given configuration."""


class StandardizationError(RuntimeError):
    """Standardizing an already standardized vector, or similar misuse."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass
class SignalRecord:
    sample_rate_hz: float
    channels: dict[str, np.ndarray]
    trial_id: str = "0"
    label: int | None = None

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise InputError(f"trial {self.trial_id}: sample rate must be positive")
        if not self.channels:
            raise InputError(f"trial {self.trial_id}: no channels")
        self.channels = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) != 1:
            raise InputError(f"trial {self.trial_id}: channels have unequal lengths {sorted(lengths)}")
        if lengths.pop() < 2:
            raise InputError(f"trial {self.trial_id}: fewer than 2 samples")

    @property
    def n_samples(self) -> int:
        return len(next(iter(self.channels.values())))


@dataclass(frozen=True)
class FilterSpec:
    low_cut_hz: float = 0.5
    high_cut_hz: float = 45.0
    order: int = 5
    sample_rate_hz: float = 250.0

    def validate(self) -> None:
        nyq = self.sample_rate_hz / 2
        if self.order < 1:
            raise ConfigError(f"filter order must be >= 1, got {self.order}")
        if not 0 < self.low_cut_hz < self.high_cut_hz:
            raise ConfigError(
                f"invalid band: low cut {self.low_cut_hz} Hz must be > 0 and below "
                f"high cut {self.high_cut_hz} Hz"
            )
        if not self.high_cut_hz < nyq:
            raise ConfigError(
                f"high cut {self.high_cut_hz} Hz must be below Nyquist ({nyq} Hz)"
            )


@dataclass(frozen=True)
class IIRCoefficients:
    numerator: np.ndarray
    denominator: np.ndarray

    def poles(self) -> np.ndarray:
        return np.roots(self.denominator)

    def is_stable(self, margin: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1 - margin))

    def frequency_response(self, freqs_hz, sample_rate_hz: float) -> np.ndarray:
        """Complex H(e^{jw}) at the given frequencies."""
        w = 2 * np.pi * np.asarray(freqs_hz, dtype=float) / sample_rate_hz
        zinv = np.exp(-1j * w)
        return np.polyval(self.numerator[::-1], zinv) / np.polyval(self.denominator[::-1], zinv)


@dataclass(frozen=True)
class WelchConfig:
    segment_length: int = 256
    overlap_fraction: float = 0.5
    window_kind: Literal["hann"] = "hann"
    detrend: Literal["constant", "none"] = "constant"

    @property
    def overlap_samples(self) -> int:
        return int(np.floor(self.segment_length * self.overlap_fraction))

    def validate(self) -> None:
        if self.segment_length < 8:
            raise ConfigError(f"segment length must be >= 8, got {self.segment_length}")
        if not 0 <= self.overlap_fraction < 1:
            raise ConfigError(f"overlap fraction must be in [0, 1), got {self.overlap_fraction}")
        if self.window_kind != "hann":
            raise ConfigError(f"unsupported window {self.window_kind!r}")
        if self.detrend not in ("constant", "none"):
            raise ConfigError(f"unsupported detrend {self.detrend!r}")


@dataclass(frozen=True)
class PsdEstimate:
    frequencies_hz: np.ndarray
    power_density: np.ndarray
    resolution_hz: float

    def total_power(self) -> float:
        return float(np.sum(self.power_density) * self.resolution_hz)


@dataclass(frozen=True)
class FrequencyBand:
    name: str
    low_hz: float
    high_hz: float


BANDS: tuple[FrequencyBand, ...] = (
    FrequencyBand("delta", 0.5, 4.0),
    FrequencyBand("theta", 4.0, 8.0),
    FrequencyBand("alpha", 8.0, 13.0),
    FrequencyBand("beta", 13.0, 30.0),
)
BAND_NAMES = tuple(b.name for b in BANDS)


@dataclass(frozen=True)
class BandPowerVector:
    delta: float
    theta: float
    alpha: float
    beta: float
    standardized: bool = False

    @classmethod
    def from_array(cls, values: Sequence[float], standardized: bool = False) -> "BandPowerVector":
        d, t, a, b = (float(v) for v in values)
        return cls(d, t, a, b, standardized)

    def as_array(self) -> np.ndarray:
        return np.array([self.delta, self.theta, self.alpha, self.beta], dtype=float)


@dataclass(frozen=True)
class StandardizerStats:
    mean: np.ndarray = field(default_factory=lambda: np.zeros(4))
    std_dev: np.ndarray = field(default_factory=lambda: np.ones(4))


# ---------------------------------------------------------------------------
# Filter design
# ---------------------------------------------------------------------------


def _butter_prototype_poles(order: int) -> np.ndarray:
    k = np.arange(order)
    # left half-plane roots of the Butterworth polynomial, unit cutoff
    return -np.exp(1j * np.pi * (2 * k - order + 1) / (2 * order))


def design_butterworth_bandpass(spec: FilterSpec) -> IIRCoefficients:
    """Digital Butterworth bandpass of transfer-function order ``2 * spec.order``.

    Analog prototype -> lowpass-to-bandpass -> bilinear transform, with the
    band edges pre-warped so the -3 dB points land exactly on the cut-offs.
    """
    spec.validate()
    fs = float(spec.sample_rate_hz)
    n = spec.order
    fs2 = 2.0 * fs
    w_lo = fs2 * np.tan(np.pi * spec.low_cut_hz / fs)
    w_hi = fs2 * np.tan(np.pi * spec.high_cut_hz / fs)
    bw = w_hi - w_lo
    w0 = np.sqrt(w_lo * w_hi)

    p_lp = _butter_prototype_poles(n)
    half = p_lp * bw / 2
    disc = np.sqrt(half**2 - w0**2)
    p_bp = np.concatenate([half + disc, half - disc])
    z_bp = np.zeros(n, dtype=complex)
    k_bp = bw**n

    z_d = (fs2 + z_bp) / (fs2 - z_bp)
    p_d = (fs2 + p_bp) / (fs2 - p_bp)
    # the n analog zeros at infinity map to Nyquist
    z_d = np.concatenate([z_d, -np.ones(len(p_bp) - len(z_bp))])
    k_d = k_bp * np.real(np.prod(fs2 - z_bp) / np.prod(fs2 - p_bp))

    b = np.real(k_d * np.poly(z_d))
    a = np.real(np.poly(p_d))
    b, a = b / a[0], a / a[0]
    a[0] = 1.0
    return IIRCoefficients(b, a)


# ---------------------------------------------------------------------------
# Zero-phase filtering
# ---------------------------------------------------------------------------


def _pad_length(coeffs: IIRCoefficients) -> int:
    return 3 * (max(len(coeffs.numerator), len(coeffs.denominator)) - 1)


def apply_zero_phase_filter(coeffs: IIRCoefficients, samples) -> np.ndarray:
    """Forward-backward IIR filtering with odd-reflection edge extension.

    Both passes start from the filter's step-response steady state scaled to
    the first sample of that pass, which suppresses start-up transients.
    """
    x = np.asarray(samples, dtype=float)
    b, a = coeffs.numerator, coeffs.denominator
    padlen = _pad_length(coeffs)
    if x.ndim != 1 or len(x) <= padlen:
        raise InputError(
            f"signal of length {len(x)} too short for zero-phase filtering "
            f"(needs more than {padlen} samples)"
        )
    left = 2 * x[0] - x[padlen:0:-1]
    right = 2 * x[-1] - x[-2 : -padlen - 2 : -1]
    ext = np.concatenate([left, x, right])

    zi = _sig.lfilter_zi(b, a)
    y, _ = _sig.lfilter(b, a, ext, zi=zi * ext[0])
    y = y[::-1]
    y, _ = _sig.lfilter(b, a, y, zi=zi * y[0])
    y = y[::-1]
    return y[padlen:-padlen].copy()


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------


def _one_sided_density(spectrum: np.ndarray, n: int, fs: float, window_power: float) -> np.ndarray:
    p = np.abs(spectrum) ** 2 / (fs * window_power)
    if n % 2 == 0:
        p[..., 1:-1] *= 2
    else:
        p[..., 1:] *= 2
    return p


def welch_psd(samples, sample_rate_hz: float, cfg: WelchConfig = WelchConfig()) -> PsdEstimate:
    """Averaged Hann-windowed periodogram, one-sided density in units^2/Hz."""
    cfg.validate()
    x = np.asarray(samples, dtype=float)
    nseg = cfg.segment_length
    if len(x) < nseg:
        raise InputError(
            f"signal has {len(x)} samples, fewer than one Welch segment ({nseg})"
        )
    step = nseg - cfg.overlap_samples
    starts = np.arange(0, len(x) - nseg + 1, step)
    segs = np.stack([x[s : s + nseg] for s in starts])
    if cfg.detrend == "constant":
        segs = segs - segs.mean(axis=1, keepdims=True)
    # periodic Hann, as used for spectral analysis
    win = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(nseg) / nseg)
    spec = np.fft.rfft(segs * win, axis=1)
    dens = _one_sided_density(spec, nseg, sample_rate_hz, float(np.sum(win**2)))
    return PsdEstimate(
        frequencies_hz=np.fft.rfftfreq(nseg, d=1.0 / sample_rate_hz),
        power_density=dens.mean(axis=0),
        resolution_hz=sample_rate_hz / nseg,
    )


def fft_power_spectrum(samples, sample_rate_hz: float) -> PsdEstimate:
    """Whole-record periodogram of the mean-removed signal.

    Scaled exactly like :func:`welch_psd` with a rectangular window, so that
    ``band_power`` returns comparable numbers for both estimators.
    """
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise InputError("need at least 2 samples for an FFT spectrum")
    n = len(x)
    spec = np.fft.rfft(x - x.mean())
    return PsdEstimate(
        frequencies_hz=np.fft.rfftfreq(n, d=1.0 / sample_rate_hz),
        power_density=_one_sided_density(spec, n, sample_rate_hz, float(n)),
        resolution_hz=sample_rate_hz / n,
    )


def band_power(psd: PsdEstimate, band: FrequencyBand) -> float:
    f = psd.frequencies_hz
    if band.low_hz < 0 or band.high_hz > f[-1] + psd.resolution_hz:
        raise InputError(
            f"band {band.name} [{band.low_hz}, {band.high_hz}) Hz outside spectrum range [0, {f[-1]}] Hz"
        )
    mask = (f >= band.low_hz) & (f < band.high_hz)
    if not mask.any():
        raise InputError(
            f"insufficient resolution: no bins of width {psd.resolution_hz:.4g} Hz fall "
            f"in band {band.name} [{band.low_hz}, {band.high_hz}) Hz"
        )
    return float(np.sum(psd.power_density[mask]) * psd.resolution_hz)


def band_powers(psd: PsdEstimate, bands: Sequence[FrequencyBand] = BANDS) -> np.ndarray:
    return np.array([band_power(psd, b) for b in bands])


def extract_band_features(
    record: SignalRecord,
    filter_spec: FilterSpec | None = None,
    welch_cfg: WelchConfig = WelchConfig(),
    method: Literal["welch", "fft"] = "welch",
    reduce: Literal["mean"] = "mean",
) -> BandPowerVector:
    """Filter every channel, estimate band powers per channel, then average
    across channels."""
    if filter_spec is None:
        filter_spec = FilterSpec(sample_rate_hz=record.sample_rate_hz)
    if reduce != "mean":
        raise ConfigError(f"unknown channel reduction {reduce!r}")
    if method not in ("welch", "fft"):
        raise ConfigError(f"unknown spectral method {method!r}")
    fs = record.sample_rate_hz
    try:
        coeffs = design_butterworth_bandpass(filter_spec)
        per_channel = []
        for samples in record.channels.values():
            y = apply_zero_phase_filter(coeffs, samples)
            psd = welch_psd(y, fs, welch_cfg) if method == "welch" else fft_power_spectrum(y, fs)
            per_channel.append(band_powers(psd))
    except (InputError, ConfigError) as exc:
        raise type(exc)(f"trial {record.trial_id}: {exc}") from exc
    return BandPowerVector.from_array(np.mean(per_channel, axis=0))


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------


def fit_standardizer(features: Sequence[BandPowerVector]) -> StandardizerStats:
    if len(features) == 0:
        raise InputError("cannot fit a standardizer on an empty feature list")
    if any(f.standardized for f in features):
        raise StandardizationError("standardizer must be fit on raw (unstandardized) features")
    x = np.stack([f.as_array() for f in features])
    return StandardizerStats(mean=x.mean(axis=0), std_dev=x.std(axis=0))


def standardize_array(stats: StandardizerStats, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    sd = stats.std_dev
    safe = np.where(sd > 0, sd, 1.0)
    return np.where(sd > 0, (x - stats.mean) / safe, 0.0)


def apply_standardizer(stats: StandardizerStats, v: BandPowerVector) -> BandPowerVector:
    if v.standardized:
        raise StandardizationError("vector is already standardized")
    return BandPowerVector.from_array(standardize_array(stats, v.as_array()), standardized=True)
