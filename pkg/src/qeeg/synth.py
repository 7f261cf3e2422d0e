"""Synthetic multichannel EEG with class-dependent band tones."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import InputError, SignalRecord

# band -> (center frequency Hz, amplitude)
Profile = dict[str, tuple[float, float]]

_COMMON = {"delta": (2.0, 2.0), "theta": (6.0, 1.5)}
DEFAULT_PROFILES: tuple[Profile, ...] = (
    {**_COMMON, "alpha": (10.0, 3.0), "beta": (20.0, 1.0)},
    {**_COMMON, "alpha": (10.0, 1.0), "beta": (20.0, 3.0)},
)


@dataclass
class SynthSpec:
    n_trials_per_class: int = 100
    n_classes: int = 2
    duration_s: float = 4.0
    sample_rate_hz: float = 250.0
    n_channels: int = 2
    class_profiles: tuple[Profile, ...] = field(default=DEFAULT_PROFILES)
    noise_sigma: float = 1.0
    seed: int = 7

    def validate(self) -> None:
        if self.n_classes < 1 or self.n_trials_per_class < 1 or self.n_channels < 1:
            raise InputError("trial, class and channel counts must be positive")
        if len(self.class_profiles) < self.n_classes:
            raise InputError(
                f"{self.n_classes} classes requested but only {len(self.class_profiles)} profiles given"
            )
        profiles = self.class_profiles[: self.n_classes]
        keys = [tuple(sorted(p.items())) for p in profiles]
        if len(set(keys)) != len(keys):
            raise InputError("class profiles must be distinct")
        nyq = self.sample_rate_hz / 2
        for p in profiles:
            for band, (freq, _) in p.items():
                if not 0 <= freq < nyq:
                    raise InputError(f"{band} tone at {freq} Hz is not below Nyquist ({nyq} Hz)")
        if self.noise_sigma < 0:
            raise InputError("noise_sigma must be >= 0")


def generate_synthetic_eeg(spec: SynthSpec = SynthSpec()) -> tuple[list[SignalRecord], list[int]]:
    """Sum of per-band sinusoids with random phases plus white noise.

    Trials are emitted class-interleaved (0, 1, ..., 0, 1, ...). Each channel
    gets its own phases and noise. Deterministic given ``spec.seed``.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    records, labels = [], []
    trial = 0
    for _ in range(spec.n_trials_per_class):
        for label in range(spec.n_classes):
            profile = spec.class_profiles[label]
            channels = {}
            for ch in range(spec.n_channels):
                x = np.zeros(n)
                for freq, amp in profile.values():
                    x += amp * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
                x += rng.normal(0.0, spec.noise_sigma, size=n) if spec.noise_sigma else 0.0
                channels[f"ch{ch}"] = x
            records.append(SignalRecord(spec.sample_rate_hz, channels, trial_id=str(trial), label=label))
            labels.append(label)
            trial += 1
    return records, labels
