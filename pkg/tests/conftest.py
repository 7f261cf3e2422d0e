import numpy as np
import pytest

from qeeg.dsp import extract_band_features
from qeeg.synth import SynthSpec, generate_synthetic_eeg


@pytest.fixture(scope="session")
def small_features():
    """Raw band powers and labels for 30 synthetic trials per class."""
    records, labels = generate_synthetic_eeg(SynthSpec(n_trials_per_class=30, duration_s=2.0, seed=11))
    x = np.array([extract_band_features(r).as_array() for r in records])
    return x, np.array(labels)


@pytest.fixture(scope="session")
def synth_features():
    """Default synthetic set: 100 trials per class, seed 7."""
    records, labels = generate_synthetic_eeg(SynthSpec())
    x = np.array([extract_band_features(r).as_array() for r in records])
    return x, np.array(labels)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
