"""Flat pipeline configuration with one key per tunable setting."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace

from .dsp import ConfigError, FilterSpec, WelchConfig
from .hybrid import TrainingConfig
from .qcircuit import AnsatzSpec


class UnknownKeyError(ConfigError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    # preprocessing
    sample_rate_hz: float = 250.0
    low_cut_hz: float = 0.5
    high_cut_hz: float = 45.0
    filter_order: int = 5
    segment_length: int = 256
    overlap_fraction: float = 0.5
    method: str = "welch"
    # quantum circuit
    n_qubits: int = 4
    depth: int = 3
    entanglement: str = "all_pairs"
    # classical head
    hidden: tuple[int, ...] = (64, 32, 16)
    n_classes: int = 2
    # training
    learning_rate: float = 0.001
    batch_size: int = 32
    epochs: int = 20
    seed: int = 0
    shuffle: bool = True
    train_fraction: float = 0.8
    threads: int = 1

    def validate(self) -> None:
        if self.method not in ("welch", "fft"):
            raise ConfigError(f"method must be 'welch' or 'fft', got {self.method!r}")
        if self.n_qubits != 4:
            raise ConfigError("n_qubits must be 4: one qubit per band-power feature")
        if self.depth < 1:
            raise ConfigError("depth must be >= 1")
        if self.entanglement not in ("all_pairs", "ring"):
            raise ConfigError(f"unknown entanglement {self.entanglement!r}")
        if self.n_classes < 2:
            raise ConfigError("n_classes must be >= 2")
        self.filter_spec().validate()
        self.welch_config().validate()
        self.training_config().validate()

    def filter_spec(self, sample_rate_hz: float | None = None) -> FilterSpec:
        return FilterSpec(self.low_cut_hz, self.high_cut_hz, self.filter_order,
                          sample_rate_hz or self.sample_rate_hz)

    def welch_config(self) -> WelchConfig:
        return WelchConfig(self.segment_length, self.overlap_fraction)

    def ansatz_spec(self) -> AnsatzSpec:
        return AnsatzSpec(self.n_qubits, self.depth, self.entanglement)

    def training_config(self) -> TrainingConfig:
        return TrainingConfig(
            learning_rate=self.learning_rate, batch_size=self.batch_size, epochs=self.epochs,
            seed=self.seed, shuffle=self.shuffle, train_fraction=self.train_fraction,
            threads=self.threads,
        )

    def updated(self, **overrides) -> "PipelineConfig":
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise UnknownKeyError(f"unknown configuration key(s): {', '.join(unknown)}")
        if "hidden" in overrides:
            overrides["hidden"] = tuple(int(h) for h in overrides["hidden"])
        return replace(self, **overrides)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


def load_config(path) -> PipelineConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: configuration must be a flat JSON object")
    cfg = PipelineConfig().updated(**doc)
    cfg.validate()
    return cfg
