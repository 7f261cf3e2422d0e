"""Hybrid model: standardizer -> quantum feature circuit -> dense softmax head.

Quantum angles and dense weights share one Adam state. Quantum gradients
come from the parameter-shift rule driven by the head's input gradient.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import qcircuit as qc
from .dsp import BandPowerVector, StandardizerStats, fit_standardizer, standardize_array
from .evaluation import EvalReport, evaluate
from .neural import (
    AdamState,
    DenseLayer,
    NetworkSpec,
    adam_step,
    backward_network,
    cross_entropy,
    forward_network,
    init_network,
)

FORMAT_VERSION = "1"
QUANTUM_INIT_RANGE = 0.1


class ModelFormatError(ValueError):
    """Malformed or truncated model file."""


class ModelVersionError(ModelFormatError):
    pass


class ModelShapeError(ValueError):
    """Model components or data do not fit together."""


class TrainingConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.001
    batch_size: int = 32
    epochs: int = 20
    seed: int = 0
    shuffle: bool = True
    train_fraction: float = 0.8
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    threads: int = 1

    def validate(self) -> None:
        if not 0 < self.train_fraction < 1:
            raise TrainingConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.batch_size < 1:
            raise TrainingConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise TrainingConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise TrainingConfigError("learning_rate must be positive")
        if self.threads < 1:
            raise TrainingConfigError("threads must be >= 1")


@dataclass
class LabeledDataset:
    features: np.ndarray  # (n, 4) raw band powers
    labels: np.ndarray  # (n,)
    class_names: list[str] | None = None

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(
            [f.as_array() if isinstance(f, BandPowerVector) else f for f in self.features], dtype=float
        ))
        self.labels = np.asarray(self.labels, dtype=int)
        if len(self.features) != len(self.labels):
            raise ModelShapeError(f"{len(self.features)} feature rows vs {len(self.labels)} labels")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.features[idx], self.labels[idx], self.class_names)


@dataclass
class HybridModel:
    encoding: qc.EncodingSpec
    ansatz: qc.AnsatzSpec
    quantum_params: np.ndarray
    layers: list[DenseLayer]
    standardizer: StandardizerStats
    n_classes: int
    version: str = FORMAT_VERSION
    network: NetworkSpec = field(default_factory=NetworkSpec)
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def check(self) -> None:
        if self.ansatz.n_qubits != self.encoding.n_features:
            raise ModelShapeError("encoding feature count differs from qubit count")
        if self.layers[0].weights.shape[1] != self.ansatz.n_qubits:
            raise ModelShapeError(
                f"dense head expects {self.layers[0].weights.shape[1]} inputs, "
                f"circuit produces {self.ansatz.n_qubits}"
            )
        if self.layers[-1].weights.shape[0] != self.n_classes:
            raise ModelShapeError("output layer size differs from n_classes")
        if self.quantum_params.shape != (self.ansatz.n_params,):
            raise ModelShapeError("quantum parameter count does not match ansatz")
        for prev, nxt in zip(self.layers[:-1], self.layers[1:]):
            if prev.weights.shape[0] != nxt.weights.shape[1]:
                raise ModelShapeError("consecutive dense layers have inconsistent shapes")

    # flat parameter list in a fixed order: quantum angles, then W0, b0, W1, b1, ...
    def parameters(self) -> list[np.ndarray]:
        out = [self.quantum_params]
        for layer in self.layers:
            out += [layer.weights, layer.biases]
        return out

    def set_parameters(self, params: Sequence[np.ndarray]) -> None:
        self.quantum_params = params[0]
        for i, layer in enumerate(self.layers):
            layer.weights, layer.biases = params[1 + 2 * i], params[2 + 2 * i]


def new_model(
    standardizer: StandardizerStats,
    ansatz: qc.AnsatzSpec = qc.AnsatzSpec(),
    network: NetworkSpec | None = None,
    seed: int = 0,
    training: TrainingConfig | None = None,
) -> HybridModel:
    network = network or NetworkSpec(input_dim=ansatz.n_qubits)
    rng = np.random.default_rng([seed, 1])
    qparams = rng.uniform(-QUANTUM_INIT_RANGE, QUANTUM_INIT_RANGE, size=ansatz.n_params)
    model = HybridModel(
        encoding=qc.EncodingSpec(n_features=ansatz.n_qubits),
        ansatz=ansatz,
        quantum_params=qparams,
        layers=init_network(network, seed),
        standardizer=standardizer,
        n_classes=network.n_classes,
        network=network,
        training=training or TrainingConfig(seed=seed),
    )
    model.check()
    return model


def _raw(x) -> np.ndarray:
    if isinstance(x, BandPowerVector):
        if x.standardized:
            raise ValueError("hybrid model takes raw band powers, got a standardized vector")
        return x.as_array()
    return np.asarray(x, dtype=float)


def hybrid_forward(model: HybridModel, raw_features) -> np.ndarray:
    z = standardize_array(model.standardizer, _raw(raw_features))
    try:
        q = qc.quantum_forward(z, model.quantum_params, model.ansatz)
    except qc.CircuitError as exc:
        raise ModelShapeError(f"quantum stage: {exc}") from exc
    try:
        probs, _ = forward_network(model.layers, q)
    except ValueError as exc:
        raise ModelShapeError(f"classical stage: {exc}") from exc
    return probs


def predict_proba(model: HybridModel, features) -> np.ndarray:
    """Row-wise ``hybrid_forward`` with the quantum stage evaluated in one batch."""
    z = standardize_array(model.standardizer, np.atleast_2d(np.asarray(features, dtype=float)))
    q = qc.batch_forward(z, model.quantum_params, model.ansatz)
    return np.stack([forward_network(model.layers, row)[0] for row in q])


def predict(model: HybridModel, raw_features) -> int:
    # np.argmax returns the first maximum, i.e. ties go to the lowest class
    return int(np.argmax(hybrid_forward(model, raw_features)))


def _sample_terms(model: HybridModel, q: np.ndarray, jac: np.ndarray, label: int):
    probs, caches = forward_network(model.layers, q)
    grads, input_grad = backward_network(model.layers, caches, label)
    flat = [input_grad @ jac]
    for gw, gb in grads:
        flat += [gw, gb]
    return cross_entropy(probs, label), flat


def loss_and_gradients(model: HybridModel, features, labels, threads: int = 1):
    """Mean cross-entropy and its gradient w.r.t. ``model.parameters()``.

    Per-sample terms are accumulated in sample order, so the result does not
    depend on ``threads``.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels, dtype=int)
    if len(y) == 0:
        raise ValueError("empty batch")
    z = standardize_array(model.standardizer, x)

    def chunk_terms(idx):
        q, jac = qc.batch_forward_and_jacobian(z[idx], model.quantum_params, model.ansatz)
        return [_sample_terms(model, q[k], jac[k], int(y[i])) for k, i in enumerate(idx)]

    if threads > 1:
        chunks = np.array_split(np.arange(len(y)), threads)
        with ThreadPoolExecutor(threads) as pool:
            terms = [t for part in pool.map(chunk_terms, chunks) for t in part]
    else:
        terms = chunk_terms(np.arange(len(y)))
    loss = 0.0
    total = [np.zeros_like(p, dtype=float) for p in model.parameters()]
    for sample_loss, grads in terms:
        loss += sample_loss
        for acc, g in zip(total, grads):
            acc += g
    n = len(y)
    return loss / n, total[0] / n, [g / n for g in total[1:]]


def stratified_split(labels, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per class, a seeded permutation with round(train_fraction * count) going
    to train (at least one sample on each side when the class has two or more)."""
    y = np.asarray(labels, dtype=int)
    rng = np.random.default_rng([seed, 2])
    train, test = [], []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        k = int(round(train_fraction * len(idx)))
        if len(idx) >= 2:
            k = min(max(k, 1), len(idx) - 1)
        train.append(idx[:k])
        test.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


@dataclass
class TrainReport:
    train_loss: list[float]
    train_accuracy: list[float]
    test_report: EvalReport | None
    wall_seconds: float
    seed: int
    n_train: int = 0
    n_test: int = 0

    def to_text(self) -> str:
        lines = [f"seed {self.seed}  train {self.n_train}  test {self.n_test}  wall {self.wall_seconds:.2f}s"]
        for i, (l, a) in enumerate(zip(self.train_loss, self.train_accuracy), 1):
            lines.append(f"epoch {i:3d}  loss {l:.6f}  acc {a:.4f}")
        if self.test_report is not None:
            r = self.test_report
            auc = "n/a" if r.auc is None else f"{r.auc:.4f}"
            lines.append(
                f"test  acc {r.accuracy:.4f}  precision {r.precision:.4f}  recall {r.recall:.4f}  "
                f"f1 {r.f1:.4f}  auc {auc}  mae {r.mae:.4f}"
            )
        return "\n".join(lines) + "\n"


def fit(
    dataset: LabeledDataset,
    cfg: TrainingConfig = TrainingConfig(),
    ansatz: qc.AnsatzSpec = qc.AnsatzSpec(),
    n_classes: int | None = None,
    hidden: tuple[int, ...] = (64, 32, 16),
) -> tuple[HybridModel, TrainReport]:
    cfg.validate()
    y = dataset.labels
    n_classes = n_classes or int(y.max()) + 1
    if len(np.unique(y)) < 2:
        raise TrainingConfigError("dataset needs at least two classes")
    if y.min() < 0 or y.max() >= n_classes:
        raise ModelShapeError(f"labels outside [0, {n_classes})")
    if len(dataset) < cfg.batch_size:
        raise TrainingConfigError(f"dataset has {len(dataset)} samples, fewer than batch size {cfg.batch_size}")

    t0 = time.perf_counter()
    train_idx, test_idx = stratified_split(y, cfg.train_fraction, cfg.seed)
    train = dataset.subset(train_idx)
    stats = fit_standardizer([BandPowerVector.from_array(r) for r in train.features])
    network = NetworkSpec(ansatz.n_qubits, tuple(hidden), n_classes)
    model = new_model(stats, ansatz, network, cfg.seed, cfg)
    adam = AdamState.for_parameters(
        model.parameters(), learning_rate=cfg.learning_rate,
        beta1=cfg.beta1, beta2=cfg.beta2, epsilon=cfg.epsilon,
    )
    rng = np.random.default_rng([cfg.seed, 3])
    losses, accs = [], []
    n = len(train)
    for _ in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, gq, gc = loss_and_gradients(model, train.features[batch], train.labels[batch], cfg.threads)
            params, adam = adam_step(adam, model.parameters(), [gq, *gc])
            model.set_parameters(params)
            epoch_loss += loss * len(batch)
        losses.append(epoch_loss / n)
        preds = np.argmax(predict_proba(model, train.features), axis=1)
        accs.append(float(np.mean(preds == train.labels)))

    test_report = None
    if len(test_idx):
        test = dataset.subset(test_idx)
        test_report = evaluate(predict_proba(model, test.features), test.labels)
    report = TrainReport(losses, accs, test_report, time.perf_counter() - t0, cfg.seed, n, len(test_idx))
    return model, report


# ---------------------------------------------------------------------------
# Persistence: versioned JSON, every float written with 17 significant digits
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _dump(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(k)}: {_dump(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_dump(v) for v in obj) + "]"
        inner = [f"{pad}  {_dump(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(inner) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    return _fmt(obj)


def model_to_dict(model: HybridModel) -> dict:
    t = model.training
    return {
        "format_version": model.version,
        "encoding": {"scheme": model.encoding.scheme, "n_features": model.encoding.n_features},
        "ansatz": {
            "n_qubits": model.ansatz.n_qubits,
            "depth": model.ansatz.depth,
            "entanglement": model.ansatz.entanglement,
        },
        "network": {
            "input_dim": model.network.input_dim,
            "hidden": list(model.network.hidden),
            "n_classes": model.n_classes,
        },
        "training": {
            "learning_rate": t.learning_rate, "batch_size": t.batch_size, "epochs": t.epochs,
            "seed": t.seed, "shuffle": t.shuffle, "train_fraction": t.train_fraction,
        },
        "adam": {"beta1": t.beta1, "beta2": t.beta2, "epsilon": t.epsilon},
        "init": {"dense": "glorot_uniform", "quantum": f"uniform(-{QUANTUM_INIT_RANGE}, {QUANTUM_INIT_RANGE})"},
        "standardizer": {"mean": model.standardizer.mean, "std_dev": model.standardizer.std_dev},
        "quantum_params": model.quantum_params,
        "layers": [
            {
                "activation": layer.activation,
                "shape": list(layer.weights.shape),
                "weights_row_major": layer.weights.ravel(),
                "biases": layer.biases,
            }
            for layer in model.layers
        ],
    }


def save_model(model: HybridModel, path) -> None:
    Path(path).write_text(_dump(model_to_dict(model)) + "\n")


def _array(d: dict, key: str, shape=None) -> np.ndarray:
    arr = np.asarray(d[key], dtype=float)
    if shape is not None and arr.shape != tuple(shape):
        raise ModelShapeError(f"{key}: expected shape {tuple(shape)}, got {arr.shape}")
    return arr


def model_from_dict(d: dict) -> HybridModel:
    if not isinstance(d, dict) or "format_version" not in d:
        raise ModelFormatError("model document has no format_version")
    if str(d["format_version"]) != FORMAT_VERSION:
        raise ModelVersionError(
            f"unsupported model format version {d['format_version']!r} (expected {FORMAT_VERSION})"
        )
    try:
        a = d["ansatz"]
        ansatz = qc.AnsatzSpec(int(a["n_qubits"]), int(a["depth"]), a["entanglement"])
        e = d["encoding"]
        encoding = qc.EncodingSpec(e["scheme"], int(e["n_features"]))
        nd = d["network"]
        network = NetworkSpec(int(nd["input_dim"]), tuple(int(h) for h in nd["hidden"]), int(nd["n_classes"]))
        tr, ad = d["training"], d["adam"]
        training = TrainingConfig(
            learning_rate=float(tr["learning_rate"]), batch_size=int(tr["batch_size"]),
            epochs=int(tr["epochs"]), seed=int(tr["seed"]), shuffle=bool(tr["shuffle"]),
            train_fraction=float(tr["train_fraction"]),
            beta1=float(ad["beta1"]), beta2=float(ad["beta2"]), epsilon=float(ad["epsilon"]),
        )
        st = d["standardizer"]
        stats = StandardizerStats(_array(st, "mean", (encoding.n_features,)), _array(st, "std_dev", (encoding.n_features,)))
        qparams = _array(d, "quantum_params", (ansatz.n_params,))
        layers = []
        for ld in d["layers"]:
            shape = tuple(int(s) for s in ld["shape"])
            w = _array(ld, "weights_row_major", (shape[0] * shape[1],)).reshape(shape)
            layers.append(DenseLayer(w, _array(ld, "biases", (shape[0],)), ld["activation"]))
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"model document missing or malformed field: {exc}") from exc
    model = HybridModel(encoding, ansatz, qparams, layers, stats, network.n_classes,
                        str(d["format_version"]), network, training)
    model.check()
    return model


def load_model(path) -> HybridModel:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a valid model document ({exc})") from exc
    return model_from_dict(d)
