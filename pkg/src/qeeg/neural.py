"""Dense ReLU/softmax classification head, cross-entropy and Adam."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

PROB_FLOOR = 1e-12


class ShapeError(ValueError):
    pass


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str = "relu"

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int = 4
    hidden: tuple[int, ...] = (64, 32, 16)
    n_classes: int = 2

    def dims(self) -> list[int]:
        return [self.input_dim, *self.hidden, self.n_classes]


@dataclass
class AdamState:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: list[np.ndarray] = field(default_factory=list)
    second_moment: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_parameters(cls, params, **hyper) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(p, dtype=float) for p in params],
            second_moment=[np.zeros_like(p, dtype=float) for p in params],
            **hyper,
        )


def init_network(spec: NetworkSpec = NetworkSpec(), seed: int = 0) -> list[DenseLayer]:
    """Glorot-uniform weights, zero biases; ReLU hidden layers, softmax output."""
    dims = spec.dims()
    if min(dims) < 1:
        raise ShapeError(f"all layer sizes must be >= 1, got {dims}")
    rng = np.random.default_rng(seed)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        act = "softmax" if i == len(dims) - 2 else "relu"
        layers.append(DenseLayer(w, np.zeros(fan_out), act))
    return layers


def softmax(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - np.max(logits))
    return e / np.sum(e)


def _activate(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(pre, 0.0)
    if kind == "softmax":
        return softmax(pre)
    if kind == "none":
        return pre
    raise ValueError(f"unknown activation {kind!r}")


def forward_network(layers: list[DenseLayer], x) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Returns output probabilities and per-layer (input, pre-activation) caches."""
    a = np.asarray(x, dtype=float)
    caches = []
    for layer in layers:
        if a.shape != (layer.weights.shape[1],):
            raise ShapeError(f"layer expects input of size {layer.weights.shape[1]}, got shape {a.shape}")
        pre = layer.weights @ a + layer.biases
        caches.append((a, pre))
        a = _activate(pre, layer.activation)
    return a, caches


def cross_entropy(probabilities, label: int) -> float:
    p = np.asarray(probabilities, dtype=float)
    if not 0 <= label < len(p):
        raise ShapeError(f"label {label} out of range for {len(p)} classes")
    return float(-np.log(max(p[label], PROB_FLOOR)))


def backward_network(layers: list[DenseLayer], caches, label: int):
    """Gradients of cross-entropy w.r.t. every (W, b) and the network input.

    The last layer must be softmax; its gradient is fused as p - onehot.
    """
    if len(caches) != len(layers):
        raise ShapeError("caches do not belong to this network")
    *_, (_, last_pre) = caches
    if layers[-1].activation != "softmax":
        raise ValueError("backward_network expects a softmax output layer")
    p = softmax(last_pre)
    if not 0 <= label < len(p):
        raise ShapeError(f"label {label} out of range for {len(p)} classes")
    delta = p.copy()
    delta[label] -= 1.0
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(layers)  # type: ignore[list-item]
    for i in range(len(layers) - 1, -1, -1):
        a_in, _ = caches[i]
        w = layers[i].weights
        if a_in.shape != (w.shape[1],):
            raise ShapeError("stale cache: input shape does not match layer weights")
        grads[i] = (np.outer(delta, a_in), delta.copy())
        upstream = w.T @ delta
        if i > 0:
            _, prev_pre = caches[i - 1]
            act = layers[i - 1].activation
            if act == "relu":
                upstream = upstream * (prev_pre > 0)
            elif act != "none":
                raise ValueError(f"cannot backpropagate through hidden {act!r}")
        delta = upstream
    return grads, delta


def adam_step(state: AdamState, parameters: list[np.ndarray], gradients: list[np.ndarray]):
    """One bias-corrected Adam update; returns (new parameters, new state)."""
    if len(parameters) != len(gradients) or len(parameters) != len(state.first_moment):
        raise ShapeError("parameter, gradient and moment lists differ in length")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    new_params, m_new, v_new = [], [], []
    for p, g, m, v in zip(parameters, gradients, state.first_moment, state.second_moment):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"shape mismatch: param {p.shape}, grad {g.shape}, moment {m.shape}")
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        new_params.append(p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon))
        m_new.append(m)
        v_new.append(v)
    return new_params, replace(state, step=t, first_moment=m_new, second_moment=v_new)
