"""Exact statevector simulation of the band-power encoding circuit and the
layered variational ansatz, with Pauli-Z readout and parameter-shift
gradients.

Qubit ``q`` is bit ``q`` of the amplitude index (little-endian).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .dsp import BandPowerVector, StandardizationError

MAX_QUBITS = 12
ROTATIONS = ("RX", "RY", "RZ")
CONTROLLED = ("CNOT", "CZ")
SHIFT = np.pi / 2


class CircuitError(ValueError):
    """Bad qubit index, gate kind or parameter shape."""


@dataclass(frozen=True)
class GateOp:
    kind: str
    target: int
    control: int | None = None
    angle: float | None = None
    param_index: int | None = None

    def __post_init__(self):
        if self.kind in ROTATIONS:
            if self.angle is None or self.control is not None:
                raise CircuitError(f"{self.kind} needs an angle and no control")
        elif self.kind in CONTROLLED:
            if self.control is None or self.angle is not None:
                raise CircuitError(f"{self.kind} needs a control and no angle")
            if self.control == self.target:
                raise CircuitError(f"{self.kind} control and target are both {self.target}")
        else:
            raise CircuitError(f"unknown gate kind {self.kind!r}")

    def __str__(self) -> str:
        if self.kind in ROTATIONS:
            return f"{self.kind} q{self.target} {self.angle:.4f}"
        return f"{self.kind} q{self.control} q{self.target}"


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))


@dataclass(frozen=True)
class EncodingSpec:
    scheme: Literal["amplitude_phase"] = "amplitude_phase"
    n_features: int = 4


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int = 4
    depth: int = 3
    entanglement: Literal["all_pairs", "ring"] = "all_pairs"

    @property
    def params_per_layer(self) -> int:
        return 2 * self.n_qubits

    @property
    def n_params(self) -> int:
        return self.depth * self.params_per_layer

    def entangling_pairs(self) -> list[tuple[int, int]]:
        n = self.n_qubits
        if self.entanglement == "all_pairs":
            return [(i, j) for i in range(n) for j in range(i + 1, n)]
        if self.entanglement == "ring":
            if n < 2:
                return []
            if n == 2:
                return [(0, 1)]
            return [(i, (i + 1) % n) for i in range(n)]
        raise CircuitError(f"unknown entanglement pattern {self.entanglement!r}")


# ---------------------------------------------------------------------------
# Kernels. ``amps`` has shape (rows, 2**n); every row is an independent state.
# ---------------------------------------------------------------------------


def _check_qubit(q: int, n: int) -> None:
    if not 0 <= q < n:
        raise CircuitError(f"qubit index {q} out of range for {n} qubits")


def _rotate(amps: np.ndarray, kind: str, q: int, n: int, angles) -> np.ndarray:
    rows = amps.shape[0]
    view = amps.reshape(rows, 2 ** (n - 1 - q), 2, 2**q)
    x0, x1 = view[:, :, 0, :], view[:, :, 1, :]
    theta = np.broadcast_to(np.asarray(angles, dtype=float), (rows,))[:, None, None]
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty_like(view)
    if kind == "RX":
        out[:, :, 0, :] = c * x0 - 1j * s * x1
        out[:, :, 1, :] = -1j * s * x0 + c * x1
    elif kind == "RY":
        out[:, :, 0, :] = c * x0 - s * x1
        out[:, :, 1, :] = s * x0 + c * x1
    elif kind == "RZ":
        out[:, :, 0, :] = (c - 1j * s) * x0
        out[:, :, 1, :] = (c + 1j * s) * x1
    else:
        raise CircuitError(f"{kind} is not a rotation")
    return out.reshape(rows, -1)


def _controlled(amps: np.ndarray, kind: str, control: int, target: int, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    on = ((idx >> control) & 1).astype(bool)
    if kind == "CNOT":
        perm = np.where(on, idx ^ (1 << target), idx)
        return amps[:, perm]
    if kind == "CZ":
        both = on & ((idx >> target) & 1).astype(bool)
        return amps * np.where(both, -1.0, 1.0)
    raise CircuitError(f"{kind} is not a controlled gate")


def _z_signs(n: int) -> np.ndarray:
    """(n, 2**n) table of +1/-1 eigenvalues of Z_q per basis index."""
    idx = np.arange(2**n)
    return 1.0 - 2.0 * ((idx[None, :] >> np.arange(n)[:, None]) & 1)


def _rows_z(amps: np.ndarray, n: int) -> np.ndarray:
    # elementwise product + sum keeps every row independent of the others
    probs = np.abs(amps) ** 2
    return np.sum(probs[:, None, :] * _z_signs(n)[None, :, :], axis=-1)


# ---------------------------------------------------------------------------
# Single-state operations
# ---------------------------------------------------------------------------


def zero_state(n_qubits: int) -> StateVector:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CircuitError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def apply_rotation(state: StateVector, kind: str, qubit: int, angle: float) -> StateVector:
    """Apply exp(-i * angle * P / 2), P in {X, Y, Z}, to one qubit."""
    _check_qubit(qubit, state.n_qubits)
    out = _rotate(state.amplitudes[None, :], kind, qubit, state.n_qubits, angle)
    return StateVector(state.n_qubits, out[0])


def apply_controlled(state: StateVector, kind: str, control: int, target: int) -> StateVector:
    _check_qubit(control, state.n_qubits)
    _check_qubit(target, state.n_qubits)
    if control == target:
        raise CircuitError("control and target must differ")
    out = _controlled(state.amplitudes[None, :], kind, control, target, state.n_qubits)
    return StateVector(state.n_qubits, out[0])


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    if gate.kind in ROTATIONS:
        return apply_rotation(state, gate.kind, gate.target, gate.angle)
    return apply_controlled(state, gate.kind, gate.control, gate.target)


def run_circuit(gates: Iterable[GateOp], initial: StateVector) -> StateVector:
    state = initial
    for g in gates:
        state = apply_gate(state, g)
    return state


def expectation_z(state: StateVector, qubit: int) -> float:
    _check_qubit(qubit, state.n_qubits)
    probs = np.abs(state.amplitudes) ** 2
    return float(np.dot(_z_signs(state.n_qubits)[qubit], probs))


def z_expectations(state: StateVector) -> np.ndarray:
    probs = np.abs(state.amplitudes) ** 2
    return _z_signs(state.n_qubits) @ probs


def circuit_to_text(gates: Iterable[GateOp]) -> str:
    return "\n".join(str(g) for g in gates) + "\n"


# ---------------------------------------------------------------------------
# Circuit construction
# ---------------------------------------------------------------------------


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _standardized_values(features) -> np.ndarray:
    if isinstance(features, BandPowerVector):
        if not features.standardized:
            raise StandardizationError("quantum encoding requires standardized features")
        return features.as_array()
    return np.asarray(features, dtype=float)


def encoding_angles(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-qubit (RY angle, RZ angle): magnitude in (0, pi), phase from the
    difference to the next band (cyclically)."""
    z = np.asarray(z, dtype=float)
    return np.pi * _sigmoid(z), z - np.roll(z, -1)


def encode_features(features, spec: EncodingSpec = EncodingSpec()) -> list[GateOp]:
    z = _standardized_values(features)
    if spec.scheme != "amplitude_phase":
        raise CircuitError(f"unknown encoding scheme {spec.scheme!r}")
    if len(z) != spec.n_features:
        raise CircuitError(f"expected {spec.n_features} features, got {len(z)}")
    theta, phi = encoding_angles(z)
    gates = []
    for q in range(len(z)):
        gates.append(GateOp("RY", q, angle=float(theta[q])))
        gates.append(GateOp("RZ", q, angle=float(phi[q])))
    return gates


def build_ansatz(params, spec: AnsatzSpec = AnsatzSpec()) -> list[GateOp]:
    """Per layer: RX then RY on every qubit, then the entangling CNOT block.

    Parameter layout: ``params[layer * 2n + 2q]`` is the RX angle on qubit
    ``q``, ``params[layer * 2n + 2q + 1]`` the RY angle.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.n_params,):
        raise CircuitError(f"expected {spec.n_params} ansatz parameters, got shape {params.shape}")
    if not np.all(np.isfinite(params)):
        raise CircuitError("ansatz parameters must be finite")
    pairs = spec.entangling_pairs()
    gates = []
    for layer in range(spec.depth):
        base = layer * spec.params_per_layer
        for q in range(spec.n_qubits):
            i = base + 2 * q
            gates.append(GateOp("RX", q, angle=float(params[i]), param_index=i))
            gates.append(GateOp("RY", q, angle=float(params[i + 1]), param_index=i + 1))
        for c, t in pairs:
            gates.append(GateOp("CNOT", t, control=c))
    return gates


# ---------------------------------------------------------------------------
# Multi-row evaluation, used for parameter shifts and batched inference
# ---------------------------------------------------------------------------


def run_parameterized(gates: Sequence[GateOp], param_rows: np.ndarray, initial: StateVector) -> np.ndarray:
    """Evaluate one circuit for many parameter vectors at once.

    Gates with a ``param_index`` take their angle from ``param_rows[:, index]``;
    all other gates use their stored angle. Returns amplitudes (rows, 2**n).
    """
    param_rows = np.atleast_2d(np.asarray(param_rows, dtype=float))
    n = initial.n_qubits
    amps = np.repeat(initial.amplitudes[None, :], param_rows.shape[0], axis=0)
    for g in gates:
        if g.kind in ROTATIONS:
            _check_qubit(g.target, n)
            angle = g.angle if g.param_index is None else param_rows[:, g.param_index]
            amps = _rotate(amps, g.kind, g.target, n, angle)
        else:
            _check_qubit(g.control, n)
            _check_qubit(g.target, n)
            amps = _controlled(amps, g.kind, g.control, g.target, n)
    return amps


def shifted_rows(params: np.ndarray) -> np.ndarray:
    """Rows [theta + s e_0, ..., theta + s e_{P-1}, theta - s e_0, ...]."""
    params = np.asarray(params, dtype=float)
    eye = np.eye(len(params)) * SHIFT
    return np.concatenate([params + eye, params - eye])


def parameter_shift_jacobian(gates: Sequence[GateOp], params, initial: StateVector) -> np.ndarray:
    """d<Z_i>/d theta_j for every readout qubit i and parameter j, shape (n, P).

    Exactly 2P circuit evaluations.
    """
    params = np.asarray(params, dtype=float)
    p = len(params)
    amps = run_parameterized(gates, shifted_rows(params), initial)
    z = _rows_z(amps, initial.n_qubits)
    return ((z[:p] - z[p:]) / 2).T


def _encoded_state(z: np.ndarray, spec: AnsatzSpec) -> StateVector:
    enc = encode_features(z, EncodingSpec(n_features=spec.n_qubits))
    return run_circuit(enc, zero_state(spec.n_qubits))


def quantum_forward(features, params, spec: AnsatzSpec = AnsatzSpec()) -> np.ndarray:
    """<Z_q> for every qubit after encoding + ansatz, starting from |0...0>."""
    z = _standardized_values(features)
    state = run_circuit(build_ansatz(params, spec), _encoded_state(z, spec))
    return z_expectations(state)


def encode_batch(z_rows, spec: AnsatzSpec = AnsatzSpec()) -> np.ndarray:
    """Encoded states for many standardized feature rows, shape (B, 2**n)."""
    z_rows = np.atleast_2d(np.asarray(z_rows, dtype=float))
    n = spec.n_qubits
    if z_rows.shape[1] != n:
        raise CircuitError(f"expected {n} features per row, got {z_rows.shape[1]}")
    theta, phi = np.pi * _sigmoid(z_rows), z_rows - np.roll(z_rows, -1, axis=1)
    amps = np.zeros((len(z_rows), 2**n), dtype=complex)
    amps[:, 0] = 1.0
    for q in range(n):
        amps = _rotate(amps, "RY", q, n, theta[:, q])
        amps = _rotate(amps, "RZ", q, n, phi[:, q])
    return amps


def _run_rows(gates: Sequence[GateOp], amps: np.ndarray, param_rows: np.ndarray, n: int) -> np.ndarray:
    for g in gates:
        if g.kind in ROTATIONS:
            angle = g.angle if g.param_index is None else param_rows[:, g.param_index]
            amps = _rotate(amps, g.kind, g.target, n, angle)
        else:
            amps = _controlled(amps, g.kind, g.control, g.target, n)
    return amps


def batch_forward(z_rows, params, spec: AnsatzSpec = AnsatzSpec()) -> np.ndarray:
    """<Z_q> readouts for many feature rows, shape (B, n)."""
    params = np.asarray(params, dtype=float)
    gates = build_ansatz(params, spec)
    amps = encode_batch(z_rows, spec)
    rows = np.broadcast_to(params, (len(amps), len(params)))
    return _rows_z(_run_rows(gates, amps, rows, spec.n_qubits), spec.n_qubits)


def batch_forward_and_jacobian(z_rows, params, spec: AnsatzSpec = AnsatzSpec()) -> tuple[np.ndarray, np.ndarray]:
    """Readouts (B, n) and parameter-shift Jacobians (B, n, P).

    Each sample costs one unshifted and 2P shifted circuit evaluations.
    """
    params = np.asarray(params, dtype=float)
    gates = build_ansatz(params, spec)
    n, p = spec.n_qubits, len(params)
    enc = encode_batch(z_rows, spec)
    b = len(enc)
    per_sample = np.concatenate([params[None, :], shifted_rows(params)])
    amps = np.repeat(enc, 2 * p + 1, axis=0)
    rows = np.tile(per_sample, (b, 1))
    ez = _rows_z(_run_rows(gates, amps, rows, n), n).reshape(b, 2 * p + 1, n)
    jac = (ez[:, 1 : p + 1, :] - ez[:, p + 1 :, :]) / 2
    return ez[:, 0, :], np.transpose(jac, (0, 2, 1))


def quantum_forward_and_jacobian(features, params, spec: AnsatzSpec = AnsatzSpec()) -> tuple[np.ndarray, np.ndarray]:
    z = _standardized_values(features)
    q, jac = batch_forward_and_jacobian(z[None, :], params, spec)
    return q[0], jac[0]


def parameter_shift_gradient(features, params, spec: AnsatzSpec, upstream) -> np.ndarray:
    """Vector-Jacobian product sum_i upstream_i * d<Z_i>/d theta_j."""
    z = _standardized_values(features)
    jac = parameter_shift_jacobian(build_ansatz(params, spec), params, _encoded_state(z, spec))
    return np.asarray(upstream, dtype=float) @ jac
