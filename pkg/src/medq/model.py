"""Classifier circuits: layer stacks, parameters and class scores.

A circuit re-uploads the feature vector in every layer, reads a single
qubit out at the end and scores each class by the fidelity between that
qubit's state and a fixed class state. Binary classification uses |0> and
|1> as class states, so the two fidelities sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine, quantum
from .embeddings import EmbeddingKind, LayerSpec
from .errors import InvalidParameterError, UnsupportedConfigError

_BINARY_STATES = ((1.0 + 0.0j, 0.0j), (0.0j, 1.0 + 0.0j))


@dataclass(frozen=True)
class CircuitSpec:
    """Immutable description of a layered classifier circuit."""

    layers: tuple[LayerSpec, ...]
    n_qubits: int
    readout_qubit: int = 0
    class_states: tuple[tuple[complex, complex], ...] = _BINARY_STATES

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise InvalidParameterError("a circuit needs at least one layer")
        if self.n_qubits < 1:
            raise InvalidParameterError(f"n_qubits must be positive, got {self.n_qubits}")
        if self.n_qubits > quantum.MAX_QUBITS:
            raise UnsupportedConfigError(
                f"n_qubits={self.n_qubits} exceeds the supported maximum of {quantum.MAX_QUBITS}"
            )
        for layer in layers:
            if layer.n_qubits != self.n_qubits:
                raise InvalidParameterError(
                    f"layer register size {layer.n_qubits} does not match circuit "
                    f"register size {self.n_qubits}"
                )
            if layer.feature_dim != layers[0].feature_dim:
                raise InvalidParameterError("all layers must share one feature_dim")
        if not 0 <= self.readout_qubit < self.n_qubits:
            raise InvalidParameterError(
                f"readout qubit {self.readout_qubit} out of range for {self.n_qubits} qubits"
            )
        states = tuple(tuple(complex(a) for a in s) for s in self.class_states)
        object.__setattr__(self, "class_states", states)
        if len(states) < 2:
            raise InvalidParameterError("need at least two class states")
        for s in states:
            if len(s) != 2:
                raise InvalidParameterError("class states must be single-qubit 2-vectors")
            norm = abs(s[0]) ** 2 + abs(s[1]) ** 2
            if not np.isfinite(norm) or abs(norm - 1.0) > 1e-10:
                raise InvalidParameterError(f"class state {s!r} must have unit norm")

    @property
    def feature_dim(self) -> int:
        return self.layers[0].feature_dim

    @property
    def n_classes(self) -> int:
        return len(self.class_states)

    @property
    def theta_size(self) -> int:
        return sum(layer.var_param_count for layer in self.layers)

    @property
    def omega_size(self) -> int:
        return sum(layer.data_param_count for layer in self.layers)

    def theta_slices(self) -> list[slice]:
        """Per-layer slices into the concatenated variational vector."""
        out, start = [], 0
        for layer in self.layers:
            out.append(slice(start, start + layer.var_param_count))
            start += layer.var_param_count
        return out

    def omega_slices(self) -> list[slice]:
        """Per-layer slices into the concatenated data-scaling vector."""
        out, start = [], 0
        for layer in self.layers:
            out.append(slice(start, start + layer.data_param_count))
            start += layer.data_param_count
        return out

    def to_dict(self) -> dict:
        return {
            "layers": [layer.to_dict() for layer in self.layers],
            "n_qubits": self.n_qubits,
            "readout_qubit": self.readout_qubit,
            "class_states": [[[z.real, z.imag] for z in s] for s in self.class_states],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitSpec":
        states = tuple(
            tuple(complex(re, im) for re, im in s) for s in data["class_states"]
        )
        return cls(
            layers=tuple(LayerSpec.from_dict(d) for d in data["layers"]),
            n_qubits=int(data["n_qubits"]),
            readout_qubit=int(data["readout_qubit"]),
            class_states=states,
        )


@dataclass
class ParameterSet:
    """Trainable values: per-gate angles, feature scalings, class weights."""

    theta: np.ndarray
    omega: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        self.omega = np.asarray(self.omega, dtype=np.float64).reshape(-1)
        self.alpha = np.asarray(self.alpha, dtype=np.float64).reshape(-1)

    def copy(self) -> "ParameterSet":
        return ParameterSet(self.theta.copy(), self.omega.copy(), self.alpha.copy())

    def validate_for(self, spec: CircuitSpec) -> None:
        if self.theta.shape != (spec.theta_size,):
            raise InvalidParameterError(
                f"expected {spec.theta_size} variational parameters, got {self.theta.shape}"
            )
        if self.omega.shape != (spec.omega_size,):
            raise InvalidParameterError(
                f"expected {spec.omega_size} data parameters, got {self.omega.shape}"
            )
        if self.alpha.shape != (spec.n_classes,):
            raise InvalidParameterError(
                f"expected {spec.n_classes} class weights, got {self.alpha.shape}"
            )
        for arr, name in ((self.theta, "theta"), (self.omega, "omega"), (self.alpha, "alpha")):
            if arr.size and not np.all(np.isfinite(arr)):
                raise InvalidParameterError(f"{name} must be finite")

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "omega": self.omega.tolist(),
            "alpha": self.alpha.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ParameterSet":
        return cls(
            np.asarray(data["theta"], dtype=np.float64),
            np.asarray(data["omega"], dtype=np.float64),
            np.asarray(data["alpha"], dtype=np.float64),
        )


@dataclass(frozen=True)
class ClassScores:
    """Per-class readout fidelities and their weighted counterparts."""

    fidelities: np.ndarray
    weighted: np.ndarray


def build_medq(blocks: int, feature_dim: int, n_qubits: int,
               angle_kind: EmbeddingKind = EmbeddingKind.ANGLE_Y) -> CircuitSpec:
    """Multi-encoding circuit: `blocks` layers each of three encoding kinds.

    The stack is `blocks` general-rotation layers, then `blocks`
    entangling QAOA layers, then `blocks` single-axis angle layers, 3n
    layers in total for blocks = n. Needs at least two qubits for the
    entanglers.
    """
    if blocks < 1:
        raise InvalidParameterError(f"blocks must be positive, got {blocks}")
    if n_qubits < 2:
        raise UnsupportedConfigError(
            f"the multi-encoding circuit needs at least 2 qubits, got {n_qubits}"
        )
    if not angle_kind.is_angle:
        raise InvalidParameterError(f"angle_kind must be an angle embedding, got {angle_kind}")
    layers = (
        [LayerSpec(EmbeddingKind.ROT, n_qubits, feature_dim)] * blocks
        + [LayerSpec(EmbeddingKind.QAOA, n_qubits, feature_dim)] * blocks
        + [LayerSpec(angle_kind, n_qubits, feature_dim)] * blocks
    )
    return CircuitSpec(layers=tuple(layers), n_qubits=n_qubits)


def build_reuploading_baseline(n_layers: int, feature_dim: int, n_qubits: int) -> CircuitSpec:
    """Plain re-uploading circuit: a stack of general-rotation layers."""
    if n_layers < 1:
        raise InvalidParameterError(f"n_layers must be positive, got {n_layers}")
    layers = tuple(LayerSpec(EmbeddingKind.ROT, n_qubits, feature_dim) for _ in range(n_layers))
    return CircuitSpec(layers=layers, n_qubits=n_qubits)


def init_parameters(spec: CircuitSpec, rng: np.random.Generator) -> ParameterSet:
    """Draw a fresh parameter set.

    Variational angles start uniform in [-pi, pi], feature scalings uniform
    in [0, 1], class weights at one.
    """
    theta = rng.uniform(-np.pi, np.pi, size=spec.theta_size)
    omega = rng.uniform(0.0, 1.0, size=spec.omega_size)
    alpha = np.ones(spec.n_classes)
    return ParameterSet(theta, omega, alpha)


def batch_fidelities(spec: CircuitSpec, params: ParameterSet, X: np.ndarray) -> np.ndarray:
    """Class fidelities for every feature row, shape (B, n_classes)."""
    params.validate_for(spec)
    return engine.batch_fidelities(engine.compile_circuit(spec), params.theta, params.omega, X)


def forward(spec: CircuitSpec, params: ParameterSet, x: np.ndarray) -> ClassScores:
    """Score one sample."""
    fid = batch_fidelities(spec, params, np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
    return ClassScores(fidelities=fid, weighted=params.alpha * fid)


def predict(scores: ClassScores) -> int:
    """Class with the largest weighted fidelity; ties go to the lowest index."""
    return int(np.argmax(scores.weighted))


def predict_batch(spec: CircuitSpec, params: ParameterSet, X: np.ndarray) -> np.ndarray:
    """Predicted class label for every feature row."""
    fid = batch_fidelities(spec, params, X)
    return np.argmax(params.alpha[None, :] * fid, axis=1)


def accuracy(spec: CircuitSpec, params: ParameterSet, X: np.ndarray, y: np.ndarray) -> float:
    """Fraction of rows whose predicted class matches the label."""
    yv = np.asarray(y).reshape(-1)
    preds = predict_batch(spec, params, X)
    if preds.shape != yv.shape:
        raise InvalidParameterError(
            f"got {preds.shape[0]} feature rows but {yv.shape[0]} labels"
        )
    return float(np.mean(preds == yv))
