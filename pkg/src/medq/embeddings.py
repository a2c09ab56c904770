"""Data-encoding layers that interleave feature rotations with trainable ones.

Every layer kind is described twice: `layer_ops` expands a LayerSpec into a
flat sequence of primitive rotations (the single source of truth for gate
order and parameter placement), and `apply_embedding_layer` executes that
sequence gate by gate on a StateVector. The batched engine compiles the
same op sequence into arrays, so both paths share one circuit definition.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import quantum
from .errors import InvalidParameterError

OP_RX = 0
OP_RY = 1
OP_RZ = 2
OP_ZZ = 3

SRC_VAR = 0
SRC_DATA = 1


class EmbeddingKind(enum.Enum):
    """Supported encoding families."""

    ROT = "rot"
    ANGLE_X = "angle_x"
    ANGLE_Y = "angle_y"
    ANGLE_Z = "angle_z"
    QAOA = "qaoa"

    @property
    def is_angle(self) -> bool:
        return self in (EmbeddingKind.ANGLE_X, EmbeddingKind.ANGLE_Y, EmbeddingKind.ANGLE_Z)

    @property
    def axis_op(self) -> int:
        """Primitive opcode of the rotation axis for ANGLE kinds."""
        if self is EmbeddingKind.ANGLE_X:
            return OP_RX
        if self is EmbeddingKind.ANGLE_Y:
            return OP_RY
        if self is EmbeddingKind.ANGLE_Z:
            return OP_RZ
        raise InvalidParameterError(f"{self} has no single rotation axis")


class PrimOp(NamedTuple):
    """One parametrized primitive gate.

    op: one of OP_RX, OP_RY, OP_RZ, OP_ZZ.
    q0: target qubit (first qubit of the pair for OP_ZZ).
    q1: second qubit for OP_ZZ, -1 otherwise.
    src: SRC_VAR for a trainable angle, SRC_DATA for a feature scaling.
    idx: index into the layer's variational (SRC_VAR) or data (SRC_DATA)
        parameter slice.
    feat: feature index multiplied into a SRC_DATA angle, or -1 when the
        slot is zero padding (the angle is then identically zero).
    """

    op: int
    q0: int
    q1: int
    src: int
    idx: int
    feat: int


def ring_pairs(n_qubits: int) -> tuple[tuple[int, int], ...]:
    """Nearest-neighbour pairs on a ring: n pairs for n >= 3, one for n = 2."""
    if n_qubits < 2:
        raise InvalidParameterError(f"a ring needs at least 2 qubits, got {n_qubits}")
    if n_qubits == 2:
        return ((0, 1),)
    return tuple((q, (q + 1) % n_qubits) for q in range(n_qubits))


def param_counts(kind: EmbeddingKind, feature_dim: int, n_qubits: int) -> tuple[int, int]:
    """Return (data_param_count, var_param_count) for one layer.

    ROT pads the feature vector with zeros to a multiple of three and uses
    one scaling and one trainable angle per padded slot. ANGLE kinds use
    one scaling per feature and one trainable rotation per qubit. QAOA uses
    one scaling per feature plus, per chunk of up to n_qubits features, one
    trainable angle per ring pair and one per qubit.
    """
    if feature_dim < 1:
        raise InvalidParameterError(f"feature_dim must be positive, got {feature_dim}")
    if n_qubits < 1:
        raise InvalidParameterError(f"n_qubits must be positive, got {n_qubits}")
    if kind is EmbeddingKind.ROT:
        padded = 3 * math.ceil(feature_dim / 3)
        return padded, padded
    if kind.is_angle:
        return feature_dim, n_qubits
    if kind is EmbeddingKind.QAOA:
        if n_qubits < 2:
            raise InvalidParameterError("the qaoa embedding needs at least 2 qubits")
        chunks = math.ceil(feature_dim / n_qubits)
        return feature_dim, chunks * (len(ring_pairs(n_qubits)) + n_qubits)
    raise InvalidParameterError(f"unknown embedding kind {kind!r}")


@dataclass(frozen=True)
class LayerSpec:
    """One encoding layer: a kind bound to a register and a feature size."""

    kind: EmbeddingKind
    n_qubits: int
    feature_dim: int

    def __post_init__(self):
        param_counts(self.kind, self.feature_dim, self.n_qubits)

    @property
    def data_param_count(self) -> int:
        return param_counts(self.kind, self.feature_dim, self.n_qubits)[0]

    @property
    def var_param_count(self) -> int:
        return param_counts(self.kind, self.feature_dim, self.n_qubits)[1]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n_qubits": self.n_qubits,
            "feature_dim": self.feature_dim,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LayerSpec":
        try:
            kind = EmbeddingKind(data["kind"])
        except (KeyError, ValueError) as exc:
            raise InvalidParameterError(f"bad layer description {data!r}") from exc
        return cls(kind, int(data["n_qubits"]), int(data["feature_dim"]))


def _rot_ops(layer: LayerSpec) -> list[PrimOp]:
    d, n = layer.feature_dim, layer.n_qubits
    n_gates = math.ceil(d / 3)
    ops: list[PrimOp] = []
    for src in (SRC_DATA, SRC_VAR):
        for g in range(n_gates):
            q = g % n
            for slot, code in zip(range(3 * g, 3 * g + 3), (OP_RZ, OP_RY, OP_RZ)):
                feat = slot if (src == SRC_DATA and slot < d) else -1
                ops.append(PrimOp(code, q, -1, src, slot, feat))
    return ops


def _angle_ops(layer: LayerSpec) -> list[PrimOp]:
    d, n = layer.feature_dim, layer.n_qubits
    code = layer.kind.axis_op
    ops = [PrimOp(code, j % n, -1, SRC_DATA, j, j) for j in range(d)]
    ops += [PrimOp(code, q, -1, SRC_VAR, q, -1) for q in range(n)]
    return ops


def _qaoa_ops(layer: LayerSpec) -> list[PrimOp]:
    d, n = layer.feature_dim, layer.n_qubits
    pairs = ring_pairs(n)
    ops: list[PrimOp] = []
    base = 0
    for start in range(0, d, n):
        for j in range(start, min(start + n, d)):
            ops.append(PrimOp(OP_RX, j % n, -1, SRC_DATA, j, j))
        for e, (qa, qb) in enumerate(pairs):
            ops.append(PrimOp(OP_ZZ, qa, qb, SRC_VAR, base + e, -1))
        for q in range(n):
            ops.append(PrimOp(OP_RY, q, -1, SRC_VAR, base + len(pairs) + q, -1))
        base += len(pairs) + n
    return ops


def layer_ops(layer: LayerSpec) -> tuple[PrimOp, ...]:
    """Expand a layer into its ordered primitive gate sequence."""
    if layer.kind is EmbeddingKind.ROT:
        ops = _rot_ops(layer)
    elif layer.kind.is_angle:
        ops = _angle_ops(layer)
    elif layer.kind is EmbeddingKind.QAOA:
        ops = _qaoa_ops(layer)
    else:
        raise InvalidParameterError(f"unknown embedding kind {layer.kind!r}")
    return tuple(ops)


_GATE_FNS = {OP_RX: quantum.rx, OP_RY: quantum.ry, OP_RZ: quantum.rz}


def apply_embedding_layer(
    state: quantum.StateVector,
    layer: LayerSpec,
    x: np.ndarray,
    omega: np.ndarray,
    theta: np.ndarray,
) -> quantum.StateVector:
    """Run one encoding layer on a state, gate by gate.

    `x` must have the layer's feature_dim entries, `omega` its
    data_param_count and `theta` its var_param_count. Returns the new state.
    """
    if state.n_qubits != layer.n_qubits:
        raise InvalidParameterError(
            f"state has {state.n_qubits} qubits but the layer expects {layer.n_qubits}"
        )
    xv = np.asarray(x, dtype=np.float64).reshape(-1)
    om = np.asarray(omega, dtype=np.float64).reshape(-1)
    th = np.asarray(theta, dtype=np.float64).reshape(-1)
    if xv.size != layer.feature_dim:
        raise InvalidParameterError(f"expected {layer.feature_dim} features, got {xv.size}")
    if om.size != layer.data_param_count:
        raise InvalidParameterError(
            f"expected {layer.data_param_count} data parameters, got {om.size}"
        )
    if th.size != layer.var_param_count:
        raise InvalidParameterError(
            f"expected {layer.var_param_count} variational parameters, got {th.size}"
        )
    for arr, name in ((xv, "features"), (om, "data parameters"), (th, "variational parameters")):
        if arr.size and not np.all(np.isfinite(arr)):
            raise InvalidParameterError(f"{name} must be finite")

    for op in layer_ops(layer):
        if op.src == SRC_VAR:
            angle = th[op.idx]
        else:
            angle = om[op.idx] * (xv[op.feat] if op.feat >= 0 else 0.0)
        if op.op == OP_ZZ:
            state = quantum.apply_2q(state, quantum.zz_interaction(angle), (op.q0, op.q1))
        else:
            state = quantum.apply_1q(state, _GATE_FNS[op.op](angle), op.q0)
    return state
