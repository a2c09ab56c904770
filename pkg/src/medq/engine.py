"""Compilation of layered circuits into flat gate arrays plus batched math.

A compiled program lists every primitive gate of every layer once, with
global parameter indices resolved, so a whole circuit evaluation is a
single kernel call. The same arrays drive the forward pass, the adjoint
angle gradient and the shifted evaluations used by the parameter-shift
rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import backend
from .embeddings import SRC_DATA, SRC_VAR, layer_ops
from .errors import InvalidParameterError


@dataclass(frozen=True, eq=False)
class CircuitProgram:
    """Flat gate-array form of a layered circuit.

    Arrays are parallel over the G primitive gates: `ops` holds opcodes,
    `m0`/`m1` qubit bit positions (counted from the least significant bit
    of the basis index), `src` whether the angle comes from theta or from
    omega times a feature, `pidx` the global parameter index and `fidx`
    the feature index (feature_dim marks a padded slot, whose appended
    zero feature kills the angle and its gradient exactly).
    """

    n_qubits: int
    feature_dim: int
    n_theta: int
    n_omega: int
    ops: np.ndarray
    m0: np.ndarray
    m1: np.ndarray
    src: np.ndarray
    pidx: np.ndarray
    fidx: np.ndarray
    readout_bit: int
    class_states: np.ndarray
    class_outer: np.ndarray
    var_ops: np.ndarray
    data_ops: np.ndarray
    op_for_theta: np.ndarray
    op_for_omega: np.ndarray

    @property
    def n_gates(self) -> int:
        return int(self.ops.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.class_states.shape[0])


@lru_cache(maxsize=128)
def compile_circuit(spec) -> CircuitProgram:
    """Flatten a circuit spec (model.CircuitSpec) into a CircuitProgram."""
    n = spec.n_qubits
    ops, m0s, m1s, srcs, pidxs, fidxs = [], [], [], [], [], []
    theta_off = 0
    omega_off = 0
    for layer in spec.layers:
        for op in layer_ops(layer):
            ops.append(op.op)
            m0s.append(n - 1 - op.q0)
            m1s.append(n - 1 - op.q1 if op.q1 >= 0 else -1)
            srcs.append(op.src)
            if op.src == SRC_VAR:
                pidxs.append(theta_off + op.idx)
            else:
                pidxs.append(omega_off + op.idx)
            fidxs.append(op.feat if op.feat >= 0 else spec.feature_dim)
        theta_off += layer.var_param_count
        omega_off += layer.data_param_count

    arr = lambda xs: np.asarray(xs, dtype=np.int64)
    src = arr(srcs)
    pidx = arr(pidxs)
    var_ops = np.nonzero(src == SRC_VAR)[0]
    data_ops = np.nonzero(src == SRC_DATA)[0]
    # Every parameter must drive exactly one gate, so shifted evaluations
    # and bincount reductions stay one-to-one.
    assert sorted(pidx[var_ops].tolist()) == list(range(theta_off))
    assert sorted(pidx[data_ops].tolist()) == list(range(omega_off))
    op_for_theta = np.empty(theta_off, dtype=np.int64)
    op_for_theta[pidx[var_ops]] = var_ops
    op_for_omega = np.empty(omega_off, dtype=np.int64)
    op_for_omega[pidx[data_ops]] = data_ops

    states = np.asarray(spec.class_states, dtype=np.complex128)
    outer = np.einsum("ci,cj->cij", states, states.conj())
    return CircuitProgram(
        n_qubits=n,
        feature_dim=spec.feature_dim,
        n_theta=theta_off,
        n_omega=omega_off,
        ops=arr(ops),
        m0=arr(m0s),
        m1=arr(m1s),
        src=src,
        pidx=pidx,
        fidx=arr(fidxs),
        readout_bit=n - 1 - spec.readout_qubit,
        class_states=states,
        class_outer=outer,
        var_ops=var_ops,
        data_ops=data_ops,
        op_for_theta=op_for_theta,
        op_for_omega=op_for_omega,
    )


def augment_features(prog: CircuitProgram, X: np.ndarray) -> np.ndarray:
    """Validate a feature batch and append the zero column padded slots read."""
    Xv = np.asarray(X, dtype=np.float64)
    if Xv.ndim == 1:
        Xv = Xv[None, :]
    if Xv.ndim != 2 or Xv.shape[1] != prog.feature_dim:
        raise InvalidParameterError(
            f"expected feature rows of length {prog.feature_dim}, got shape {Xv.shape}"
        )
    if Xv.shape[0] == 0:
        raise InvalidParameterError("feature batch must not be empty")
    if not np.all(np.isfinite(Xv)):
        raise InvalidParameterError("features must be finite")
    return np.hstack([Xv, np.zeros((Xv.shape[0], 1))])


def angle_matrix(
    prog: CircuitProgram, theta: np.ndarray, omega: np.ndarray, Xaug: np.ndarray
) -> np.ndarray:
    """Per-sample angle of every gate, shape (B, G)."""
    if theta.shape != (prog.n_theta,):
        raise InvalidParameterError(
            f"expected {prog.n_theta} variational parameters, got shape {theta.shape}"
        )
    if omega.shape != (prog.n_omega,):
        raise InvalidParameterError(
            f"expected {prog.n_omega} data parameters, got shape {omega.shape}"
        )
    ang = np.empty((Xaug.shape[0], prog.n_gates))
    ang[:, prog.var_ops] = theta[prog.pidx[prog.var_ops]][None, :]
    ang[:, prog.data_ops] = (
        omega[prog.pidx[prog.data_ops]][None, :] * Xaug[:, prog.fidx[prog.data_ops]]
    )
    return ang


def run_angles(prog: CircuitProgram, angles: np.ndarray) -> np.ndarray:
    """Run the program from |0...0> for every row of angles."""
    amps = np.zeros((angles.shape[0], 2**prog.n_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    backend.kernels().run_program(amps, prog.ops, prog.m0, prog.m1, angles)
    return amps


def fidelities_from_amps(prog: CircuitProgram, amps: np.ndarray) -> np.ndarray:
    """Readout-qubit overlap with each class state, shape (B, C)."""
    B, N = amps.shape
    r = prog.readout_bit
    view = amps.reshape(B, N >> (r + 1), 2, 1 << r)
    rho = np.einsum("buiv,bujv->bij", view, view.conj())
    fid = np.einsum("ci,bij,cj->bc", prog.class_states.conj(), rho, prog.class_states).real
    return np.clip(fid, 0.0, 1.0)


def batch_fidelities(
    prog: CircuitProgram, theta: np.ndarray, omega: np.ndarray, X: np.ndarray
) -> np.ndarray:
    """Class fidelities for a feature batch, shape (B, C)."""
    Xaug = augment_features(prog, X)
    amps = run_angles(prog, angle_matrix(prog, theta, omega, Xaug))
    return fidelities_from_amps(prog, amps)


def adjoint_param_grads(
    prog: CircuitProgram,
    angles: np.ndarray,
    amps: np.ndarray,
    Xaug: np.ndarray,
    w: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of sum_b sum_c w[b,c] F[b,c] over theta and omega.

    `amps` must be the final states for `angles`; `w` holds the per-sample
    weight of each class fidelity, so the chain rule to any loss is applied
    by the caller through its choice of w.
    """
    obs = np.einsum("bc,cij->bij", w.astype(np.complex128), prog.class_outer)
    dang = backend.kernels().adjoint_pass(
        amps, prog.ops, prog.m0, prog.m1, angles, obs, prog.readout_bit
    )
    v = prog.var_ops
    d = prog.data_ops
    d_theta = np.bincount(prog.pidx[v], weights=dang[:, v].sum(axis=0), minlength=prog.n_theta)
    contrib = (dang[:, d] * Xaug[:, prog.fidx[d]]).sum(axis=0)
    d_omega = np.bincount(prog.pidx[d], weights=contrib, minlength=prog.n_omega)
    return d_theta, d_omega
