"""Pure-numpy batched circuit kernels.

Reference implementation of the backend interface: `run_program` executes a
compiled gate sequence in place on a batch of statevectors, `adjoint_pass`
back-propagates an observable through the sequence and returns the
derivative of its expectation with respect to every gate angle. Both are
vectorized over the batch axis; the numba backend implements the same
signatures with per-sample loops.

Opcodes: 0 = RX, 1 = RY, 2 = RZ, 3 = ZZ. Qubit positions are given as bit
positions counted from the least significant bit of the basis index.
"""

from __future__ import annotations

import numpy as np


def _apply_gate(amps: np.ndarray, code: int, m: int, m1: int, ang: np.ndarray) -> None:
    """Apply one gate, with per-sample angles `ang` of shape (B,), in place."""
    B, N = amps.shape
    c = np.cos(0.5 * ang)
    s = np.sin(0.5 * ang)
    if code == 3:
        t0, t1 = 1 << m, 1 << m1
        idx = np.arange(N)
        eq = ((idx & t0) != 0) == ((idx & t1) != 0)
        phase = np.where(eq[None, :], (c - 1j * s)[:, None], (c + 1j * s)[:, None])
        amps *= phase
        return
    view = amps.reshape(B, N >> (m + 1), 2, 1 << m)
    a0 = view[:, :, 0, :].copy()
    a1 = view[:, :, 1, :]
    cB = c[:, None, None]
    sB = s[:, None, None]
    if code == 0:
        view[:, :, 0, :] = cB * a0 - 1j * (sB * a1)
        view[:, :, 1, :] = cB * a1 - 1j * (sB * a0)
    elif code == 1:
        view[:, :, 0, :] = cB * a0 - sB * a1
        view[:, :, 1, :] = cB * a1 + sB * a0
    else:
        view[:, :, 0, :] = (cB - 1j * sB) * a0
        view[:, :, 1, :] = (cB + 1j * sB) * a1


def run_program(
    amps: np.ndarray,
    ops: np.ndarray,
    m0: np.ndarray,
    m1: np.ndarray,
    angles: np.ndarray,
) -> None:
    """Apply every gate of the program to a (B, 2**n) batch, in place."""
    for g in range(ops.shape[0]):
        _apply_gate(amps, int(ops[g]), int(m0[g]), int(m1[g]), angles[:, g])


def _generator_overlap(
    bra: np.ndarray, ket: np.ndarray, code: int, m: int, m1: int
) -> np.ndarray:
    """Per-sample <bra| P |ket> for the gate's generator Pauli P."""
    B, N = ket.shape
    if code == 3:
        t0, t1 = 1 << m, 1 << m1
        idx = np.arange(N)
        sign = np.where(((idx & t0) != 0) == ((idx & t1) != 0), 1.0, -1.0)
        return np.einsum("bi,bi->b", bra.conj(), sign[None, :] * ket)
    kk = ket.reshape(B, N >> (m + 1), 2, 1 << m)
    bb = bra.reshape(B, N >> (m + 1), 2, 1 << m)
    k0, k1 = kk[:, :, 0, :], kk[:, :, 1, :]
    b0, b1 = bb[:, :, 0, :], bb[:, :, 1, :]
    if code == 0:
        return (b0.conj() * k1 + b1.conj() * k0).sum(axis=(1, 2))
    if code == 1:
        return (1j * (b1.conj() * k0 - b0.conj() * k1)).sum(axis=(1, 2))
    return (b0.conj() * k0 - b1.conj() * k1).sum(axis=(1, 2))


def adjoint_pass(
    amps: np.ndarray,
    ops: np.ndarray,
    m0: np.ndarray,
    m1: np.ndarray,
    angles: np.ndarray,
    obs: np.ndarray,
    readout_bit: int,
) -> np.ndarray:
    """Derivative of <psi|O|psi> with respect to every gate angle.

    `amps` holds the final states produced by `run_program` (left intact),
    `obs` the per-sample Hermitian 2x2 observable acting on `readout_bit`.
    Returns a float64 array of shape (B, G). Every gate is of the form
    exp(-i angle/2 P) for a Pauli P, so the derivative at gate g is
    Im(<bra_g| P |ket_g>) with bra/ket rolled back to just after gate g.
    """
    B, N = amps.shape
    ket = amps.copy()
    kv = ket.reshape(B, N >> (readout_bit + 1), 2, 1 << readout_bit)
    bra = np.einsum("bij,bujv->buiv", obs, kv).reshape(B, N)
    dang = np.empty((B, ops.shape[0]))
    for g in range(ops.shape[0] - 1, -1, -1):
        code, m, mb = int(ops[g]), int(m0[g]), int(m1[g])
        dang[:, g] = _generator_overlap(bra, ket, code, m, mb).imag
        _apply_gate(ket, code, m, mb, -angles[:, g])
        _apply_gate(bra, code, m, mb, -angles[:, g])
    return dang
