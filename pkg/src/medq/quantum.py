"""Exact statevector simulation of small qubit registers.

Amplitudes are stored as a dense complex128 vector of length 2**n_qubits.
Basis state indices are read with qubit 0 as the most significant bit, so
for two qubits the order is |00>, |01>, |10>, |11> with the first bit
belonging to qubit 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, QubitIndexError, UnsupportedConfigError

MAX_QUBITS = 20


@dataclass(frozen=True)
class StateVector:
    """Immutable pure state of an n-qubit register.

    Attributes:
        n_qubits: number of qubits, between 1 and MAX_QUBITS.
        amplitudes: complex128 array of length 2**n_qubits with unit norm.
    """

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not isinstance(self.n_qubits, int) or self.n_qubits < 1:
            raise InvalidParameterError(f"n_qubits must be a positive int, got {self.n_qubits!r}")
        if self.n_qubits > MAX_QUBITS:
            raise UnsupportedConfigError(
                f"n_qubits={self.n_qubits} exceeds the supported maximum of {MAX_QUBITS}"
            )
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.n_qubits,):
            raise InvalidParameterError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps.real)) or not np.all(np.isfinite(amps.imag)):
            raise InvalidParameterError("amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-10:
            raise InvalidParameterError(f"amplitudes must have unit norm, got norm^2 = {norm}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


def zero_state(n_qubits: int) -> StateVector:
    """Return |0...0> on n_qubits qubits."""
    if not isinstance(n_qubits, int) or n_qubits < 1:
        raise InvalidParameterError(f"n_qubits must be a positive int, got {n_qubits!r}")
    if n_qubits > MAX_QUBITS:
        raise UnsupportedConfigError(
            f"n_qubits={n_qubits} exceeds the supported maximum of {MAX_QUBITS}"
        )
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def statevector(amplitudes, *, normalize: bool = False) -> StateVector:
    """Build a StateVector from raw amplitudes.

    The length must be a power of two. With normalize=True the vector is
    rescaled to unit norm first; a zero or non-finite vector is rejected.
    """
    amps = np.asarray(amplitudes, dtype=np.complex128)
    if amps.ndim != 1 or amps.size < 2 or (amps.size & (amps.size - 1)) != 0:
        raise InvalidParameterError(f"amplitude length must be a power of two >= 2, got {amps.size}")
    if not np.all(np.isfinite(amps.real)) or not np.all(np.isfinite(amps.imag)):
        raise InvalidParameterError("amplitudes must be finite")
    if normalize:
        norm = float(np.linalg.norm(amps))
        if norm == 0.0:
            raise InvalidParameterError("cannot normalize the zero vector")
        amps = amps / norm
    return StateVector(int(amps.size).bit_length() - 1, amps)


def _check_angle(angle) -> float:
    a = float(angle)
    if not np.isfinite(a):
        raise InvalidParameterError(f"rotation angle must be finite, got {angle!r}")
    return a


def rx(angle: float) -> np.ndarray:
    """Rotation by `angle` about the X axis."""
    a = _check_angle(angle)
    c, s = np.cos(a / 2), np.sin(a / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def ry(angle: float) -> np.ndarray:
    """Rotation by `angle` about the Y axis."""
    a = _check_angle(angle)
    c, s = np.cos(a / 2), np.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz(angle: float) -> np.ndarray:
    """Rotation by `angle` about the Z axis."""
    a = _check_angle(angle)
    p = np.exp(-0.5j * a)
    return np.array([[p, 0.0], [0.0, np.conj(p)]], dtype=np.complex128)


def rot(phi: float, theta: float, omega: float) -> np.ndarray:
    """General single-qubit rotation rz(omega) @ ry(theta) @ rz(phi).

    Returned in closed form; the (0, 0) entry is
    exp(-i (phi + omega) / 2) * cos(theta / 2).
    """
    p = _check_angle(phi)
    t = _check_angle(theta)
    w = _check_angle(omega)
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array(
        [
            [np.exp(-0.5j * (p + w)) * c, -np.exp(0.5j * (p - w)) * s],
            [np.exp(-0.5j * (p - w)) * s, np.exp(0.5j * (p + w)) * c],
        ],
        dtype=np.complex128,
    )


def zz_interaction(angle: float) -> np.ndarray:
    """Two-qubit interaction exp(-i angle/2 Z o Z) as a diagonal 4x4 matrix.

    Basis states whose two bits agree pick up exp(-i angle/2), the others
    exp(+i angle/2).
    """
    a = _check_angle(angle)
    p = np.exp(-0.5j * a)
    q = np.conj(p)
    return np.diag([p, q, q, p]).astype(np.complex128)


def _check_target(n_qubits: int, target: int) -> int:
    t = int(target)
    if t != target or t < 0 or t >= n_qubits:
        raise QubitIndexError(f"qubit index {target!r} out of range for {n_qubits} qubits")
    return t


def apply_1q(state: StateVector, gate: np.ndarray, target: int) -> StateVector:
    """Apply a 2x2 matrix to one qubit of the register.

    Raises QubitIndexError when the target is outside the register and
    InvalidParameterError when the matrix is not 2x2.
    """
    g = np.asarray(gate, dtype=np.complex128)
    if g.shape != (2, 2):
        raise InvalidParameterError(f"single-qubit gate must be 2x2, got shape {g.shape}")
    t = _check_target(state.n_qubits, target)
    psi = state.amplitudes.reshape((2,) * state.n_qubits)
    psi = np.moveaxis(psi, t, 0)
    psi = np.tensordot(g, psi, axes=([1], [0]))
    psi = np.moveaxis(psi, 0, t)
    return StateVector(state.n_qubits, psi.reshape(-1))


def apply_2q(state: StateVector, gate: np.ndarray, targets: tuple[int, int]) -> StateVector:
    """Apply a 4x4 matrix to an ordered pair of qubits.

    The row index of the matrix reads the first target's bit as the more
    significant one. Raises QubitIndexError for out-of-range or repeated
    targets.
    """
    g = np.asarray(gate, dtype=np.complex128)
    if g.shape != (4, 4):
        raise InvalidParameterError(f"two-qubit gate must be 4x4, got shape {g.shape}")
    if len(targets) != 2:
        raise QubitIndexError(f"expected two targets, got {targets!r}")
    t0 = _check_target(state.n_qubits, targets[0])
    t1 = _check_target(state.n_qubits, targets[1])
    if t0 == t1:
        raise QubitIndexError(f"two-qubit gate targets must differ, got {targets!r}")
    g4 = g.reshape(2, 2, 2, 2)
    psi = state.amplitudes.reshape((2,) * state.n_qubits)
    psi = np.moveaxis(psi, (t0, t1), (0, 1))
    psi = np.tensordot(g4, psi, axes=([2, 3], [0, 1]))
    psi = np.moveaxis(psi, (0, 1), (t0, t1))
    return StateVector(state.n_qubits, psi.reshape(-1))


def reduced_density(state: StateVector, qubit: int) -> np.ndarray:
    """Trace out every qubit except one and return its 2x2 density matrix."""
    q = _check_target(state.n_qubits, qubit)
    psi = state.amplitudes.reshape((2,) * state.n_qubits)
    v = np.moveaxis(psi, q, 0).reshape(2, -1)
    return v @ v.conj().T


def fidelity(rho: np.ndarray, target_state: np.ndarray) -> float:
    """Overlap <t|rho|t> of a 1-qubit density matrix with a pure state.

    `target_state` must be a unit 2-vector. The result is clipped to [0, 1]
    to absorb rounding at the 1e-12 level.
    """
    r = np.asarray(rho, dtype=np.complex128)
    if r.shape != (2, 2):
        raise InvalidParameterError(f"density matrix must be 2x2, got shape {r.shape}")
    t = np.asarray(target_state, dtype=np.complex128)
    if t.shape != (2,):
        raise InvalidParameterError(f"target state must be a 2-vector, got shape {t.shape}")
    if not np.all(np.isfinite(t.real)) or not np.all(np.isfinite(t.imag)):
        raise InvalidParameterError("target state must be finite")
    norm = float(np.vdot(t, t).real)
    if abs(norm - 1.0) > 1e-10:
        raise InvalidParameterError(f"target state must have unit norm, got norm^2 = {norm}")
    val = float(np.real(np.conj(t) @ r @ t))
    return min(1.0, max(0.0, val))
