import numpy as np
import pytest

from medq import quantum
from medq.errors import InvalidParameterError, QubitIndexError, UnsupportedConfigError
from _oracles import dense_1q, dense_2q, random_state, random_unitary


def test_zero_state_amplitudes():
    s = quantum.zero_state(3)
    expected = np.zeros(8, dtype=np.complex128)
    expected[0] = 1.0
    np.testing.assert_array_equal(s.amplitudes, expected)
    assert s.n_qubits == 3
    assert s.dim == 8


def test_zero_state_rejects_bad_qubit_counts():
    for n in (0, -1):
        with pytest.raises(InvalidParameterError):
            quantum.zero_state(n)
    with pytest.raises(UnsupportedConfigError):
        quantum.zero_state(quantum.MAX_QUBITS + 1)


def test_statevector_validates_norm_and_length():
    quantum.statevector([1.0, 0.0])
    with pytest.raises(InvalidParameterError):
        quantum.statevector([1.0, 1.0])
    got = quantum.statevector([1.0, 1.0], normalize=True)
    np.testing.assert_allclose(got.amplitudes, [2**-0.5, 2**-0.5], atol=1e-15)
    with pytest.raises(InvalidParameterError):
        quantum.statevector([1.0, 0.0, 0.0])
    with pytest.raises(InvalidParameterError):
        quantum.statevector([np.nan, 0.0])


def test_statevector_is_immutable():
    s = quantum.zero_state(2)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0.5


def test_rotation_gates_match_closed_forms():
    rng = np.random.default_rng(7)
    for a in rng.uniform(-2 * np.pi, 2 * np.pi, 25):
        c, s = np.cos(a / 2), np.sin(a / 2)
        np.testing.assert_allclose(
            quantum.rx(a), [[c, -1j * s], [-1j * s, c]], atol=1e-15
        )
        np.testing.assert_allclose(quantum.ry(a), [[c, -s], [s, c]], atol=1e-15)
        np.testing.assert_allclose(
            quantum.rz(a),
            [[np.exp(-0.5j * a), 0], [0, np.exp(0.5j * a)]],
            atol=1e-15,
        )


def test_rot_matches_closed_form_and_factorization():
    rng = np.random.default_rng(11)
    for phi, theta, omega in rng.uniform(-2 * np.pi, 2 * np.pi, (100, 3)):
        got = quantum.rot(phi, theta, omega)
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        closed = np.array(
            [
                [np.exp(-0.5j * (phi + omega)) * c, -np.exp(0.5j * (phi - omega)) * s],
                [np.exp(-0.5j * (phi - omega)) * s, np.exp(0.5j * (phi + omega)) * c],
            ]
        )
        np.testing.assert_allclose(got, closed, atol=1e-12)
        product = quantum.rz(omega) @ quantum.ry(theta) @ quantum.rz(phi)
        np.testing.assert_allclose(got, product, atol=1e-12)


def test_zz_interaction_diagonal_phase_pattern():
    a = 0.83
    e = np.exp(0.5j * a)
    np.testing.assert_allclose(
        quantum.zz_interaction(a),
        np.diag([e.conj(), e, e, e.conj()]),
        atol=1e-15,
    )


def test_gate_constructors_are_unitary():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a, b, c = rng.uniform(-10, 10, 3)
        for gate in (
            quantum.rx(a),
            quantum.ry(a),
            quantum.rz(a),
            quantum.rot(a, b, c),
            quantum.zz_interaction(a),
        ):
            eye = np.eye(gate.shape[0])
            np.testing.assert_allclose(gate.conj().T @ gate, eye, atol=1e-10)


def test_gate_constructors_reject_non_finite_angles():
    for bad in (np.nan, np.inf, -np.inf):
        with pytest.raises(InvalidParameterError):
            quantum.rx(bad)
        with pytest.raises(InvalidParameterError):
            quantum.rot(0.0, bad, 0.0)
        with pytest.raises(InvalidParameterError):
            quantum.zz_interaction(bad)


def test_qubit_zero_is_most_significant():
    # ry(pi) maps |0> to |1>; flipping qubit 0 of two must populate |10> = index 2
    s = quantum.apply_1q(quantum.zero_state(2), quantum.ry(np.pi), 0)
    np.testing.assert_allclose(np.abs(s.amplitudes) ** 2, [0, 0, 1, 0], atol=1e-15)
    s = quantum.apply_1q(quantum.zero_state(2), quantum.ry(np.pi), 1)
    np.testing.assert_allclose(np.abs(s.amplitudes) ** 2, [0, 1, 0, 0], atol=1e-15)


def test_apply_1q_matches_dense_kronecker_oracle():
    rng = np.random.default_rng(19)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        target = int(rng.integers(0, n))
        gate = random_unitary(2, rng)
        amps = random_state(n, rng)
        got = quantum.apply_1q(quantum.statevector(amps), gate, target)
        expected = dense_1q(gate, target, n) @ amps
        np.testing.assert_allclose(got.amplitudes, expected, atol=1e-12)


def test_apply_2q_matches_dense_oracle():
    rng = np.random.default_rng(23)
    for _ in range(50):
        n = int(rng.integers(2, 5))
        q0, q1 = rng.choice(n, size=2, replace=False)
        gate = random_unitary(4, rng)
        amps = random_state(n, rng)
        got = quantum.apply_2q(quantum.statevector(amps), gate, (int(q0), int(q1)))
        expected = dense_2q(gate, (int(q0), int(q1)), n) @ amps
        np.testing.assert_allclose(got.amplitudes, expected, atol=1e-12)


def test_apply_rejects_bad_targets():
    s = quantum.zero_state(2)
    g = quantum.ry(0.3)
    with pytest.raises(QubitIndexError):
        quantum.apply_1q(s, g, 2)
    with pytest.raises(QubitIndexError):
        quantum.apply_1q(s, g, -1)
    zz = quantum.zz_interaction(0.3)
    with pytest.raises(QubitIndexError):
        quantum.apply_2q(s, zz, (0, 0))
    with pytest.raises(QubitIndexError):
        quantum.apply_2q(s, zz, (0, 2))


def test_norm_preserved_over_many_applications():
    rng = np.random.default_rng(31)
    s = quantum.statevector(random_state(4, rng))
    for _ in range(1000):
        a = float(rng.uniform(-np.pi, np.pi))
        kind = rng.integers(0, 4)
        if kind == 3:
            q0, q1 = rng.choice(4, size=2, replace=False)
            s = quantum.apply_2q(s, quantum.zz_interaction(a), (int(q0), int(q1)))
        else:
            gate = (quantum.rx, quantum.ry, quantum.rz)[kind](a)
            s = quantum.apply_1q(s, gate, int(rng.integers(0, 4)))
        assert abs(np.linalg.norm(s.amplitudes) - 1.0) < 1e-10


def test_reduced_density_properties():
    rng = np.random.default_rng(37)
    for _ in range(20):
        s = quantum.statevector(random_state(3, rng))
        for q in range(3):
            rho = quantum.reduced_density(s, q)
            assert rho.shape == (2, 2)
            np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
            np.testing.assert_allclose(np.trace(rho), 1.0, atol=1e-12)
            evals = np.linalg.eigvalsh(rho)
            assert evals.min() > -1e-12


def test_reduced_density_of_product_state():
    s = quantum.apply_1q(quantum.zero_state(2), quantum.ry(0.7), 1)
    rho0 = quantum.reduced_density(s, 0)
    np.testing.assert_allclose(rho0, [[1, 0], [0, 0]], atol=1e-12)


def test_fidelity_values_and_validation():
    rho = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=np.complex128)
    assert abs(quantum.fidelity(rho, np.array([1.0, 0.0])) - 0.5) < 1e-12
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    assert abs(quantum.fidelity(rho, plus) - 1.0) < 1e-12
    with pytest.raises(InvalidParameterError):
        quantum.fidelity(rho, np.array([1.0, 1.0]))


def test_fidelity_of_pure_state_is_overlap_squared():
    rng = np.random.default_rng(41)
    for _ in range(50):
        psi = random_state(1, rng)
        target = random_state(1, rng)
        rho = np.outer(psi, psi.conj())
        expected = abs(np.vdot(target, psi)) ** 2
        assert abs(quantum.fidelity(rho, target) - expected) < 1e-12
