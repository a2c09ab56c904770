import numpy as np
import pytest

from medq import embeddings as emb
from medq import model, quantum
from medq.embeddings import EmbeddingKind
from medq.errors import InvalidParameterError, UnsupportedConfigError
from _oracles import dense_1q, dense_2q


def test_medq_stack_is_three_blocks_in_order():
    spec = model.build_medq(1, 3, 2)
    assert [l.kind for l in spec.layers] == [
        EmbeddingKind.ROT, EmbeddingKind.QAOA, EmbeddingKind.ANGLE_Y,
    ]
    spec = model.build_medq(3, 10, 4)
    assert len(spec.layers) == 9
    kinds = [l.kind for l in spec.layers]
    assert kinds == [EmbeddingKind.ROT] * 3 + [EmbeddingKind.QAOA] * 3 + [EmbeddingKind.ANGLE_Y] * 3
    assert spec.readout_qubit == 0
    np.testing.assert_array_equal(spec.class_states[0], [1, 0])
    np.testing.assert_array_equal(spec.class_states[1], [0, 1])


def test_medq_construction_is_pure():
    a = model.build_medq(2, 5, 3)
    b = model.build_medq(2, 5, 3)
    assert a == b


def test_medq_angle_axis_is_configurable():
    spec = model.build_medq(1, 3, 2, angle_kind=EmbeddingKind.ANGLE_X)
    assert spec.layers[-1].kind == EmbeddingKind.ANGLE_X
    with pytest.raises(InvalidParameterError):
        model.build_medq(1, 3, 2, angle_kind=EmbeddingKind.QAOA)


def test_medq_parameter_count_matches_per_layer_sums():
    spec = model.build_medq(1, 3, 2)
    expect_var = sum(
        emb.param_counts(k, 3, 2)[1]
        for k in (EmbeddingKind.ROT, EmbeddingKind.QAOA, EmbeddingKind.ANGLE_Y)
    )
    expect_data = sum(
        emb.param_counts(k, 3, 2)[0]
        for k in (EmbeddingKind.ROT, EmbeddingKind.QAOA, EmbeddingKind.ANGLE_Y)
    )
    assert spec.theta_size == expect_var == 11
    assert spec.omega_size == expect_data == 9


def test_medq_rejects_small_registers_and_bad_blocks():
    with pytest.raises(UnsupportedConfigError):
        model.build_medq(1, 3, 1)
    with pytest.raises(InvalidParameterError):
        model.build_medq(0, 3, 2)


def test_baseline_is_rot_only_and_allows_one_qubit():
    spec = model.build_reuploading_baseline(5, 3, 1)
    assert len(spec.layers) == 5
    assert all(l.kind == EmbeddingKind.ROT for l in spec.layers)
    with pytest.raises(InvalidParameterError):
        model.build_reuploading_baseline(0, 3, 1)


def test_baseline_parameter_count_with_padding():
    # d=10 pads to 12 slots; four layers of (12 data + 12 trainable)
    spec = model.build_reuploading_baseline(4, 10, 1)
    assert spec.theta_size + spec.omega_size == 96


def test_parameter_slices_partition_the_vectors():
    spec = model.build_medq(2, 7, 3)
    tstops = [s.stop for s in spec.theta_slices()]
    assert tstops[-1] == spec.theta_size
    assert [s.start for s in spec.theta_slices()] == [0] + tstops[:-1]
    ostops = [s.stop for s in spec.omega_slices()]
    assert ostops[-1] == spec.omega_size
    assert [s.start for s in spec.omega_slices()] == [0] + ostops[:-1]
    for layer, ts, os_ in zip(spec.layers, spec.theta_slices(), spec.omega_slices()):
        assert ts.stop - ts.start == layer.var_param_count
        assert os_.stop - os_.start == layer.data_param_count


def test_circuit_spec_serialization_roundtrip():
    spec = model.build_medq(2, 4, 3, angle_kind=EmbeddingKind.ANGLE_Z)
    again = model.CircuitSpec.from_dict(spec.to_dict())
    assert again.layers == spec.layers
    assert again.n_qubits == spec.n_qubits
    assert again.readout_qubit == spec.readout_qubit
    for a, b in zip(again.class_states, spec.class_states):
        np.testing.assert_allclose(a, b)


def test_parameter_set_roundtrip_and_validation():
    spec = model.build_medq(1, 3, 2)
    params = model.init_parameters(spec, np.random.default_rng(0))
    again = model.ParameterSet.from_dict(params.to_dict())
    np.testing.assert_array_equal(again.theta, params.theta)
    np.testing.assert_array_equal(again.omega, params.omega)
    np.testing.assert_array_equal(again.alpha, params.alpha)
    params.validate_for(spec)
    bad = params.copy()
    bad.theta = bad.theta[:-1]
    with pytest.raises(InvalidParameterError):
        bad.validate_for(spec)
    nan = params.copy()
    nan.omega = nan.omega.copy()
    nan.omega[0] = np.nan
    with pytest.raises(InvalidParameterError):
        nan.validate_for(spec)


def test_init_parameters_ranges_and_determinism():
    spec = model.build_medq(3, 10, 4)
    p = model.init_parameters(spec, np.random.default_rng(42))
    q = model.init_parameters(spec, np.random.default_rng(42))
    np.testing.assert_array_equal(p.theta, q.theta)
    assert p.theta.min() >= -np.pi and p.theta.max() <= np.pi
    assert p.omega.min() >= 0.0 and p.omega.max() <= 1.0
    np.testing.assert_array_equal(p.alpha, [1.0, 1.0])


def test_forward_identity_circuit_scores_class_zero():
    spec = model.build_medq(1, 3, 2)
    params = model.ParameterSet(
        np.zeros(spec.theta_size), np.zeros(spec.omega_size), np.ones(2)
    )
    scores = model.forward(spec, params, np.array([0.3, -0.8, 0.5]))
    np.testing.assert_allclose(scores.fidelities, [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(scores.weighted, [1.0, 0.0], atol=1e-12)


def test_forward_single_rot_layer_phase_only_input():
    # one 1-qubit general-rotation layer, theta = 0, scalings = 1:
    # x = (pi, 0, 0) enters as rz(pi)ry(0)rz(0), a pure phase on |0>
    spec = model.build_reuploading_baseline(1, 3, 1)
    params = model.ParameterSet(np.zeros(3), np.ones(3), np.ones(2))
    scores = model.forward(spec, params, np.array([np.pi, 0.0, 0.0]))
    np.testing.assert_allclose(scores.fidelities, [1.0, 0.0], atol=1e-12)


def test_forward_matches_dense_end_to_end_oracle():
    rng = np.random.default_rng(17)
    spec = model.build_medq(1, 4, 2)
    for _ in range(10):
        params = model.init_parameters(spec, rng)
        x = rng.uniform(-1, 1, 4)
        full = np.eye(4, dtype=np.complex128)
        for layer, ts, os_ in zip(spec.layers, spec.theta_slices(), spec.omega_slices()):
            th = params.theta[ts]
            om = params.omega[os_]
            for op in emb.layer_ops(layer):
                if op.src == emb.SRC_VAR:
                    angle = th[op.idx]
                else:
                    angle = om[op.idx] * (x[op.feat] if op.feat >= 0 else 0.0)
                if op.op == emb.OP_ZZ:
                    g = dense_2q(quantum.zz_interaction(angle), (op.q0, op.q1), 2)
                else:
                    fn = {emb.OP_RX: quantum.rx, emb.OP_RY: quantum.ry, emb.OP_RZ: quantum.rz}
                    g = dense_1q(fn[op.op](angle), op.q0, 2)
                full = g @ full
        psi = full[:, 0]
        rho = quantum.reduced_density(quantum.statevector(psi), 0)
        expected = [quantum.fidelity(rho, cs) for cs in spec.class_states]
        scores = model.forward(spec, params, x)
        np.testing.assert_allclose(scores.fidelities, expected, atol=1e-12)


def test_fidelities_sum_to_one_for_orthonormal_class_states():
    rng = np.random.default_rng(29)
    spec = model.build_medq(1, 3, 2)
    for _ in range(100):
        params = model.init_parameters(spec, rng)
        x = rng.uniform(-1, 1, 3)
        scores = model.forward(spec, params, x)
        assert abs(scores.fidelities.sum() - 1.0) < 1e-10


def test_predict_rules():
    assert model.predict(model.ClassScores(np.array([0.9, 0.1]), np.array([0.9, 0.1]))) == 0
    assert model.predict(model.ClassScores(np.array([0.5, 0.5]), np.array([0.5, 0.5]))) == 0
    assert model.predict(model.ClassScores(np.array([0.3, 0.7]), np.array([0.3, 0.7]))) == 1


def test_alpha_scaling_leaves_predictions_unchanged():
    rng = np.random.default_rng(31)
    spec = model.build_medq(1, 3, 2)
    params = model.init_parameters(spec, rng)
    X = rng.uniform(-1, 1, (20, 3))
    base = model.predict_batch(spec, params, X)
    scaled = params.copy()
    scaled.alpha = scaled.alpha * 7.5
    np.testing.assert_array_equal(model.predict_batch(spec, scaled, X), base)


def test_predict_batch_agrees_with_forward_and_accuracy_counts():
    rng = np.random.default_rng(37)
    spec = model.build_medq(1, 3, 2)
    params = model.init_parameters(spec, rng)
    X = rng.uniform(-1, 1, (15, 3))
    batch = model.predict_batch(spec, params, X)
    single = [model.predict(model.forward(spec, params, row)) for row in X]
    np.testing.assert_array_equal(batch, single)
    y = np.array(single)
    assert model.accuracy(spec, params, X, y) == 1.0
    assert model.accuracy(spec, params, X, 1 - y) == 0.0
    with pytest.raises(InvalidParameterError):
        model.accuracy(spec, params, X, y[:-1])


def test_forward_rejects_wrong_feature_count():
    spec = model.build_medq(1, 3, 2)
    params = model.init_parameters(spec, np.random.default_rng(0))
    with pytest.raises(InvalidParameterError):
        model.forward(spec, params, np.array([0.1, 0.2]))
