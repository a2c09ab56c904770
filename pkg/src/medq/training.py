"""Weighted-fidelity training of classifier circuits.

The objective is the squared error between weighted class fidelities and
one-hot targets, summed (not averaged) over the batch:

    loss = 1/2 * sum_mu sum_c (alpha_c * F_c(x_mu) - Y_c(x_mu))^2

Three interchangeable gradient routes are provided. `parameter_shift`
evaluates every gate at its angle shifted by +-pi/2 (all gates are
generated by Paulis, so the two-point rule is exact) and applies the chain
rule a = omega_j * x_j for the feature scalings. `finite_difference` is the
independent central-difference oracle. `adjoint` sweeps one bra/ket pair
backwards through the circuit for the same exact gradient at a cost
independent of the parameter count; it is the default for training runs.
The class weights alpha enter the loss quadratically, so their gradient is
always available in closed form.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import engine, results
from .data import LabeledDataset, SplitSpec, split
from .errors import InvalidParameterError, TrainingDivergedError
from .model import CircuitSpec, ParameterSet
from .model import accuracy as model_accuracy
from .model import init_parameters

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
DEFAULT_FD_STEP = 1e-5


class GradientMethod(enum.Enum):
    PARAMETER_SHIFT = "parameter_shift"
    FINITE_DIFFERENCE = "finite_difference"
    ADJOINT = "adjoint"


@dataclass(frozen=True)
class EarlyStopping:
    """Stop when validation accuracy has not improved by more than
    min_delta for `patience` consecutive epochs."""

    patience: int = 60
    min_delta: float = 0.0

    def __post_init__(self):
        if self.patience < 1:
            raise InvalidParameterError(f"patience must be >= 1, got {self.patience}")
        if not math.isfinite(self.min_delta) or self.min_delta < 0:
            raise InvalidParameterError(f"min_delta must be finite and >= 0, got {self.min_delta}")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.

    batch_size None means full-batch updates. max_epochs 0 is allowed and
    returns the initial parameters untouched, which gives baselines for
    untrained circuits.
    """

    learning_rate: float = 0.05
    max_epochs: int = 300
    batch_size: int | None = None
    seed: int = 0
    early_stopping: EarlyStopping | None = field(default_factory=EarlyStopping)
    gradient_method: GradientMethod = GradientMethod.ADJOINT
    fd_step: float = DEFAULT_FD_STEP

    def __post_init__(self):
        if not math.isfinite(self.learning_rate) or self.learning_rate <= 0:
            raise InvalidParameterError(
                f"learning_rate must be finite and positive, got {self.learning_rate}"
            )
        if self.max_epochs < 0:
            raise InvalidParameterError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if not math.isfinite(self.fd_step) or self.fd_step <= 0:
            raise InvalidParameterError(f"fd_step must be finite and positive, got {self.fd_step}")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "max_epochs": self.max_epochs,
            "batch_size": 0 if self.batch_size is None else self.batch_size,
            "seed": self.seed,
            "early_stopping": None
            if self.early_stopping is None
            else {"patience": self.early_stopping.patience, "min_delta": self.early_stopping.min_delta},
            "gradient_method": self.gradient_method.value,
            "fd_step": self.fd_step,
        }


@dataclass(frozen=True)
class LossValue:
    """Total loss and its per-class contributions."""

    value: float
    per_class_terms: np.ndarray


@dataclass(frozen=True)
class GradientVector:
    """Loss gradient in the ParameterSet layout."""

    d_theta: np.ndarray
    d_omega: np.ndarray
    d_alpha: np.ndarray


class TrainResult(NamedTuple):
    """Best-validation parameters plus per-epoch traces (entry 0 is the
    state before any update)."""

    params: ParameterSet
    loss_trace: np.ndarray
    accuracy_trace: np.ndarray

    @property
    def best_epoch(self) -> int:
        return int(np.argmax(self.accuracy_trace))

    @property
    def epochs_run(self) -> int:
        return len(self.loss_trace) - 1


def _as_xy(batch) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(batch, LabeledDataset):
        return batch.features, batch.labels
    try:
        X, y = batch
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(
            "batch must be a LabeledDataset or a (features, labels) pair"
        ) from exc
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).reshape(-1)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[0] == 0:
        raise InvalidParameterError("batch must not be empty")
    if X.shape[0] != y.shape[0]:
        raise InvalidParameterError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    return X, y


def _one_hot(y: np.ndarray, n_classes: int) -> np.ndarray:
    yv = np.asarray(y).astype(np.int64).reshape(-1)
    if yv.size and (yv.min() < 0 or yv.max() >= n_classes):
        raise InvalidParameterError(
            f"labels must lie in [0, {n_classes - 1}], got range [{yv.min()}, {yv.max()}]"
        )
    Y = np.zeros((yv.size, n_classes))
    Y[np.arange(yv.size), yv] = 1.0
    return Y


def _loss_from_fidelities(F: np.ndarray, alpha: np.ndarray, Y: np.ndarray) -> LossValue:
    residual = alpha[None, :] * F - Y
    per_class = 0.5 * (residual**2).sum(axis=0)
    return LossValue(value=float(per_class.sum()), per_class_terms=per_class)


def weighted_fidelity_loss(spec: CircuitSpec, params: ParameterSet, batch) -> LossValue:
    """Squared weighted-fidelity error, summed over the batch."""
    X, y = _as_xy(batch)
    params.validate_for(spec)
    prog = engine.compile_circuit(spec)
    F = engine.batch_fidelities(prog, params.theta, params.omega, X)
    return _loss_from_fidelities(F, params.alpha, _one_hot(y, spec.n_classes))


def _alpha_gradient(F: np.ndarray, alpha: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return ((alpha[None, :] * F - Y) * F).sum(axis=0)


def gradient_adjoint(spec: CircuitSpec, params: ParameterSet, batch) -> GradientVector:
    """Exact loss gradient from one backward sweep per sample."""
    X, y = _as_xy(batch)
    params.validate_for(spec)
    prog = engine.compile_circuit(spec)
    Xaug = engine.augment_features(prog, X)
    angles = engine.angle_matrix(prog, params.theta, params.omega, Xaug)
    amps = engine.run_angles(prog, angles)
    F = engine.fidelities_from_amps(prog, amps)
    Y = _one_hot(y, spec.n_classes)
    w = params.alpha[None, :] * (params.alpha[None, :] * F - Y)
    d_theta, d_omega = engine.adjoint_param_grads(prog, angles, amps, Xaug, w)
    return GradientVector(d_theta, d_omega, _alpha_gradient(F, params.alpha, Y))


def gradient_parameter_shift(spec: CircuitSpec, params: ParameterSet, batch) -> GradientVector:
    """Loss gradient from +-pi/2 gate-angle shifts.

    Each trainable angle drives exactly one gate, so dF/da is
    (F(a + pi/2) - F(a - pi/2)) / 2 per sample; feature scalings pick up
    the chain-rule factor x_j; alpha is differentiated in closed form.
    """
    X, y = _as_xy(batch)
    params.validate_for(spec)
    prog = engine.compile_circuit(spec)
    Xaug = engine.augment_features(prog, X)
    angles = engine.angle_matrix(prog, params.theta, params.omega, Xaug)
    F = engine.fidelities_from_amps(prog, engine.run_angles(prog, angles))
    Y = _one_hot(y, spec.n_classes)
    weight = params.alpha[None, :] * (params.alpha[None, :] * F - Y)

    def shifted_dF(g: int) -> np.ndarray:
        saved = angles[:, g].copy()
        angles[:, g] = saved + np.pi / 2
        f_plus = engine.fidelities_from_amps(prog, engine.run_angles(prog, angles))
        angles[:, g] = saved - np.pi / 2
        f_minus = engine.fidelities_from_amps(prog, engine.run_angles(prog, angles))
        angles[:, g] = saved
        return 0.5 * (f_plus - f_minus)

    d_theta = np.empty(spec.theta_size)
    for k in range(spec.theta_size):
        d_theta[k] = float((weight * shifted_dF(int(prog.op_for_theta[k]))).sum())
    d_omega = np.empty(spec.omega_size)
    for j in range(spec.omega_size):
        g = int(prog.op_for_omega[j])
        xcol = Xaug[:, prog.fidx[g]]
        if not np.any(xcol):
            d_omega[j] = 0.0
            continue
        d_omega[j] = float(((weight * shifted_dF(g)).sum(axis=1) * xcol).sum())
    return GradientVector(d_theta, d_omega, _alpha_gradient(F, params.alpha, Y))


def gradient_finite_difference(
    spec: CircuitSpec, params: ParameterSet, batch, h: float = DEFAULT_FD_STEP
) -> GradientVector:
    """Central-difference loss gradient, the validation oracle."""
    if not math.isfinite(h) or h <= 0:
        raise InvalidParameterError(f"step h must be finite and positive, got {h}")
    X, y = _as_xy(batch)
    params.validate_for(spec)
    prog = engine.compile_circuit(spec)
    Xaug = engine.augment_features(prog, X)
    Y = _one_hot(y, spec.n_classes)
    angles = engine.angle_matrix(prog, params.theta, params.omega, Xaug)

    def loss_at(ang: np.ndarray, alpha: np.ndarray) -> float:
        F = engine.fidelities_from_amps(prog, engine.run_angles(prog, ang))
        return _loss_from_fidelities(F, alpha, Y).value

    def column_diff(g: int, plus: np.ndarray, minus: np.ndarray) -> float:
        saved = angles[:, g].copy()
        angles[:, g] = plus
        up = loss_at(angles, params.alpha)
        angles[:, g] = minus
        down = loss_at(angles, params.alpha)
        angles[:, g] = saved
        return (up - down) / (2 * h)

    d_theta = np.empty(spec.theta_size)
    for k in range(spec.theta_size):
        g = int(prog.op_for_theta[k])
        base = angles[:, g]
        d_theta[k] = column_diff(g, base + h, base - h)
    d_omega = np.empty(spec.omega_size)
    for j in range(spec.omega_size):
        g = int(prog.op_for_omega[j])
        xcol = Xaug[:, prog.fidx[g]]
        d_omega[j] = column_diff(g, (params.omega[j] + h) * xcol, (params.omega[j] - h) * xcol)
    F = engine.fidelities_from_amps(prog, engine.run_angles(prog, angles))
    d_alpha = np.empty(spec.n_classes)
    for c in range(spec.n_classes):
        ap = params.alpha.copy()
        ap[c] += h
        am = params.alpha.copy()
        am[c] -= h
        d_alpha[c] = (
            _loss_from_fidelities(F, ap, Y).value - _loss_from_fidelities(F, am, Y).value
        ) / (2 * h)
    return GradientVector(d_theta, d_omega, d_alpha)


_GRADIENTS: dict[GradientMethod, Callable] = {
    GradientMethod.ADJOINT: gradient_adjoint,
    GradientMethod.PARAMETER_SHIFT: gradient_parameter_shift,
    GradientMethod.FINITE_DIFFERENCE: gradient_finite_difference,
}


class _Adam:
    """Adam with bias correction over one flat parameter vector."""

    def __init__(self, size: int, learning_rate: float):
        self.lr = learning_rate
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, p: np.ndarray, g: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = ADAM_BETA1 * self.m + (1 - ADAM_BETA1) * g
        self.v = ADAM_BETA2 * self.v + (1 - ADAM_BETA2) * g**2
        m_hat = self.m / (1 - ADAM_BETA1**self.t)
        v_hat = self.v / (1 - ADAM_BETA2**self.t)
        return p - self.lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def _pack(params: ParameterSet) -> np.ndarray:
    return np.concatenate([params.theta, params.omega, params.alpha])


def _unpack(vec: np.ndarray, spec: CircuitSpec) -> ParameterSet:
    t, o = spec.theta_size, spec.omega_size
    return ParameterSet(vec[:t], vec[t : t + o], vec[t + o :])


def train(
    spec: CircuitSpec,
    config: TrainConfig,
    train_set,
    validation_set,
) -> TrainResult:
    """Optimize all parameters jointly with Adam and return the state that
    scored the best validation accuracy; among epochs tied on accuracy the
    one with the lowest validation loss wins.

    Traces cover epochs 0..E where entry 0 is the freshly initialized
    model; the loss trace holds full training-set loss, the accuracy trace
    validation accuracy. Raises TrainingDivergedError (carrying the epoch
    and a parameter snapshot) if the loss stops being finite.
    """
    Xtr, ytr = _as_xy(train_set)
    Xval, yval = _as_xy(validation_set)
    rng = np.random.default_rng(config.seed)
    params = init_parameters(spec, rng)
    prog = engine.compile_circuit(spec)
    Ytr = _one_hot(ytr, spec.n_classes)
    yval_v = np.asarray(yval).reshape(-1).astype(np.int64)
    Yval = _one_hot(yval_v, spec.n_classes)
    grad_fn = _GRADIENTS[config.gradient_method]
    n_rows = Xtr.shape[0]
    batch = n_rows if config.batch_size is None else min(config.batch_size, n_rows)

    def train_loss(p: ParameterSet) -> float:
        F = engine.batch_fidelities(prog, p.theta, p.omega, Xtr)
        return _loss_from_fidelities(F, p.alpha, Ytr).value

    def val_metrics(p: ParameterSet) -> tuple:
        F = engine.batch_fidelities(prog, p.theta, p.omega, Xval)
        preds = np.argmax(p.alpha[None, :] * F, axis=1)
        acc = float(np.mean(preds == yval_v))
        return acc, _loss_from_fidelities(F, p.alpha, Yval).value

    losses = [train_loss(params)]
    acc0, vloss0 = val_metrics(params)
    accuracies = [acc0]
    if not math.isfinite(losses[0]):
        raise TrainingDivergedError(0, params.copy())
    best_params = params.copy()
    best_acc = acc0
    best_vloss = vloss0
    stop_best = acc0
    wait = 0
    adam = _Adam(spec.theta_size + spec.omega_size + spec.n_classes, config.learning_rate)

    for epoch in range(1, config.max_epochs + 1):
        if batch >= n_rows:
            order = np.arange(n_rows)
        else:
            order = rng.permutation(n_rows)
        for start in range(0, n_rows, batch):
            rows = order[start : start + batch]
            grad = grad_fn(spec, params, (Xtr[rows], ytr[rows]))
            vec = adam.step(
                _pack(params), np.concatenate([grad.d_theta, grad.d_omega, grad.d_alpha])
            )
            params = _unpack(vec, spec)
        loss = train_loss(params)
        acc, vloss = val_metrics(params)
        losses.append(loss)
        accuracies.append(acc)
        if not math.isfinite(loss):
            raise TrainingDivergedError(epoch, params.copy())
        if acc > best_acc or (acc == best_acc and vloss < best_vloss):
            best_acc = acc
            best_vloss = vloss
            best_params = params.copy()
        if config.early_stopping is not None:
            if acc > stop_best + config.early_stopping.min_delta:
                stop_best = acc
                wait = 0
            else:
                wait += 1
                if wait >= config.early_stopping.patience:
                    break

    return TrainResult(best_params, np.asarray(losses), np.asarray(accuracies))


def derive_seed(root: int, *path: int) -> int:
    """Stable 63-bit seed derived from a root seed and an index path."""
    ss = np.random.SeedSequence([int(root) & 0x7FFFFFFFFFFFFFFF, *[int(p) for p in path]])
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0] & 0x7FFFFFFFFFFFFFFF)


_SPLIT_TAG = 1
_INIT_TAG = 2
_VAL_TAG = 3
_CARVE_ATTEMPTS = 32


def carve_validation(
    train_full: LabeledDataset, validation_fraction: float, root_seed: int, rep: int = 0
) -> tuple[LabeledDataset, LabeledDataset]:
    """Split off a validation part, retrying derived seeds until both
    classes appear on both sides (small sets easily miss one)."""
    if not 0.0 < validation_fraction < 1.0:
        raise InvalidParameterError(
            f"validation_fraction must lie strictly between 0 and 1, got {validation_fraction}"
        )
    last_error: Exception | None = None
    for attempt in range(_CARVE_ATTEMPTS):
        seed = derive_seed(root_seed, _VAL_TAG, rep, attempt)
        try:
            return split(train_full, SplitSpec(1.0 - validation_fraction, seed))
        except InvalidParameterError as exc:
            last_error = exc
    raise InvalidParameterError(
        "could not carve a validation set containing both classes; "
        "the training set is too small or too imbalanced"
    ) from last_error


def _run_grid_trial(
    spec: CircuitSpec,
    dataset: LabeledDataset,
    config: TrainConfig,
    train_fraction: float,
    validation_fraction: float,
    split_seed: int,
    val_root: int,
    rep: int,
) -> results.TrialRecord:
    started = time.perf_counter()
    train_full, test = split(dataset, SplitSpec(train_fraction, split_seed))
    fit, val = carve_validation(train_full, validation_fraction, val_root, rep)
    result = train(spec, config, fit, val)
    loss0 = float(result.loss_trace[0])
    final_loss = float(
        weighted_fidelity_loss(spec, result.params, (train_full.features, train_full.labels)).value
    )
    train_acc = model_accuracy(spec, result.params, train_full.features, train_full.labels)
    test_acc = model_accuracy(spec, result.params, test.features, test.labels)
    return results.TrialRecord(
        seed=config.seed,
        split_seed=split_seed,
        train_error=1.0 - train_acc,
        test_accuracy=test_acc,
        initial_train_loss=loss0,
        final_train_loss=final_loss,
        best_epoch=result.best_epoch,
        epochs_run=result.epochs_run,
        loss_trace=[float(v) for v in result.loss_trace],
        accuracy_trace=[float(v) for v in result.accuracy_trace],
        wall_time_s=time.perf_counter() - started,
    )


def grid_search(
    spec_factory: Callable[[int], CircuitSpec],
    grid: dict,
    repetitions: int,
    dataset: LabeledDataset,
    *,
    base_config: TrainConfig = TrainConfig(),
    train_fraction: float = 0.5,
    validation_fraction: float = 0.25,
    model_name: str = "model",
    layer_num: int = 0,
    executor=None,
) -> results.BenchmarkReport:
    """Train every lattice point `repetitions` times and pick by train error.

    The grid maps "learning_rate" and "n_qubits" to candidate lists; the
    lattice is their cartesian product. Every repetition r uses the same
    derived data split across all lattice points (and across calls sharing
    the seed in base_config), so comparisons are paired; initialization
    seeds differ per (point, repetition). The report contains every trial
    and marks the point with the lowest mean training error; its mean test
    accuracy is the headline number.
    """
    if repetitions < 1:
        raise InvalidParameterError(f"repetitions must be >= 1, got {repetitions}")
    lrs = list(grid.get("learning_rate", [base_config.learning_rate]))
    qubit_counts = list(grid.get("n_qubits", []))
    if not lrs or not qubit_counts:
        raise InvalidParameterError(
            "the grid needs nonempty learning_rate and n_qubits candidate lists"
        )
    unknown = set(grid) - {"learning_rate", "n_qubits"}
    if unknown:
        raise InvalidParameterError(f"unsupported grid axes: {sorted(unknown)}")
    root = base_config.seed
    cell_key = (sum(ord(ch) for ch in model_name) << 16) + layer_num

    points = [(lr, q) for lr in lrs for q in qubit_counts]
    jobs = []
    for p_idx, (lr, q) in enumerate(points):
        spec = spec_factory(int(q))
        for rep in range(repetitions):
            config = TrainConfig(
                learning_rate=float(lr),
                max_epochs=base_config.max_epochs,
                batch_size=base_config.batch_size,
                seed=derive_seed(root, _INIT_TAG, cell_key, p_idx, rep),
                early_stopping=base_config.early_stopping,
                gradient_method=base_config.gradient_method,
                fd_step=base_config.fd_step,
            )
            jobs.append(
                (
                    p_idx,
                    spec,
                    dataset,
                    config,
                    train_fraction,
                    validation_fraction,
                    derive_seed(root, _SPLIT_TAG, rep),
                    root,
                    rep,
                )
            )

    trials: dict[int, list[results.TrialRecord]] = {i: [] for i in range(len(points))}
    if executor is None:
        for job in jobs:
            trials[job[0]].append(_run_grid_trial(*job[1:]))
    else:
        futures = [(job[0], executor.submit(_run_grid_trial, *job[1:])) for job in jobs]
        for p_idx, fut in futures:
            trials[p_idx].append(fut.result())

    summaries = []
    for p_idx, (lr, q) in enumerate(points):
        recs = trials[p_idx]
        summaries.append(
            results.GridPointSummary(
                hyperparams={"learning_rate": float(lr), "n_qubits": int(q)},
                trials=recs,
                mean_train_error=float(np.mean([t.train_error for t in recs])),
                mean_test_accuracy=float(np.mean([t.test_accuracy for t in recs])),
            )
        )
    selected = min(range(len(summaries)), key=lambda i: summaries[i].mean_train_error)
    cell = results.BenchmarkCell(
        model=model_name,
        layer_num=layer_num,
        points=summaries,
        selected_index=selected,
        mean_test_accuracy=summaries[selected].mean_test_accuracy,
    )
    return results.BenchmarkReport(cells=[cell], root_seed=root, repetitions=repetitions)
