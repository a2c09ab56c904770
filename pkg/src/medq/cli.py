"""Command-line experiment runner.

Subcommands: `generate` (datasets to CSV), `train` (one training run to a
JSON result), `evaluate` (saved parameters against a dataset),
`grid-search` (one model through the hyperparameter lattice) and
`benchmark` (models x layer counts, the accuracy-table reproduction).

Configuration is a flat key-value file (a TOML-compatible subset: one
`key = value` per line, quoted strings, integers, floats, booleans and
`#` comments) and every key can be overridden by the matching CLI flag.
Results are JSON with the resolved config, its hash, every derived seed
and an environment manifest embedded, so any run can be reproduced from
its output file alone. Exit status is 0 on success, 2 for configuration
or validation problems and 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import backend, data, results, training
from .embeddings import EmbeddingKind
from .errors import (
    CsvFormatError,
    InvalidParameterError,
    MedqError,
    UnsupportedConfigError,
)
from .model import CircuitSpec, ParameterSet, accuracy, build_medq, build_reuploading_baseline

_ANGLE_KINDS = {"x": EmbeddingKind.ANGLE_X, "y": EmbeddingKind.ANGLE_Y, "z": EmbeddingKind.ANGLE_Z}
_MODELS = ("medq", "reuploading")
_GRADIENTS = tuple(m.value for m in training.GradientMethod)


def _strip_comment(value: str) -> str:
    in_string = False
    for i, ch in enumerate(value):
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            return value[:i]
    return value


def _parse_scalar(raw: str, where: str):
    value = raw.strip()
    if value.startswith('"'):
        if len(value) < 2 or not value.endswith('"'):
            raise InvalidParameterError(f"{where}: unterminated string {value!r}")
        return value[1:-1]
    if value in ("true", "false"):
        return value == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        raise InvalidParameterError(f"{where}: cannot parse value {value!r}") from None


def parse_config_file(path) -> dict:
    """Read a flat key-value config file into a mapping."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except FileNotFoundError:
        raise InvalidParameterError(f"config file not found: {path}") from None
    out: dict = {}
    for lineno, raw in enumerate(lines, start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key or not value.strip():
            raise InvalidParameterError(f"{path}:{lineno}: expected key = value")
        out[key] = _parse_scalar(value, f"{path}:{lineno}")
    return out


def _int_list(value, key: str) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    if isinstance(value, (int, np.integer)):
        return (int(value),)
    try:
        return tuple(int(p.strip()) for p in str(value).split(",") if p.strip())
    except ValueError:
        raise InvalidParameterError(f"{key} must be a comma-separated integer list") from None


def _float_list(value, key: str) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    if isinstance(value, (int, float, np.floating)):
        return (float(value),)
    try:
        return tuple(float(p.strip()) for p in str(value).split(",") if p.strip())
    except ValueError:
        raise InvalidParameterError(f"{key} must be a comma-separated number list") from None


def _str_list(value, key: str) -> tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(str(v) for v in value)
    return tuple(p.strip() for p in str(value).split(",") if p.strip())


@dataclass
class ExperimentConfig:
    """Resolved settings for the train/grid-search/benchmark commands."""

    model: str = "medq"
    layers: int = 3
    n_qubits: int = 4
    angle_axis: str = "y"
    dataset: str = ""
    data_kind: str = "linear"
    data_dim: int = 10
    data_n: int = 600
    data_margin: float = 0.05
    data_seed: int = 11
    data_input: str = ""
    data_digits: tuple[int, ...] = (0, 1)
    train_fraction: float = 0.5
    val_fraction: float = 0.25
    learning_rate: float = 0.05
    max_epochs: int = 300
    batch_size: int = 0
    gradient: str = "adjoint"
    patience: int = 60
    min_delta: float = 0.0
    seed: int = 7
    grid_learning_rates: tuple[float, ...] = (0.01, 0.05, 0.1)
    grid_n_qubits: tuple[int, ...] = ()
    repetitions: int = 5
    models: tuple[str, ...] = ("medq", "reuploading")
    layer_counts: tuple[int, ...] = (3, 4, 5, 6, 7)
    out: str = ""
    result: str = ""

    _LIST_FIELDS = {
        "data_digits": _int_list,
        "grid_learning_rates": _float_list,
        "grid_n_qubits": _int_list,
        "models": _str_list,
        "layer_counts": _int_list,
    }

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        kwargs: dict = {}
        for key, value in mapping.items():
            if value is None:
                continue
            if key not in known:
                raise InvalidParameterError(f"unknown config key {key!r}")
            if key in cls._LIST_FIELDS:
                kwargs[key] = cls._LIST_FIELDS[key](value, key)  # type: ignore[operator]
            else:
                ftype = known[key].type
                try:
                    if ftype == "int":
                        kwargs[key] = int(value)
                    elif ftype == "float":
                        kwargs[key] = float(value)
                    else:
                        kwargs[key] = str(value)
                except (TypeError, ValueError):
                    raise InvalidParameterError(f"bad value for {key}: {value!r}") from None
        config = cls(**kwargs)
        config.validate()
        return config

    def validate(self) -> None:
        if self.model not in _MODELS:
            raise InvalidParameterError(f"model must be one of {_MODELS}, got {self.model!r}")
        if self.layers < 1:
            raise InvalidParameterError(f"layers must be >= 1, got {self.layers}")
        if self.n_qubits < 1:
            raise InvalidParameterError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if self.angle_axis not in _ANGLE_KINDS:
            raise InvalidParameterError(f"angle_axis must be x, y or z, got {self.angle_axis!r}")
        if self.data_kind not in ("linear", "pca"):
            raise InvalidParameterError(f"data_kind must be linear or pca, got {self.data_kind!r}")
        if self.data_dim < 1:
            raise InvalidParameterError(f"data_dim must be >= 1, got {self.data_dim}")
        if self.data_n < 2:
            raise InvalidParameterError(f"data_n must be >= 2, got {self.data_n}")
        if self.data_margin < 0:
            raise InvalidParameterError(f"data_margin must be >= 0, got {self.data_margin}")
        if len(self.data_digits) != 2 or self.data_digits[0] == self.data_digits[1]:
            raise InvalidParameterError(f"data_digits must be two distinct labels, got {self.data_digits}")
        for name, frac in (("train_fraction", self.train_fraction), ("val_fraction", self.val_fraction)):
            if not 0.0 < frac < 1.0:
                raise InvalidParameterError(f"{name} must lie strictly between 0 and 1, got {frac}")
        if self.learning_rate <= 0:
            raise InvalidParameterError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_epochs < 0:
            raise InvalidParameterError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if self.batch_size < 0:
            raise InvalidParameterError(f"batch_size must be >= 0 (0 = full batch), got {self.batch_size}")
        if self.gradient not in _GRADIENTS:
            raise InvalidParameterError(f"gradient must be one of {_GRADIENTS}, got {self.gradient!r}")
        if self.patience < 0:
            raise InvalidParameterError(f"patience must be >= 0 (0 disables), got {self.patience}")
        if self.min_delta < 0:
            raise InvalidParameterError(f"min_delta must be >= 0, got {self.min_delta}")
        if self.repetitions < 1:
            raise InvalidParameterError(f"repetitions must be >= 1, got {self.repetitions}")
        if not self.grid_learning_rates:
            raise InvalidParameterError("grid_learning_rates must not be empty")
        if not self.layer_counts or any(l < 1 for l in self.layer_counts):
            raise InvalidParameterError(f"layer_counts must be positive, got {self.layer_counts}")
        for m in self.models:
            if m not in _MODELS:
                raise InvalidParameterError(f"models entries must be in {_MODELS}, got {m!r}")
        if not self.models:
            raise InvalidParameterError("models must not be empty")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in self._LIST_FIELDS:
            out[key] = list(out[key])
        return out

    def build_spec(self, model: str | None = None, layers: int | None = None,
                   n_qubits: int | None = None, feature_dim: int | None = None) -> CircuitSpec:
        model = model or self.model
        layers = self.layers if layers is None else layers
        n_qubits = self.n_qubits if n_qubits is None else n_qubits
        d = self.data_dim if feature_dim is None else feature_dim
        if model == "medq":
            return build_medq(layers, d, n_qubits, angle_kind=_ANGLE_KINDS[self.angle_axis])
        return build_reuploading_baseline(layers, d, n_qubits)

    def train_config(self, seed: int | None = None, learning_rate: float | None = None) -> training.TrainConfig:
        stopping = None
        if self.patience > 0:
            stopping = training.EarlyStopping(patience=self.patience, min_delta=self.min_delta)
        return training.TrainConfig(
            learning_rate=self.learning_rate if learning_rate is None else learning_rate,
            max_epochs=self.max_epochs,
            batch_size=self.batch_size or None,
            seed=self.seed if seed is None else seed,
            early_stopping=stopping,
            gradient_method=training.GradientMethod(self.gradient),
        )

    def load_dataset(self) -> data.LabeledDataset:
        if self.dataset:
            return data.load_csv(self.dataset)
        if self.data_kind != "linear":
            raise InvalidParameterError(
                "training commands need dataset = <csv path> or data_kind = \"linear\""
            )
        return data.gen_linear_separable(self.data_dim, self.data_n, self.data_margin, self.data_seed)

    def grid(self, feature_dim: int) -> dict:
        qubit_axis = self.grid_n_qubits or _default_qubit_grid(feature_dim)
        return {"learning_rate": list(self.grid_learning_rates), "n_qubits": list(qubit_axis)}


def _default_qubit_grid(feature_dim: int) -> tuple[int, ...]:
    return tuple(sorted({2, 4, min(feature_dim, 6)}))


def _resolve_config(args: argparse.Namespace, keys: list[str]) -> ExperimentConfig:
    mapping: dict = {}
    if getattr(args, "config", None):
        mapping.update(parse_config_file(args.config))
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    return ExperimentConfig.from_mapping(mapping)


def _write_json(path, payload: dict) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_generate(config: ExperimentConfig) -> int:
    """Write a dataset CSV plus a provenance sidecar."""
    config.out = config.out or "dataset.csv"
    if config.data_kind == "linear":
        dataset = data.gen_linear_separable(
            config.data_dim, config.data_n, config.data_margin, config.data_seed
        )
    else:
        if not config.data_input:
            raise InvalidParameterError("pca generation needs data_input = <raw image csv>")
        pixels, raw_labels = data.load_image_csv(config.data_input)
        a, b = config.data_digits
        keep = (raw_labels == a) | (raw_labels == b)
        if not keep.any():
            raise InvalidParameterError(f"no rows with labels {a} or {b} in {config.data_input}")
        pixels = pixels[keep]
        binary = (raw_labels[keep] == b).astype(np.int64)
        reduced, projection = data.pca_reduce(pixels, config.data_dim)
        dataset = data.LabeledDataset(
            features=reduced,
            labels=binary,
            provenance={
                "generator": "pca_images",
                "source": config.data_input,
                "digits": [int(a), int(b)],
                "target_dim": config.data_dim,
                "retained_variance_ratio": projection.retained_variance_ratio,
            },
        )
    data.save_csv(dataset, config.out)
    resolved = config.to_dict()
    _write_json(
        config.out + ".meta.json",
        {
            "schema": "medq-dataset-meta/1",
            "config": resolved,
            "config_hash": results.config_hash(resolved),
            "provenance": dataset.provenance,
            "n_samples": dataset.n_samples,
            "feature_dim": dataset.d,
            "environment": results.environment_manifest(),
        },
    )
    print(f"wrote {dataset.n_samples} samples ({dataset.d} features) to {config.out}")
    return 0


def _train_once(config: ExperimentConfig, dataset: data.LabeledDataset):
    split_seed = training.derive_seed(config.seed, training._SPLIT_TAG, 0)
    train_full, test = data.split(dataset, data.SplitSpec(config.train_fraction, split_seed))
    fit, val = training.carve_validation(train_full, config.val_fraction, config.seed, 0)
    train_seed = training.derive_seed(config.seed, training._INIT_TAG, 0)
    spec = config.build_spec(feature_dim=dataset.d)
    result = training.train(spec, config.train_config(seed=train_seed), fit, val)
    return spec, result, train_full, test, split_seed, train_seed


def cmd_train(config: ExperimentConfig) -> int:
    """Run one training and write the result JSON."""
    config.out = config.out or "results.json"
    started = time.perf_counter()
    dataset = config.load_dataset()
    spec, result, train_full, test, split_seed, train_seed = _train_once(config, dataset)
    final_loss = training.weighted_fidelity_loss(
        spec, result.params, (train_full.features, train_full.labels)
    )
    resolved = config.to_dict()
    payload = {
        "schema": "medq-train-result/1",
        "config": resolved,
        "config_hash": results.config_hash(resolved),
        "environment": results.environment_manifest(),
        "seeds": {"root": config.seed, "split": split_seed, "train": train_seed},
        "circuit": spec.to_dict(),
        "params": result.params.to_dict(),
        "loss_trace": [float(v) for v in result.loss_trace],
        "accuracy_trace": [float(v) for v in result.accuracy_trace],
        "best_epoch": result.best_epoch,
        "epochs_run": result.epochs_run,
        "initial_train_loss": float(result.loss_trace[0]),
        "final_train_loss": float(final_loss.value),
        "train_accuracy": accuracy(spec, result.params, train_full.features, train_full.labels),
        "test_accuracy": accuracy(spec, result.params, test.features, test.labels),
        "wall_time_s": time.perf_counter() - started,
    }
    _write_json(config.out, payload)
    print(
        f"trained {config.model} layers={config.layers} n_qubits={config.n_qubits}: "
        f"test accuracy {payload['test_accuracy']:.4f} -> {config.out}"
    )
    return 0


def cmd_evaluate(config: ExperimentConfig) -> int:
    """Re-score a saved training result on a dataset."""
    if not config.result:
        raise InvalidParameterError("evaluate needs result = <train result json>")
    if not config.dataset:
        raise InvalidParameterError("evaluate needs dataset = <csv path>")
    try:
        with open(config.result, "r", encoding="utf-8") as fh:
            saved = json.load(fh)
    except FileNotFoundError:
        raise InvalidParameterError(f"result file not found: {config.result}") from None
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"result file is not valid JSON: {exc}") from None
    if "circuit" not in saved or "params" not in saved:
        raise InvalidParameterError(f"{config.result} is not a training result file")
    spec = CircuitSpec.from_dict(saved["circuit"])
    params = ParameterSet.from_dict(saved["params"])
    dataset = data.load_csv(config.dataset)
    acc = accuracy(spec, params, dataset.features, dataset.labels)
    print(f"accuracy {acc:.4f} on {dataset.n_samples} samples from {config.dataset}")
    if config.out:
        _write_json(
            config.out,
            {
                "schema": "medq-evaluation/1",
                "result_file": config.result,
                "result_config_hash": saved.get("config_hash", ""),
                "dataset": config.dataset,
                "n_samples": dataset.n_samples,
                "accuracy": acc,
            },
        )
    return 0


def _make_executor():
    workers = backend.thread_count()
    if workers > 1:
        return ProcessPoolExecutor(max_workers=workers)
    return None


def cmd_grid_search(config: ExperimentConfig) -> int:
    """Grid-search one model at one layer count; write the report."""
    config.out = config.out or "results.json"
    dataset = config.load_dataset()
    executor = _make_executor()
    try:
        report = training.grid_search(
            lambda q: config.build_spec(n_qubits=q, feature_dim=dataset.d),
            config.grid(dataset.d),
            config.repetitions,
            dataset,
            base_config=config.train_config(),
            train_fraction=config.train_fraction,
            validation_fraction=config.val_fraction,
            model_name=config.model,
            layer_num=config.layers,
            executor=executor,
        )
    finally:
        if executor is not None:
            executor.shutdown()
    resolved = config.to_dict()
    report.config = resolved
    report.config_digest = results.config_hash(resolved)
    report.save(config.out)
    print(report.render_table())
    print(f"report -> {config.out}")
    return 0


def cmd_benchmark(config: ExperimentConfig) -> int:
    """Sweep models x layer counts with grid search per cell."""
    config.out = config.out or "results.json"
    dataset = config.load_dataset()
    executor = _make_executor()
    reports = []
    try:
        for model in config.models:
            for layer_num in config.layer_counts:
                reports.append(
                    training.grid_search(
                        lambda q, m=model, l=layer_num: config.build_spec(
                            model=m, layers=l, n_qubits=q, feature_dim=dataset.d
                        ),
                        config.grid(dataset.d),
                        config.repetitions,
                        dataset,
                        base_config=config.train_config(),
                        train_fraction=config.train_fraction,
                        validation_fraction=config.val_fraction,
                        model_name=model,
                        layer_num=layer_num,
                        executor=executor,
                    )
                )
    finally:
        if executor is not None:
            executor.shutdown()
    report = results.BenchmarkReport.merge(reports)
    resolved = config.to_dict()
    report.config = resolved
    report.config_digest = results.config_hash(resolved)
    report.save(config.out)
    stem, _ = os.path.splitext(config.out)
    with open(stem + ".csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_csv())
    print(report.render_table())
    print(f"report -> {config.out}")
    return 0


def _add_common_flags(parser: argparse.ArgumentParser, keys: list[str]) -> None:
    flags = {
        "model": dict(choices=_MODELS),
        "layers": dict(type=int),
        "n_qubits": dict(type=int),
        "angle_axis": dict(choices=tuple(_ANGLE_KINDS)),
        "dataset": dict(),
        "data_kind": dict(choices=("linear", "pca")),
        "data_dim": dict(type=int),
        "data_n": dict(type=int),
        "data_margin": dict(type=float),
        "data_seed": dict(type=int),
        "data_input": dict(),
        "data_digits": dict(),
        "train_fraction": dict(type=float),
        "val_fraction": dict(type=float),
        "learning_rate": dict(type=float),
        "max_epochs": dict(type=int),
        "batch_size": dict(type=int),
        "gradient": dict(choices=_GRADIENTS),
        "patience": dict(type=int),
        "min_delta": dict(type=float),
        "seed": dict(type=int),
        "grid_learning_rates": dict(),
        "grid_n_qubits": dict(),
        "repetitions": dict(type=int),
        "models": dict(),
        "layer_counts": dict(),
        "out": dict(),
        "result": dict(),
    }
    for key in keys:
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, **flags[key])


_TRAIN_KEYS = [
    "model", "layers", "n_qubits", "angle_axis", "dataset", "data_kind", "data_dim",
    "data_n", "data_margin", "data_seed", "train_fraction", "val_fraction",
    "learning_rate", "max_epochs", "batch_size", "gradient", "patience", "min_delta",
    "seed", "out",
]
_GRID_KEYS = _TRAIN_KEYS + ["grid_learning_rates", "grid_n_qubits", "repetitions"]
_BENCH_KEYS = _GRID_KEYS + ["models", "layer_counts"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="medq",
        description="Multi-encoding data-reuploading quantum classifier experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a dataset CSV and provenance sidecar")
    p_gen.add_argument("--config", default=None)
    p_gen.add_argument("--kind", dest="data_kind", choices=("linear", "pca"), default=None)
    p_gen.add_argument("--dim", dest="data_dim", type=int, default=None)
    p_gen.add_argument("--n", dest="data_n", type=int, default=None)
    p_gen.add_argument("--margin", dest="data_margin", type=float, default=None)
    p_gen.add_argument("--seed", dest="data_seed", type=int, default=None)
    p_gen.add_argument("--input", dest="data_input", default=None)
    p_gen.add_argument("--digits", dest="data_digits", default=None)
    p_gen.add_argument("--out", dest="out", default=None)
    p_gen.set_defaults(
        handler=cmd_generate,
        keys=["data_kind", "data_dim", "data_n", "data_margin", "data_seed",
              "data_input", "data_digits", "out"],
    )

    p_train = sub.add_parser("train", help="run one training, write a JSON result")
    p_train.add_argument("--config", default=None)
    _add_common_flags(p_train, _TRAIN_KEYS)
    p_train.set_defaults(handler=cmd_train, keys=_TRAIN_KEYS)

    p_eval = sub.add_parser("evaluate", help="score a saved result on a dataset")
    p_eval.add_argument("--config", default=None)
    _add_common_flags(p_eval, ["result", "dataset", "out"])
    p_eval.set_defaults(handler=cmd_evaluate, keys=["result", "dataset", "out"])

    p_grid = sub.add_parser("grid-search", help="hyperparameter search for one model")
    p_grid.add_argument("--config", default=None)
    _add_common_flags(p_grid, _GRID_KEYS)
    p_grid.set_defaults(handler=cmd_grid_search, keys=_GRID_KEYS)

    p_bench = sub.add_parser("benchmark", help="models x layer counts accuracy table")
    p_bench.add_argument("--config", default=None)
    _add_common_flags(p_bench, _BENCH_KEYS)
    p_bench.set_defaults(handler=cmd_benchmark, keys=_BENCH_KEYS)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args, args.keys)
        return args.handler(config)
    except (InvalidParameterError, UnsupportedConfigError, CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MedqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
