"""Benchmark result records, their JSON form and table rendering.

A BenchmarkReport holds one cell per (model, layer count). Every cell
keeps the full grid: per lattice point the individual trials (seeds,
traces, errors) plus their means, and the index of the point selected by
lowest mean training error. Reported means always equal the arithmetic
mean of the listed trials; `verify` rechecks that invariant.

Timing fields (`wall_time_s`, `created_utc`) describe the run that wrote
the file and are the only fields excluded when comparing reports for
reproducibility.
"""

from __future__ import annotations

import hashlib
import json
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import InvalidParameterError


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form of a config mapping."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def environment_manifest() -> dict:
    from . import __version__
    from .backend import active_backend

    try:
        import numba

        numba_version = numba.__version__
    except ImportError:
        numba_version = None
    return {
        "package": "medq",
        "version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "numba": numba_version,
        "backend": active_backend(),
        "platform": platform.platform(),
    }


@dataclass
class TrialRecord:
    """One training run inside a grid search."""

    seed: int
    split_seed: int
    train_error: float
    test_accuracy: float
    initial_train_loss: float
    final_train_loss: float
    best_epoch: int
    epochs_run: int
    loss_trace: list
    accuracy_trace: list
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "split_seed": self.split_seed,
            "train_error": self.train_error,
            "test_accuracy": self.test_accuracy,
            "initial_train_loss": self.initial_train_loss,
            "final_train_loss": self.final_train_loss,
            "best_epoch": self.best_epoch,
            "epochs_run": self.epochs_run,
            "loss_trace": self.loss_trace,
            "accuracy_trace": self.accuracy_trace,
            "wall_time_s": self.wall_time_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrialRecord":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


@dataclass
class GridPointSummary:
    """All repetitions of one hyperparameter lattice point."""

    hyperparams: dict
    trials: list
    mean_train_error: float
    mean_test_accuracy: float

    def to_dict(self) -> dict:
        return {
            "hyperparams": self.hyperparams,
            "mean_train_error": self.mean_train_error,
            "mean_test_accuracy": self.mean_test_accuracy,
            "trials": [t.to_dict() for t in self.trials],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridPointSummary":
        return cls(
            hyperparams=data["hyperparams"],
            trials=[TrialRecord.from_dict(t) for t in data["trials"]],
            mean_train_error=data["mean_train_error"],
            mean_test_accuracy=data["mean_test_accuracy"],
        )


@dataclass
class BenchmarkCell:
    """Grid-search outcome for one (model, layer count) pair."""

    model: str
    layer_num: int
    points: list
    selected_index: int
    mean_test_accuracy: float

    @property
    def selected(self) -> GridPointSummary:
        return self.points[self.selected_index]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "layer_num": self.layer_num,
            "selected_index": self.selected_index,
            "selected_hyperparams": self.selected.hyperparams,
            "mean_test_accuracy": self.mean_test_accuracy,
            "points": [p.to_dict() for p in self.points],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkCell":
        return cls(
            model=data["model"],
            layer_num=data["layer_num"],
            points=[GridPointSummary.from_dict(p) for p in data["points"]],
            selected_index=data["selected_index"],
            mean_test_accuracy=data["mean_test_accuracy"],
        )


@dataclass
class BenchmarkReport:
    """Collection of benchmark cells plus reproducibility metadata."""

    cells: list
    root_seed: int
    repetitions: int
    config: dict = field(default_factory=dict)
    config_digest: str = ""
    environment: dict = field(default_factory=environment_manifest)
    created_utc: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    @classmethod
    def merge(cls, reports: list) -> "BenchmarkReport":
        """Combine single-cell reports that share a root seed."""
        if not reports:
            raise InvalidParameterError("cannot merge zero reports")
        first = reports[0]
        cells = [c for r in reports for c in r.cells]
        return cls(
            cells=cells,
            root_seed=first.root_seed,
            repetitions=first.repetitions,
            config=first.config,
            config_digest=first.config_digest,
        )

    def cell(self, model: str, layer_num: int) -> BenchmarkCell:
        for c in self.cells:
            if c.model == model and c.layer_num == layer_num:
                return c
        raise InvalidParameterError(f"no cell for model={model!r}, layer_num={layer_num}")

    def verify(self) -> None:
        """Recompute every mean from its listed trials; raise on mismatch."""
        for c in self.cells:
            for p in c.points:
                if not p.trials:
                    raise InvalidParameterError("grid point without trials")
                if abs(p.mean_train_error - float(np.mean([t.train_error for t in p.trials]))) > 1e-12:
                    raise InvalidParameterError("mean_train_error does not match its trials")
                if abs(
                    p.mean_test_accuracy - float(np.mean([t.test_accuracy for t in p.trials]))
                ) > 1e-12:
                    raise InvalidParameterError("mean_test_accuracy does not match its trials")
            errs = [p.mean_train_error for p in c.points]
            if c.points[c.selected_index].mean_train_error > min(errs) + 1e-15:
                raise InvalidParameterError("selected point is not a training-error minimizer")
            if abs(c.mean_test_accuracy - c.selected.mean_test_accuracy) > 1e-12:
                raise InvalidParameterError("cell accuracy does not match its selected point")

    def to_json_dict(self) -> dict:
        return {
            "schema": "medq-benchmark-report/1",
            "root_seed": self.root_seed,
            "repetitions": self.repetitions,
            "config": self.config,
            "config_hash": self.config_digest,
            "environment": self.environment,
            "created_utc": self.created_utc,
            "cells": [c.to_dict() for c in self.cells],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BenchmarkReport":
        return cls(
            cells=[BenchmarkCell.from_dict(c) for c in data["cells"]],
            root_seed=data["root_seed"],
            repetitions=data["repetitions"],
            config=data.get("config", {}),
            config_digest=data.get("config_hash", ""),
            environment=data.get("environment", {}),
            created_utc=data.get("created_utc", ""),
        )

    def save(self, path) -> None:
        self.verify()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "BenchmarkReport":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def render_table(self) -> str:
        """Aligned text table: one row per model, one column per layer count."""
        models = []
        for c in self.cells:
            if c.model not in models:
                models.append(c.model)
        layer_nums = sorted({c.layer_num for c in self.cells})
        name_w = max([len("model")] + [len(m) for m in models])
        header = "model".ljust(name_w) + "".join(f"{ln:>10}" for ln in layer_nums)
        lines = [header, "-" * len(header)]
        by_key = {(c.model, c.layer_num): c for c in self.cells}
        for m in models:
            row = m.ljust(name_w)
            for ln in layer_nums:
                c = by_key.get((m, ln))
                row += f"{c.mean_test_accuracy:>10.4f}" if c else " " * 10
            lines.append(row)
        return "\n".join(lines)

    def to_csv(self) -> str:
        lines = [
            "model,layer_num,mean_test_accuracy,mean_train_error,"
            "selected_learning_rate,selected_n_qubits"
        ]
        for c in self.cells:
            sel = c.selected
            lines.append(
                f"{c.model},{c.layer_num},{c.mean_test_accuracy!r},"
                f"{sel.mean_train_error!r},{sel.hyperparams['learning_rate']!r},"
                f"{sel.hyperparams['n_qubits']}"
            )
        return "\n".join(lines) + "\n"
