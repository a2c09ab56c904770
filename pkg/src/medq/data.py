"""Datasets: synthetic generation, PCA reduction, CSV files and splits.

The dataset CSV format has a header `f0,f1,...,f{d-1},label`, one sample
per row, integer labels 0/1, UTF-8 with LF line endings. Floats are
written with shortest round-trip precision so save/load is lossless.
Raw image files (PCA input) use the header `label,p0,...,p{D-1}`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CsvFormatError, InvalidParameterError, NumericalError


@dataclass
class LabeledDataset:
    """Feature matrix with binary labels and a provenance record."""

    features: np.ndarray
    labels: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise InvalidParameterError(
                f"features must be a nonempty 2d matrix, got shape {self.features.shape}"
            )
        if self.labels.shape[0] != self.features.shape[0]:
            raise InvalidParameterError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )
        if not np.all(np.isfinite(self.features)):
            raise InvalidParameterError("features must be finite")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise InvalidParameterError("labels must be 0 or 1")

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])


@dataclass(frozen=True)
class SplitSpec:
    """Shuffled train/test partition: fraction of rows and shuffle seed."""

    train_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidParameterError(
                f"train_fraction must lie strictly between 0 and 1, got {self.train_fraction}"
            )


def gen_linear_separable(d: int, m: int, margin: float, seed: int) -> LabeledDataset:
    """Sample points uniformly on [-1,1]^d, labeled by the sign of their
    coordinate sum, with a margin strip around the separating hyperplane
    kept empty by rejection.

    The margin is measured as |sum_j x_j| / sqrt(d), so the same value
    means the same geometric gap in any dimension. Requires margin < sqrt(d)
    or rejection could never terminate. Both classes are guaranteed
    nonempty (needs m >= 2).
    """
    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    if m < 2:
        raise InvalidParameterError(f"sample count must be >= 2, got {m}")
    if margin < 0:
        raise InvalidParameterError(f"margin must be >= 0, got {margin}")
    if margin >= np.sqrt(d):
        raise InvalidParameterError(
            f"margin {margin} leaves no admissible points for d={d} (needs margin < sqrt(d))"
        )
    rng = np.random.default_rng(seed)
    rows = np.empty((m, d))
    count = 0
    while count < m:
        chunk = rng.uniform(-1.0, 1.0, size=(max(m - count, 64), d))
        keep = chunk[np.abs(chunk.sum(axis=1)) / np.sqrt(d) > margin]
        take = min(keep.shape[0], m - count)
        rows[count : count + take] = keep[:take]
        count += take
    labels = (rows.sum(axis=1) > 0).astype(np.int64)
    if labels.min() == labels.max():
        # A one-class draw is astronomically unlikely for m >= 2 but would
        # poison training; flip the last row onto the other side.
        rows[-1] = -rows[-1]
        labels[-1] = 1 - labels[-1]
    return LabeledDataset(
        features=rows,
        labels=labels,
        provenance={
            "generator": "linear_separable",
            "seed": int(seed),
            "parameters": {"d": int(d), "m": int(m), "margin": float(margin)},
        },
    )


@dataclass(frozen=True)
class PcaProjection:
    """Fitted PCA map: centering, top-k components and per-column rescale.

    `apply` maps new rows of the original dimension through the same
    centering, projection and [-pi, pi] rescaling that produced the fitted
    output.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    col_min: np.ndarray
    col_max: np.ndarray
    retained_variance_ratio: float

    def apply(self, features: np.ndarray) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        proj = (X - self.mean[None, :]) @ self.components.T
        return self._rescale(proj)

    def _rescale(self, proj: np.ndarray) -> np.ndarray:
        span = self.col_max - self.col_min
        safe = np.where(span > 0, span, 1.0)
        out = (proj - self.col_min[None, :]) / safe[None, :] * (2 * np.pi) - np.pi
        return np.where(span[None, :] > 0, out, 0.0)


def pca_reduce(features: np.ndarray, target_dim: int) -> tuple[np.ndarray, PcaProjection]:
    """Project rows onto the top principal components of their covariance.

    Components are ordered by descending eigenvalue and sign-fixed so each
    eigenvector's largest-magnitude entry is positive. Output columns are
    min-max rescaled to [-pi, pi] (recorded in the projection) because the
    downstream circuits encode features as rotation angles.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidParameterError(f"features must be a 2d matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidParameterError("features must be finite")
    M, D = X.shape
    if not 1 <= target_dim <= min(M, D):
        raise InvalidParameterError(
            f"target_dim must lie in [1, min(M, D)] = [1, {min(M, D)}], got {target_dim}"
        )
    mean = X.mean(axis=0)
    centered = X - mean[None, :]
    cov = (centered.T @ centered) / max(M - 1, 1)
    try:
        eigvals, eigvecs = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(eigvals)[::-1][:target_dim]
    values = eigvals[order]
    comps = eigvecs[:, order].T
    for i in range(comps.shape[0]):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    proj = centered @ comps.T
    col_min = proj.min(axis=0)
    col_max = proj.max(axis=0)
    total = float(eigvals.sum())
    retained = float(values.sum() / total) if total > 0 else 1.0
    record = PcaProjection(
        mean=mean,
        components=comps,
        eigenvalues=values,
        col_min=col_min,
        col_max=col_max,
        retained_variance_ratio=retained,
    )
    return record._rescale(proj), record


def save_csv(dataset: LabeledDataset, path) -> None:
    """Write a dataset in the standard CSV layout."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join([f"f{i}" for i in range(dataset.d)] + ["label"]) + "\n")
        for row, label in zip(dataset.features, dataset.labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{int(label)}\n")


def load_csv(path) -> LabeledDataset:
    """Read a dataset CSV, raising CsvFormatError with the offending line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CsvFormatError("file is empty")
    header = lines[0].split(",")
    if len(header) < 2 or header[-1] != "label":
        raise CsvFormatError("header must be f0,...,f{d-1},label", line=1)
    d = len(header) - 1
    if header[:-1] != [f"f{i}" for i in range(d)]:
        raise CsvFormatError("header must be f0,...,f{d-1},label", line=1)
    if len(lines) == 1:
        raise CsvFormatError("no data rows")
    features = np.empty((len(lines) - 1, d))
    labels = np.empty(len(lines) - 1, dtype=np.int64)
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != d + 1:
            raise CsvFormatError(f"expected {d + 1} cells, found {len(cells)}", line=i)
        try:
            features[i - 2] = [float(c) for c in cells[:-1]]
        except ValueError:
            raise CsvFormatError(f"non-numeric feature cell in {line!r}", line=i) from None
        if not np.all(np.isfinite(features[i - 2])):
            raise CsvFormatError("non-finite feature value", line=i)
        if cells[-1] not in ("0", "1"):
            raise CsvFormatError(f"label must be 0 or 1, got {cells[-1]!r}", line=i)
        labels[i - 2] = int(cells[-1])
    return LabeledDataset(features=features, labels=labels, provenance={"source": str(path)})


def load_image_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a raw-image CSV (`label,p0,...,p{D-1}`) into pixels and labels.

    Labels may be any integers here (e.g. ten digit classes); callers
    select a pair and binarize before building a LabeledDataset.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CsvFormatError("file is empty")
    header = lines[0].split(",")
    if len(header) < 2 or header[0] != "label":
        raise CsvFormatError("header must be label,p0,...,p{D-1}", line=1)
    d = len(header) - 1
    if header[1:] != [f"p{i}" for i in range(d)]:
        raise CsvFormatError("header must be label,p0,...,p{D-1}", line=1)
    if len(lines) == 1:
        raise CsvFormatError("no data rows")
    pixels = np.empty((len(lines) - 1, d))
    labels = np.empty(len(lines) - 1, dtype=np.int64)
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != d + 1:
            raise CsvFormatError(f"expected {d + 1} cells, found {len(cells)}", line=i)
        try:
            labels[i - 2] = int(cells[0])
            pixels[i - 2] = [float(c) for c in cells[1:]]
        except ValueError:
            raise CsvFormatError(f"non-numeric cell in {line!r}", line=i) from None
        if not np.all(np.isfinite(pixels[i - 2])):
            raise CsvFormatError("non-finite pixel value", line=i)
    return pixels, labels


def split(dataset: LabeledDataset, spec: SplitSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Deterministic shuffled partition into train and test parts.

    Both parts keep at least one row; each part must contain both classes,
    otherwise the split is rejected as degenerate.
    """
    m = dataset.n_samples
    n_train = int(round(spec.train_fraction * m))
    n_train = min(max(n_train, 1), m - 1)
    if m < 2:
        raise InvalidParameterError("cannot split a single-row dataset")
    order = np.random.default_rng(spec.seed).permutation(m)
    tr, te = order[:n_train], order[n_train:]
    parts = []
    for name, idx in (("train", tr), ("test", te)):
        labels = dataset.labels[idx]
        if labels.min() == labels.max():
            raise InvalidParameterError(
                f"degenerate split: the {name} part contains a single class; "
                "use a different seed or fraction"
            )
        parts.append(
            LabeledDataset(
                features=dataset.features[idx],
                labels=labels,
                provenance={
                    **dataset.provenance,
                    "split": {
                        "part": name,
                        "train_fraction": spec.train_fraction,
                        "seed": int(spec.seed),
                    },
                },
            )
        )
    return parts[0], parts[1]
