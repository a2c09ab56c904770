"""Multi-encoding data-reuploading quantum classifier.

Exact statevector simulation of layered re-uploading circuits, weighted
fidelity training, dataset utilities and a benchmarking CLI.
"""

from .backend import active_backend, set_backend
from .data import (
    LabeledDataset,
    PcaProjection,
    SplitSpec,
    gen_linear_separable,
    load_csv,
    load_image_csv,
    pca_reduce,
    save_csv,
    split,
)
from .embeddings import EmbeddingKind, LayerSpec, apply_embedding_layer, param_counts
from .errors import (
    CsvFormatError,
    InvalidParameterError,
    MedqError,
    NumericalError,
    QubitIndexError,
    TrainingDivergedError,
    UnsupportedConfigError,
)
from .model import (
    CircuitSpec,
    ClassScores,
    ParameterSet,
    accuracy,
    build_medq,
    build_reuploading_baseline,
    forward,
    init_parameters,
    predict,
)
from .results import BenchmarkCell, BenchmarkReport, GridPointSummary, TrialRecord
from .training import (
    EarlyStopping,
    GradientMethod,
    GradientVector,
    LossValue,
    TrainConfig,
    TrainResult,
    derive_seed,
    gradient_adjoint,
    gradient_finite_difference,
    gradient_parameter_shift,
    grid_search,
    train,
    weighted_fidelity_loss,
)
from .quantum import (
    MAX_QUBITS,
    StateVector,
    apply_1q,
    apply_2q,
    fidelity,
    reduced_density,
    rot,
    rx,
    ry,
    rz,
    statevector,
    zero_state,
    zz_interaction,
)

__version__ = "0.1.0"

__all__ = [
    "MAX_QUBITS",
    "BenchmarkCell",
    "BenchmarkReport",
    "CircuitSpec",
    "ClassScores",
    "CsvFormatError",
    "EarlyStopping",
    "EmbeddingKind",
    "GradientMethod",
    "GradientVector",
    "GridPointSummary",
    "InvalidParameterError",
    "LabeledDataset",
    "LayerSpec",
    "LossValue",
    "MedqError",
    "NumericalError",
    "ParameterSet",
    "PcaProjection",
    "QubitIndexError",
    "SplitSpec",
    "StateVector",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "TrialRecord",
    "UnsupportedConfigError",
    "accuracy",
    "active_backend",
    "apply_1q",
    "apply_2q",
    "apply_embedding_layer",
    "build_medq",
    "build_reuploading_baseline",
    "derive_seed",
    "fidelity",
    "forward",
    "gen_linear_separable",
    "gradient_adjoint",
    "gradient_finite_difference",
    "gradient_parameter_shift",
    "grid_search",
    "init_parameters",
    "load_csv",
    "load_image_csv",
    "param_counts",
    "pca_reduce",
    "predict",
    "reduced_density",
    "rot",
    "rx",
    "ry",
    "rz",
    "save_csv",
    "set_backend",
    "split",
    "statevector",
    "train",
    "weighted_fidelity_loss",
    "zero_state",
    "zz_interaction",
    "__version__",
]
