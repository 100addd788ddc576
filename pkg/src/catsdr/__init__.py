"""Forward sufficient dimension reduction for categorical and ordinal
responses via local likelihood gradients."""

__version__ = "0.1.0"

from ._backend import backend_name
from .baselines import BaselineSpec, fit_baseline, opg_fit, pl_opcg_fit, pw_opcg_fit, sir_fit
from .data import LabeledDataset, StandardizeRecord, standardize
from .datasets import discretize_quantiles, load_csv, merge_labels, split
from .errors import (
    CatSdrError,
    DataError,
    DegenerateLinkError,
    DomainError,
    EstimationError,
    ParameterError,
)
from .families import (
    Family,
    categorical,
    cumulant,
    encode_labels,
    inverse_link,
    link,
    ordinal,
    variance,
)
from .localfit import LocalFit, OptimizerConfig, fit_local, gaussian_weights
from .made import MadeState, made_fit
from .opcg import CandidateMatrix, SdrBasis, assemble_lambda, canonical_gradients, opcg_fit
from .order import OrderEstimate, predictor_augmentation
from .simbench import (
    SimConfig,
    evaluate_classifier,
    generate_simulation,
    run_table1,
    true_basis,
)
from .subspaces import orthonormalize, principal_angles, projection_distance, top_eigenvectors
from .tuning import (
    KmeansResult,
    TuningCurve,
    default_grid,
    kmeans,
    tune_kfold,
    tune_supervised,
    tune_unsupervised,
    tune_weighted,
)

__all__ = [
    "__version__",
    "backend_name",
    "BaselineSpec",
    "CandidateMatrix",
    "CatSdrError",
    "DataError",
    "DegenerateLinkError",
    "DomainError",
    "EstimationError",
    "Family",
    "KmeansResult",
    "LabeledDataset",
    "LocalFit",
    "MadeState",
    "OptimizerConfig",
    "OrderEstimate",
    "ParameterError",
    "SdrBasis",
    "SimConfig",
    "StandardizeRecord",
    "TuningCurve",
    "assemble_lambda",
    "canonical_gradients",
    "categorical",
    "cumulant",
    "default_grid",
    "discretize_quantiles",
    "encode_labels",
    "evaluate_classifier",
    "fit_baseline",
    "fit_local",
    "gaussian_weights",
    "generate_simulation",
    "inverse_link",
    "kmeans",
    "link",
    "load_csv",
    "made_fit",
    "merge_labels",
    "opcg_fit",
    "opg_fit",
    "ordinal",
    "orthonormalize",
    "pl_opcg_fit",
    "predictor_augmentation",
    "principal_angles",
    "projection_distance",
    "pw_opcg_fit",
    "run_table1",
    "sir_fit",
    "split",
    "standardize",
    "top_eigenvectors",
    "true_basis",
    "tune_kfold",
    "tune_supervised",
    "tune_unsupervised",
    "tune_weighted",
    "variance",
]
