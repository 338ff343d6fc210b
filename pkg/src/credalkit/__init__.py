"""credalkit: credal ensemble distillation and uncertainty quantification.

Wrap deep-ensemble softmax outputs into class-wise probability
intervals, distill them into a single credal student, decompose
predictive uncertainty by constrained entropy optimization, and
evaluate OOD detection, calibration, and accuracy-rejection behavior.
"""

from .archive import ArchiveError, ArchiveManifest, LogitArchive, read_archive, write_archive
from .credal import (
    CredalPrediction,
    InputValidationError,
    IntervalSystem,
    as_prob_matrix,
    as_prob_vector,
    check_validity,
    intersection_probability,
    predict_class,
    reconstruct_intervals,
    wrap_ensemble,
)
from .datasets import Dataset, gen_synthetic, load_dataset, save_dataset
from .entropy import (
    UncertaintyMeasure,
    UncertaintyTriple,
    binary_interval_uncertainty,
    decompose_uncertainty,
    grid_oracle_entropy_bounds,
    lower_entropy,
    min_entropy_bound,
    random_interval_system,
    shannon_entropy,
    upper_entropy,
)
from .heads import (
    DirichletPrediction,
    StudentLogits,
    ced_loss,
    credit_forward,
    de_average,
    de_uncertainty,
    ed_loss,
    edd_forward,
    edd_loss,
    edd_uncertainty,
)
from .metrics import (
    BinStats,
    EnsemblePredictor,
    EvalReport,
    ScoredSample,
    accuracy_rejection_curve,
    auprc,
    auroc,
    ece,
    evaluate_archives,
    evaluate_model,
    reliability_bins,
)
from .persist import RunManifest, load_model, manifest_from_model, save_model
from .train import (
    Adam,
    Mlp,
    MlpSpec,
    Sgd,
    TrainConfig,
    TrainedModel,
    distill,
    train_snn,
    train_snn_ensemble,
)

__version__ = "0.1.0"

__all__ = [
    "ArchiveError",
    "ArchiveManifest",
    "LogitArchive",
    "read_archive",
    "write_archive",
    "CredalPrediction",
    "InputValidationError",
    "IntervalSystem",
    "as_prob_matrix",
    "as_prob_vector",
    "check_validity",
    "intersection_probability",
    "predict_class",
    "reconstruct_intervals",
    "wrap_ensemble",
    "Dataset",
    "gen_synthetic",
    "load_dataset",
    "save_dataset",
    "UncertaintyMeasure",
    "UncertaintyTriple",
    "binary_interval_uncertainty",
    "decompose_uncertainty",
    "grid_oracle_entropy_bounds",
    "lower_entropy",
    "min_entropy_bound",
    "random_interval_system",
    "shannon_entropy",
    "upper_entropy",
    "DirichletPrediction",
    "StudentLogits",
    "ced_loss",
    "credit_forward",
    "de_average",
    "de_uncertainty",
    "ed_loss",
    "edd_forward",
    "edd_loss",
    "edd_uncertainty",
    "BinStats",
    "EnsemblePredictor",
    "EvalReport",
    "ScoredSample",
    "accuracy_rejection_curve",
    "auprc",
    "auroc",
    "ece",
    "evaluate_archives",
    "evaluate_model",
    "reliability_bins",
    "RunManifest",
    "load_model",
    "manifest_from_model",
    "save_model",
    "Adam",
    "Mlp",
    "MlpSpec",
    "Sgd",
    "TrainConfig",
    "TrainedModel",
    "distill",
    "train_snn",
    "train_snn_ensemble",
    "__version__",
]
