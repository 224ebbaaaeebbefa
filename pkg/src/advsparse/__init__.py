"""Directional adversarial sparsity: attacks, estimators, and closed-form theory.

The package measures how tightly an adversarial perturbation is pinned to a
given direction: the smallest angular cap (L2) or free-coordinate count
(Linf) around that direction which still contains a successful attack.
Closed-form expectations for random directions come with Monte-Carlo
cross-checks, and a small numpy MLP plus PGD attacks make the estimators
runnable end to end on desk-scale problems.
"""

from .attack import AttackConfig, AttackResult, ThreatModel, pgd, pgd_cap, pgd_vertex
from .datasets import Dataset, generate, load_dataset, save_dataset, split_dataset
from .errors import (
    AttackError,
    ConsistencyError,
    ModelFormatError,
    NumericError,
    RobustPointError,
    TrainingError,
    UsageError,
)
from .estimator import (
    DatasetReport,
    EstimatorConfig,
    PointSparsity,
    SparsityRecord,
    dataset_eval,
    direction_sparsity_l2,
    direction_sparsity_linf,
    epsilon_sweep,
    point_sparsity,
)
from .geometry import (
    angle_between,
    cap_fraction,
    project_to_cap,
    regularized_incomplete_beta,
    sample_uniform_sphere,
    sample_vertex_and_permutation,
)
from .micronet import (
    CapRegion,
    LinearOracle,
    MicroNet,
    TrainConfig,
    TrainResult,
    adversarial_train,
    evaluate_accuracy,
    expected_direction_sparsity,
    forward,
    init_micronet,
    linear_adversarial_cap,
    linear_direction_sparsity,
    linear_expected_sparsity,
    load_model,
    loss_and_input_grad,
    predict,
    save_model,
    train_sgd,
)
from .theory import (
    expected_sparsity_l2,
    expected_sparsity_linf,
    linf_bounds,
    mc_oracle_l2,
    mc_oracle_linf,
)

__version__ = "0.1.0"

__all__ = [
    "AttackConfig",
    "AttackError",
    "AttackResult",
    "CapRegion",
    "ConsistencyError",
    "Dataset",
    "DatasetReport",
    "EstimatorConfig",
    "LinearOracle",
    "MicroNet",
    "ModelFormatError",
    "NumericError",
    "PointSparsity",
    "RobustPointError",
    "SparsityRecord",
    "ThreatModel",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "UsageError",
    "adversarial_train",
    "angle_between",
    "cap_fraction",
    "dataset_eval",
    "direction_sparsity_l2",
    "direction_sparsity_linf",
    "epsilon_sweep",
    "evaluate_accuracy",
    "expected_direction_sparsity",
    "expected_sparsity_l2",
    "expected_sparsity_linf",
    "forward",
    "generate",
    "init_micronet",
    "linear_adversarial_cap",
    "linear_direction_sparsity",
    "linear_expected_sparsity",
    "linf_bounds",
    "load_dataset",
    "load_model",
    "loss_and_input_grad",
    "mc_oracle_l2",
    "mc_oracle_linf",
    "pgd",
    "pgd_cap",
    "pgd_vertex",
    "point_sparsity",
    "predict",
    "project_to_cap",
    "regularized_incomplete_beta",
    "sample_uniform_sphere",
    "sample_vertex_and_permutation",
    "save_dataset",
    "save_model",
    "split_dataset",
    "train_sgd",
    "__version__",
]
