"""
PSLF - Hessian-free latent factor analysis with swarm-tuned hyperparameters

Factorizes sparse user-item rating matrices with a damped Gauss-Newton /
conjugate gradient optimizer and tunes its regularization and damping with a
synchronous master-worker particle swarm driven by held-out RMSE.
"""

__version__ = "0.5.0"
__author__ = "PSLF contributors"
__description__ = "Hessian-free latent factor models with particle-swarm hyperparameter tuning"

# Version history
__changelog__ = {
    "0.5.0": "Added command-line front door, grid tuner and box-center baseline",
    "0.4.0": "Added cross-validated pipeline with independent split and init seeds",
    "0.3.0": "Added synchronous particle swarm with joblib worker dispatch",
    "0.2.0": "Added Hessian-free trainer with inexact conjugate gradient",
    "0.1.0": "Initial sparse rating store and latent factor kernels",
    "0.0.1": "Project setup"
}

# Public API
from src.errors import (
    PSLFError,
    ConfigError,
    RatingsFormatError,
    SnapshotError,
    DivergenceError
)

from src.config import (
    CgConfig,
    TrainConfig,
    SwarmConfig,
    DataConfig,
    SyntheticConfig,
    ModelConfig,
    ExperimentConfig,
    resolve_config
)

from src.models.ratings import (
    RatingTriple,
    RatingDataset,
    DataSplit,
    TuningSplit,
    parse_line,
    parse_ratings,
    load_ratings,
    split_dataset
)

from src.models.factors import (
    FactorState,
    Hyperparams,
    init_factors,
    predict,
    loss,
    gradient,
    gn_vector_product,
    hvp_fd_oracle,
    rmse
)

from src.models.cg import (
    CgResult,
    CgTermination,
    cg_solve
)

from src.models.trainer import (
    TrainReport,
    train_slf,
    fitness_of
)

from src.models.swarm import (
    Particle,
    SwarmState,
    SwarmResult,
    init_swarm,
    step_generation,
    run_swarm
)

from src.models.pipeline import (
    TuneResult,
    FinalResult,
    ExperimentReport,
    tune,
    final_train,
    cross_validate
)

from src.models.synthetic import (
    make_synthetic_ratings,
    parse_synthetic_spec
)

__all__ = [
    # Version info
    "__version__",
    "__author__",
    "__description__",

    # Errors
    "PSLFError",
    "ConfigError",
    "RatingsFormatError",
    "SnapshotError",
    "DivergenceError",

    # Configuration
    "CgConfig",
    "TrainConfig",
    "SwarmConfig",
    "DataConfig",
    "SyntheticConfig",
    "ModelConfig",
    "ExperimentConfig",
    "resolve_config",

    # Ratings
    "RatingTriple",
    "RatingDataset",
    "DataSplit",
    "TuningSplit",
    "parse_line",
    "parse_ratings",
    "load_ratings",
    "split_dataset",

    # Factor kernels
    "FactorState",
    "Hyperparams",
    "init_factors",
    "predict",
    "loss",
    "gradient",
    "gn_vector_product",
    "hvp_fd_oracle",
    "rmse",

    # Conjugate gradient
    "CgResult",
    "CgTermination",
    "cg_solve",

    # Training
    "TrainReport",
    "train_slf",
    "fitness_of",

    # Particle swarm
    "Particle",
    "SwarmState",
    "SwarmResult",
    "init_swarm",
    "step_generation",
    "run_swarm",

    # Pipeline
    "TuneResult",
    "FinalResult",
    "ExperimentReport",
    "tune",
    "final_train",
    "cross_validate",

    # Synthetic data
    "make_synthetic_ratings",
    "parse_synthetic_spec",
]
