"""
Model Assumptions Configuration

This module contains all default settings used by the PSLF engine.
Modify these values to change the defaults of every configuration object;
explicit configuration files and command-line overrides still win.

All values in this file are actively used by the code in src/config.

Categories:
- DATA: ratings parsing and splitting
- MODEL: latent dimension and factor initialization
- TRAINING: Hessian-free outer loop and inner conjugate gradient
- SWARM: distributed particle swarm over (lambda, gamma)
- EXPERIMENT: repetitions, seeds and tuner selection
- SYNTHETIC: bundled synthetic dataset

Citation Key:
- [PUBLISHED]: setting stated in the published PSLF method description
- [ASSUMED]: engineering choice where the published description is silent
"""

# =============================================================================
# DATA
# =============================================================================
# Used in: src/config/experiment_config.py, src/models/ratings.py

DATA = {
    # [ASSUMED] MovieLens-style separator
    "delimiter": "::",

    # [PUBLISHED] train : test : validation = 6 : 2 : 2
    "ratios": (0.6, 0.2, 0.2),

    # [ASSUMED] Tolerance on the sum of the split ratios
    "ratio_tolerance": 1e-9,
}

# =============================================================================
# MODEL
# =============================================================================
# Used in: src/config/experiment_config.py, src/models/factors.py

MODEL = {
    # [ASSUMED] Latent dimension; not stated for the published runs
    "dim": 20,

    # [ASSUMED] Uniform initialization range [low, high)
    # Small positive values keep initial predictions near zero
    "init_low": 0.0,
    "init_high": 0.004,
}

# =============================================================================
# TRAINING
# =============================================================================
# Used in: src/config/experiment_config.py, src/models/trainer.py, src/models/cg.py

TRAINING = {
    # [ASSUMED] Outer Gauss-Newton iterations
    "max_outer_iters": 50,

    # [ASSUMED] Consecutive non-improving test-RMSE rounds before stopping
    "patience": 3,

    # [ASSUMED] Required test-RMSE improvement to reset patience
    "min_delta": 1e-5,

    # [ASSUMED] CG starts from zero unless enabled
    "warm_start": False,

    # [ASSUMED] Inexact CG budget
    "cg_max_iters": 10,
    "cg_rel_tol": 1e-2,

    # [ASSUMED] p'Ap below floor * |p|^2 counts as curvature breakdown
    "cg_curvature_floor": 1e-12,
}

# =============================================================================
# SWARM
# =============================================================================
# Used in: src/config/experiment_config.py, src/models/swarm.py

SWARM = {
    # [ASSUMED] Population size and generation budget
    "num_particles": 8,
    "generations": 20,

    # [PUBLISHED] Inertia weight range is [1, 2]; lower end used
    "inertia": 1.0,

    # [ASSUMED] Cognitive / social learning factors
    "c1": 2.0,
    "c2": 2.0,

    # [PUBLISHED] lambda in [0, 0.1], gamma in [0, 300]
    "bounds": ((0.0, 0.1), (0.0, 300.0)),

    # [PUBLISHED] v_max is 20% of each search range, v_min = -v_max
    "v_max_fraction": 0.2,

    "seed": 0,

    # [ASSUMED] Parallel fitness evaluations and joblib backend
    "num_workers": 1,
    "backend": "threading",
}

# =============================================================================
# EXPERIMENT
# =============================================================================
# Used in: src/config/experiment_config.py, src/models/pipeline.py

EXPERIMENT = {
    # [PUBLISHED] Five repetitions
    "repetitions": 5,

    "seed": 0,

    # "dpso" (swarm) or "grid" (exhaustive grid baseline)
    "tuner": "dpso",

    # [ASSUMED] Points per dimension for the grid tuner
    "grid_points": 5,
}

# =============================================================================
# SYNTHETIC DATASET
# =============================================================================
# Used in: src/config/experiment_config.py, src/models/synthetic.py

SYNTHETIC = {
    "users": 60,
    "items": 40,
    "rank": 3,
    "density": 0.3,
    "noise": 0.1,
    "seed": 0,

    # [ASSUMED] Ground-truth factors drawn uniformly from this range
    "factor_low": 0.5,
    "factor_high": 1.5,
}


# =============================================================================
# HELPER FUNCTIONS
# =============================================================================

def get_data_config():
    """
    Get data handling defaults.

    Returns:
        dict: Parsing and splitting parameters

    Example:
        >>> config = get_data_config()
        >>> ratios = config['ratios']
    """
    return DATA.copy()


def get_model_config():
    """
    Get latent-factor model defaults.

    Returns:
        dict: Latent dimension and initialization range
    """
    return MODEL.copy()


def get_training_config():
    """
    Get Hessian-free training defaults.

    Returns:
        dict: Outer-loop and CG parameters

    Example:
        >>> config = get_training_config()
        >>> budget = config['cg_max_iters']
    """
    return TRAINING.copy()


def get_swarm_config():
    """
    Get particle swarm defaults.

    Returns:
        dict: Swarm size, coefficients and search box
    """
    return SWARM.copy()


def get_experiment_config():
    """Get experiment-level defaults."""
    return EXPERIMENT.copy()


def get_synthetic_config():
    """Get bundled synthetic dataset defaults."""
    return SYNTHETIC.copy()


def get_all_assumptions():
    """
    Get all default settings as a single dictionary.

    Returns:
        dict: All assumptions organized by category

    Example:
        >>> assumptions = get_all_assumptions()
        >>> swarm_params = assumptions['swarm']
    """
    return {
        "data": DATA.copy(),
        "model": MODEL.copy(),
        "training": TRAINING.copy(),
        "swarm": SWARM.copy(),
        "experiment": EXPERIMENT.copy(),
        "synthetic": SYNTHETIC.copy(),
    }
