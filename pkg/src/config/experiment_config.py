"""
Configuration classes for PSLF training, tuning and experiments.

Defaults come from src/assumptions.py. Every class validates itself on
construction and raises ConfigError (a ValueError) on bad values.

The whole experiment flattens to "section.key" entries:
- data.*       ratings source, delimiter, split ratios
- synthetic.*  bundled synthetic dataset (used when data.path is empty)
- model.*      latent dimension and initialization range
- train.*      Hessian-free outer loop
- cg.*         inner conjugate gradient
- swarm.*      distributed particle swarm
- hp.*         explicit (lambda, gamma) for single training runs
- experiment.* repetitions, seeds, tuner
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.assumptions import (
    get_data_config,
    get_experiment_config,
    get_model_config,
    get_swarm_config,
    get_synthetic_config,
    get_training_config,
)
from src.errors import ConfigError
from src.models.factors import Hyperparams

_DATA = get_data_config()
_MODEL = get_model_config()
_TRAINING = get_training_config()
_SWARM = get_swarm_config()
_EXPERIMENT = get_experiment_config()
_SYNTHETIC = get_synthetic_config()

TUNERS = ("dpso", "grid")
BACKENDS = ("threading", "loky", "sequential")
DELIMITER_ALIASES = {"tab": "\t", "\\t": "\t", "comma": ",", "space": " "}


@dataclass(frozen=True)
class CgConfig:
    """Budget and tolerances of the inexact conjugate gradient solve."""

    max_iters: int = _TRAINING["cg_max_iters"]
    rel_tol: float = _TRAINING["cg_rel_tol"]  # |r| / |b|
    curvature_floor: float = _TRAINING["cg_curvature_floor"]

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError(f"cg.max_iters must be >= 1, got {self.max_iters}")
        if not 0 < self.rel_tol < 1:
            raise ConfigError(f"cg.rel_tol must lie in (0, 1), got {self.rel_tol}")
        if not self.curvature_floor >= 0:
            raise ConfigError(f"cg.curvature_floor must be >= 0, got {self.curvature_floor}")


@dataclass(frozen=True)
class TrainConfig:
    """
    Outer Hessian-free loop settings.

    Attributes:
        max_outer_iters: Upper bound on Gauss-Newton steps
        patience: Consecutive non-improving test-RMSE rounds before stopping
        min_delta: Test-RMSE improvement that resets patience
        warm_start: Start each CG solve from the previous step instead of zero
        cg: Inner solver configuration
    """

    max_outer_iters: int = _TRAINING["max_outer_iters"]
    patience: int = _TRAINING["patience"]
    min_delta: float = _TRAINING["min_delta"]
    warm_start: bool = _TRAINING["warm_start"]
    cg: CgConfig = field(default_factory=CgConfig)

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ConfigError(f"train.max_outer_iters must be >= 1, got {self.max_outer_iters}")
        if self.patience < 1:
            raise ConfigError(f"train.patience must be >= 1, got {self.patience}")
        if not self.min_delta >= 0:
            raise ConfigError(f"train.min_delta must be >= 0, got {self.min_delta}")


@dataclass(frozen=True)
class SwarmConfig:
    """
    Particle swarm settings.

    Attributes:
        num_particles: Population size
        generations: Number of synchronous evaluate-then-move rounds
        inertia: Weight on the previous velocity (omega)
        c1: Cognitive factor (pull towards the personal best)
        c2: Social factor (pull towards the global best)
        bounds: Per-dimension (min, max); (lambda, gamma) by default
        v_max_fraction: Velocity clamp as a fraction of each range
        seed: Root of all per-particle random streams
        num_workers: Parallel fitness evaluations
        backend: joblib backend used for the workers
    """

    num_particles: int = _SWARM["num_particles"]
    generations: int = _SWARM["generations"]
    inertia: float = _SWARM["inertia"]
    c1: float = _SWARM["c1"]
    c2: float = _SWARM["c2"]
    bounds: Tuple[Tuple[float, float], ...] = _SWARM["bounds"]
    v_max_fraction: float = _SWARM["v_max_fraction"]
    seed: int = _SWARM["seed"]
    num_workers: int = _SWARM["num_workers"]
    backend: str = _SWARM["backend"]

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if self.num_particles < 1:
            raise ConfigError(f"swarm.num_particles must be >= 1, got {self.num_particles}")
        if self.generations < 1:
            raise ConfigError(f"swarm.generations must be >= 1, got {self.generations}")
        if not bounds:
            raise ConfigError("swarm.bounds must name at least one dimension")
        for d, (lo, hi) in enumerate(bounds):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(f"swarm.bounds[{d}] = [{lo}, {hi}] is degenerate")
        if self.c1 < 0 or self.c2 < 0:
            raise ConfigError(f"swarm.c1 and swarm.c2 must be >= 0, got {self.c1}, {self.c2}")
        if not 0 < self.v_max_fraction <= 1:
            raise ConfigError(f"swarm.v_max_fraction must lie in (0, 1], got {self.v_max_fraction}")
        if self.seed < 0:
            raise ConfigError(f"swarm.seed must be >= 0, got {self.seed}")
        if self.num_workers < 1:
            raise ConfigError(f"swarm.num_workers must be >= 1, got {self.num_workers}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"swarm.backend must be one of {BACKENDS}, got {self.backend!r}")

    @property
    def dimensions(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.bounds])

    @property
    def v_max(self) -> np.ndarray:
        """Per-dimension velocity clamp; v_min = -v_max."""
        return self.v_max_fraction * (self.upper - self.lower)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class DataConfig:
    """Ratings source and split ratios; an empty path selects synthetic data."""

    path: Optional[str] = None
    delimiter: str = _DATA["delimiter"]
    ratios: Tuple[float, float, float] = tuple(_DATA["ratios"])

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.ratios)
        object.__setattr__(self, "ratios", ratios)
        if self.path is not None:
            object.__setattr__(self, "path", str(self.path))
        if not isinstance(self.delimiter, str):
            raise ConfigError(f"data.delimiter must be a string, got {self.delimiter!r}")
        object.__setattr__(self, "delimiter", DELIMITER_ALIASES.get(self.delimiter, self.delimiter))
        if not self.delimiter:
            raise ConfigError("data.delimiter must be non-empty")
        if len(ratios) != 3 or any(r < 0 for r in ratios):
            raise ConfigError(f"data.ratios must be three non-negative numbers, got {ratios}")
        if abs(sum(ratios) - 1.0) > _DATA["ratio_tolerance"]:
            raise ConfigError(f"data.ratios must sum to 1, got {sum(ratios)}")


@dataclass(frozen=True)
class SyntheticConfig:
    """Low-rank synthetic ratings: S = P Q' (+ Gaussian noise) on a random mask."""

    users: int = _SYNTHETIC["users"]
    items: int = _SYNTHETIC["items"]
    rank: int = _SYNTHETIC["rank"]
    density: float = _SYNTHETIC["density"]
    noise: float = _SYNTHETIC["noise"]
    seed: int = _SYNTHETIC["seed"]
    factor_low: float = _SYNTHETIC["factor_low"]
    factor_high: float = _SYNTHETIC["factor_high"]

    def __post_init__(self):
        if self.users < 1 or self.items < 1:
            raise ConfigError(f"synthetic users/items must be >= 1, got {self.users}x{self.items}")
        if self.rank < 1:
            raise ConfigError(f"synthetic.rank must be >= 1, got {self.rank}")
        if not 0 < self.density <= 1:
            raise ConfigError(f"synthetic.density must lie in (0, 1], got {self.density}")
        if self.noise < 0:
            raise ConfigError(f"synthetic.noise must be >= 0, got {self.noise}")
        if not self.factor_low < self.factor_high:
            raise ConfigError("synthetic.factor_low must be < synthetic.factor_high")


@dataclass(frozen=True)
class ModelConfig:
    """Latent dimension D and uniform initialization range."""

    dim: int = _MODEL["dim"]
    init_low: float = _MODEL["init_low"]
    init_high: float = _MODEL["init_high"]

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"model.dim must be >= 1, got {self.dim}")
        if not self.init_low < self.init_high:
            raise ConfigError(f"model.init_low must be < model.init_high, "
                              f"got [{self.init_low}, {self.init_high})")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Full configuration of a PSLF experiment.

    Attributes:
        repetitions: Independent random splits (tune + final train each)
        seed: Master seed; split and init seeds derive from it per repetition
        split_seed: Fixed split seed for every repetition (None = derived)
        init_seed: Fixed factor-initialization seed (None = derived)
        tuner: "dpso" or "grid"
        grid_points: Points per dimension for the grid tuner
        parallel_repetitions: Run repetitions concurrently
        compare_default: Also train at the box center and report its validation RMSE

    Usage:
        config = ExperimentConfig.desk()
        report = cross_validate(config)
    """

    data: DataConfig = field(default_factory=DataConfig)
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    swarm: SwarmConfig = field(default_factory=SwarmConfig)
    hp: Hyperparams = field(default_factory=lambda: Hyperparams.from_position(
        [0.5 * (lo + hi) for lo, hi in _SWARM["bounds"]]
    ))
    repetitions: int = _EXPERIMENT["repetitions"]
    seed: int = _EXPERIMENT["seed"]
    split_seed: Optional[int] = None
    init_seed: Optional[int] = None
    tuner: str = _EXPERIMENT["tuner"]
    grid_points: int = _EXPERIMENT["grid_points"]
    parallel_repetitions: bool = False
    compare_default: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError(f"experiment.repetitions must be >= 1, got {self.repetitions}")
        if self.seed < 0:
            raise ConfigError(f"experiment.seed must be >= 0, got {self.seed}")
        for name in ("split_seed", "init_seed"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigError(f"experiment.{name} must be >= 0, got {value}")
        if self.tuner not in TUNERS:
            raise ConfigError(f"experiment.tuner must be one of {TUNERS}, got {self.tuner!r}")
        if self.grid_points < 1:
            raise ConfigError(f"experiment.grid_points must be >= 1, got {self.grid_points}")
        if self.swarm.dimensions != 2:
            raise ConfigError("swarm.bounds must have two dimensions: (lambda, gamma)")

    # ------------------------------------------------------------ presets

    @classmethod
    def published(cls, data_path: Optional[str] = None) -> "ExperimentConfig":
        """Published setting: 6:2:2 splits, five repetitions, D=20, 8 particles x 20 generations."""
        return cls(data=DataConfig(path=data_path))

    @classmethod
    def desk(cls) -> "ExperimentConfig":
        """Small bundled synthetic experiment that runs in seconds."""
        return cls(
            model=ModelConfig(dim=3),
            train=TrainConfig(max_outer_iters=20),
            swarm=SwarmConfig(num_particles=4, generations=4),
            repetitions=2,
        )

    # ------------------------------------------------------------ helpers

    def box_center(self) -> Hyperparams:
        """Default comparison point: the middle of the search box."""
        return Hyperparams.from_position(self.swarm.center())

    def to_flat(self) -> Dict[str, Any]:
        """Fully resolved configuration as flat "section.key" -> plain value."""
        flat: Dict[str, Any] = {}
        for section, obj in (("data", self.data), ("synthetic", self.synthetic),
                             ("model", self.model), ("swarm", self.swarm)):
            for f in dataclasses.fields(obj):
                flat[f"{section}.{f.name}"] = _plain(getattr(obj, f.name))
        for f in dataclasses.fields(self.train):
            if f.name != "cg":
                flat[f"train.{f.name}"] = _plain(getattr(self.train, f.name))
        for f in dataclasses.fields(self.train.cg):
            flat[f"cg.{f.name}"] = _plain(getattr(self.train.cg, f.name))
        flat["hp.lambda"] = self.hp.lambda_
        flat["hp.gamma"] = self.hp.gamma
        for name in ("repetitions", "seed", "split_seed", "init_seed", "tuner",
                     "grid_points", "parallel_repetitions", "compare_default"):
            flat[f"experiment.{name}"] = _plain(getattr(self, name))
        return flat

    to_dict = to_flat

    @classmethod
    def from_flat(cls, values: Dict[str, Any], base: Optional["ExperimentConfig"] = None
                  ) -> "ExperimentConfig":
        """
        Build a configuration from flat keys layered over `base` (defaults if None).

        Raises:
            ConfigError: Unknown key or invalid value
        """
        merged = (base or cls()).to_flat()
        unknown = sorted(set(values) - set(merged))
        if unknown:
            raise ConfigError(f"Unknown configuration key(s): {', '.join(unknown)}")
        merged.update(values)

        def section(name):
            prefix = name + "."
            return {k[len(prefix):]: v for k, v in merged.items() if k.startswith(prefix)}

        try:
            swarm = section("swarm")
            swarm["bounds"] = tuple(tuple(b) for b in swarm["bounds"])
            data = section("data")
            data["ratios"] = tuple(data["ratios"])
            hp = section("hp")
            return cls(
                data=DataConfig(**data),
                synthetic=SyntheticConfig(**section("synthetic")),
                model=ModelConfig(**section("model")),
                train=TrainConfig(cg=CgConfig(**section("cg")), **section("train")),
                swarm=SwarmConfig(**swarm),
                hp=Hyperparams(lambda_=float(hp["lambda"]), gamma=float(hp["gamma"])),
                **section("experiment"),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid configuration: {e}")

    def summary(self) -> str:
        """Human-readable multi-line summary."""
        source = self.data.path or (
            f"synthetic {self.synthetic.users}x{self.synthetic.items}, rank {self.synthetic.rank}, "
            f"density {self.synthetic.density}, noise {self.synthetic.noise}"
        )
        lo, hi = self.swarm.bounds[0], self.swarm.bounds[1]
        lines = [
            f"PSLF Experiment Configuration ({self.tuner.upper()} tuner)",
            "=" * 70,
            f"Data: {source}",
            f"Split ratios: {self.data.ratios} over {self.repetitions} repetition(s), seed {self.seed}",
            f"Latent dimension: {self.model.dim}, init U[{self.model.init_low}, {self.model.init_high})",
            f"Training: {self.train.max_outer_iters} outer iterations, patience {self.train.patience}, "
            f"CG {self.train.cg.max_iters} iterations at rel_tol {self.train.cg.rel_tol}",
            f"Swarm: {self.swarm.num_particles} particles x {self.swarm.generations} generations, "
            f"omega={self.swarm.inertia}, c1={self.swarm.c1}, c2={self.swarm.c2}",
            f"Box: lambda in [{lo[0]}, {lo[1]}], gamma in [{hi[0]}, {hi[1]}], "
            f"v_max = {self.swarm.v_max_fraction:.0%} of range",
            f"Workers: {self.swarm.num_workers} ({self.swarm.backend})",
        ]
        return "\n".join(lines)


def _plain(value: Any) -> Any:
    """Convert tuples to lists so the flat config is JSON/YAML friendly."""
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value
