"""
PSLF Pipeline

Tunes (lambda, gamma) with the particle swarm (or the grid baseline) on the
train/test parts of a split, retrains at the tuned point from the same
initial factors, and reads the validation part exactly once per repetition.

Seeds per repetition r (1-based) derive from the master seed unless fixed:
- split seed: (experiment.seed, r, 0) or experiment.split_seed
- init seed:  (experiment.seed, r, 1) or experiment.init_seed
- swarm seed: (swarm.seed, r)
"""

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from src.config.experiment_config import ExperimentConfig, TrainConfig
from src.models.factors import FactorState, Hyperparams, init_factors, rmse
from src.models.ratings import DataSplit, RatingDataset, load_ratings, split_dataset
from src.models.reporting import json_float, write_json
from src.models.swarm import GenerationRecord, evaluate_positions, run_swarm, write_trace
from src.models.synthetic import make_synthetic_ratings
from src.models.trainer import TrainReport, fitness_of, train_slf

_logger = logging.getLogger(__name__)


def derive_seed(*keys: int) -> int:
    """Deterministic 32-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence(list(keys)).generate_state(1)[0])


def repetition_seeds(cfg: ExperimentConfig, repetition: int) -> Tuple[int, int, int]:
    """(split_seed, init_seed, swarm_seed) for a 1-based repetition."""
    split_seed = cfg.split_seed if cfg.split_seed is not None else derive_seed(cfg.seed, repetition, 0)
    init_seed = cfg.init_seed if cfg.init_seed is not None else derive_seed(cfg.seed, repetition, 1)
    swarm_seed = derive_seed(cfg.swarm.seed, repetition)
    return split_seed, init_seed, swarm_seed


def load_dataset(cfg: ExperimentConfig) -> RatingDataset:
    """Ratings file named by data.path, or the synthetic dataset when it is empty."""
    if cfg.data.path:
        return load_ratings(cfg.data.path, cfg.data.delimiter)
    return make_synthetic_ratings(cfg.synthetic)


def initial_state(split, cfg: ExperimentConfig, init_seed: int) -> FactorState:
    """The shared X0 every particle and the final training start from."""
    return init_factors(split.num_users, split.num_items, cfg.model.dim, init_seed,
                        cfg.model.init_low, cfg.model.init_high)


def _position_fitness(view, train_cfg: TrainConfig, X0: FactorState, position) -> float:
    return fitness_of(view, Hyperparams.from_position(position), train_cfg, X0)


@dataclass
class TuneResult:
    """Outcome of tuning on one split."""
    hyperparams: Hyperparams
    best_fitness: float
    history: List[GenerationRecord]
    initial_state: FactorState
    init_seed: int
    swarm_seed: int


def _grid_positions(cfg: ExperimentConfig) -> List[np.ndarray]:
    axes = [np.linspace(lo, hi, cfg.grid_points) for lo, hi in cfg.swarm.bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return [np.array(point) for point in np.stack([m.ravel() for m in mesh], axis=1)]


def _grid_tune(cfg: ExperimentConfig, fitness) -> Tuple[np.ndarray, float, List[GenerationRecord]]:
    positions = _grid_positions(cfg)
    values = evaluate_positions(fitness, positions, cfg.swarm.num_workers, cfg.swarm.backend)
    best = int(np.argmin(values))
    record = GenerationRecord(
        generation=1,
        global_best_fitness=values[best],
        global_best_pos=[float(x) for x in positions[best]],
        per_particle=[{"pos": [float(x) for x in p], "vel": [0.0] * len(p), "fitness": json_float(v)}
                      for p, v in zip(positions, values)],
    )
    return positions[best], values[best], [record]


def tune(
    split,
    cfg: ExperimentConfig,
    init_seed: Optional[int] = None,
    swarm_seed: Optional[int] = None,
    progress: bool = False,
) -> TuneResult:
    """
    Search (lambda, gamma) minimizing the test RMSE of a full training run.

    Only the train and test parts are visible here. All candidates start
    from the same X0 drawn from (init_seed, model.dim, init range).

    Raises:
        ValueError: Empty test set
    """
    view = split.tuning_view()
    if view.test.is_empty:
        raise ValueError("Tuning needs a nonempty test set")
    if init_seed is None:
        init_seed = cfg.init_seed if cfg.init_seed is not None else cfg.seed
    swarm_seed = cfg.swarm.seed if swarm_seed is None else swarm_seed

    X0 = initial_state(view, cfg, init_seed)
    fitness = partial(_position_fitness, view, cfg.train, X0)

    if cfg.tuner == "grid":
        best_pos, best_fitness, history = _grid_tune(cfg, fitness)
    else:
        swarm_cfg = dataclasses.replace(cfg.swarm, seed=swarm_seed)
        result = run_swarm(swarm_cfg, fitness, progress=progress)
        best_pos, best_fitness, history = result.best_position, result.best_fitness, result.history

    hp = Hyperparams.from_position(best_pos)
    _logger.info("tuned lambda=%g gamma=%g with test RMSE %.6f", hp.lambda_, hp.gamma, best_fitness)
    return TuneResult(hp, best_fitness, history, X0, init_seed, swarm_seed)


@dataclass
class FinalResult:
    """Retraining at the tuned point and its validation RMSE."""
    report: TrainReport
    validation_rmse: float


def assert_disjoint(split: DataSplit) -> None:
    """Raise if the validation part shares a (user, item) pair with train or test."""
    val = split.validation.pair_keys
    for name, part in (("train", split.train), ("test", split.test)):
        if np.intersect1d(val, part.pair_keys).size:
            raise ValueError(f"Validation entries overlap the {name} part")


def final_train(
    split: DataSplit,
    hp: Hyperparams,
    cfg: ExperimentConfig,
    X0: Optional[FactorState] = None,
    init_seed: Optional[int] = None,
) -> FinalResult:
    """
    Retrain at `hp` from the tuning X0 and evaluate on the untouched validation part.

    X0 defaults to the state `tune` draws for the same init seed.

    Raises:
        ValueError: Empty validation set or overlapping parts
    """
    if split.validation.is_empty:
        raise ValueError("Final training needs a nonempty validation set")
    if X0 is None:
        if init_seed is None:
            init_seed = cfg.init_seed if cfg.init_seed is not None else cfg.seed
        X0 = initial_state(split, cfg, init_seed)
    report = train_slf(split, hp, cfg.train, X0)
    assert_disjoint(split)
    validation = float("inf") if report.diverged else rmse(report.final_state, split.validation)
    return FinalResult(report=report, validation_rmse=validation)


@dataclass
class RepetitionResult:
    """One row of the experiment report."""
    repetition: int
    split_seed: int
    init_seed: int
    swarm_seed: int
    hyperparams: Hyperparams
    best_test_rmse: float
    validation_rmse: float
    diverged: bool
    outer_iters: int
    swarm_history: List[GenerationRecord]
    default_validation_rmse: Optional[float] = None
    wall_seconds: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "repetition": self.repetition,
            "split_seed": self.split_seed,
            "init_seed": self.init_seed,
            "swarm_seed": self.swarm_seed,
            "hyperparams": self.hyperparams.to_dict(),
            "best_test_rmse": json_float(self.best_test_rmse),
            "validation_rmse": json_float(self.validation_rmse),
            "diverged": self.diverged,
            "outer_iters": self.outer_iters,
            "default_validation_rmse": (None if self.default_validation_rmse is None
                                        else json_float(self.default_validation_rmse)),
            "swarm_history": [
                {"generation": r.generation,
                 "global_best_fitness": json_float(r.global_best_fitness),
                 "global_best_pos": r.global_best_pos}
                for r in self.swarm_history
            ],
        }


def aggregate(values: List[float]) -> Tuple[float, float]:
    """Mean and population standard deviation."""
    array = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        return float("inf"), float("nan")
    return float(np.mean(array)), float(np.std(array))


def format_mean_std(mean: float, std: float, digits: int = 5) -> str:
    """Table-style "mean±std", e.g. 0.85367±0.00015."""
    return f"{mean:.{digits}f}±{std:.{digits}f}"


@dataclass
class ExperimentReport:
    """
    Result of cross_validate.

    Attributes:
        config: Fully resolved flat configuration
        rows: One result per repetition
        mean: Mean validation RMSE
        std: Population standard deviation of validation RMSE
        timing: Wall-clock information (kept apart from deterministic content)
        trace_paths: Swarm trace sidecar files, if written
    """
    config: Dict[str, Any]
    rows: List[RepetitionResult]
    mean: float
    std: float
    timing: Dict[str, Any] = field(default_factory=dict)
    trace_paths: List[str] = field(default_factory=list)

    @property
    def formatted(self) -> str:
        return format_mean_std(self.mean, self.std)

    @property
    def all_diverged(self) -> bool:
        return all(row.diverged for row in self.rows)

    def recompute_aggregate(self) -> Tuple[float, float]:
        return aggregate([row.validation_rmse for row in self.rows])

    def to_frame(self) -> pd.DataFrame:
        """One row per repetition with the headline numbers."""
        return pd.DataFrame([{
            "repetition": row.repetition,
            "lambda": row.hyperparams.lambda_,
            "gamma": row.hyperparams.gamma,
            "best_test_rmse": row.best_test_rmse,
            "validation_rmse": row.validation_rmse,
            "default_validation_rmse": row.default_validation_rmse,
            "diverged": row.diverged,
        } for row in self.rows])

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        document = {
            "config": self.config,
            "repetitions": [row.to_dict() for row in self.rows],
            "aggregate": {
                "mean_validation_rmse": json_float(self.mean),
                "std_validation_rmse": json_float(self.std),
                "formatted": self.formatted,
            },
            "trace_files": list(self.trace_paths),
        }
        if include_timing:
            document["timing"] = self.timing
        return document

    def write_json(self, path: Union[str, Path]) -> Path:
        return write_json(path, self.to_dict())


def _run_repetition(ds: RatingDataset, cfg: ExperimentConfig, repetition: int,
                    progress: bool) -> RepetitionResult:
    start = time.perf_counter()
    split_seed, init_seed, swarm_seed = repetition_seeds(cfg, repetition)
    split = split_dataset(ds, cfg.data.ratios, split_seed)

    tuned = tune(split.tuning_view(), cfg, init_seed=init_seed, swarm_seed=swarm_seed,
                 progress=progress)
    final = final_train(split, tuned.hyperparams, cfg, X0=tuned.initial_state)

    default_val = None
    if cfg.compare_default:
        default_val = final_train(split, cfg.box_center(), cfg, X0=tuned.initial_state).validation_rmse

    _logger.info("repetition %d: lambda=%g gamma=%g validation RMSE %.6f",
                 repetition, tuned.hyperparams.lambda_, tuned.hyperparams.gamma,
                 final.validation_rmse)
    return RepetitionResult(
        repetition=repetition,
        split_seed=split_seed,
        init_seed=init_seed,
        swarm_seed=swarm_seed,
        hyperparams=tuned.hyperparams,
        best_test_rmse=tuned.best_fitness,
        validation_rmse=final.validation_rmse,
        diverged=final.report.diverged,
        outer_iters=final.report.outer_iters_run,
        swarm_history=tuned.history,
        default_validation_rmse=default_val,
        wall_seconds=time.perf_counter() - start,
    )


def cross_validate(
    cfg: ExperimentConfig,
    dataset: Optional[RatingDataset] = None,
    trace_dir: Optional[Union[str, Path]] = None,
    progress: bool = False,
) -> ExperimentReport:
    """
    Repeat split -> tune -> final_train and aggregate validation RMSE.

    Args:
        cfg: Experiment configuration
        dataset: Ratings to use instead of loading cfg.data
        trace_dir: Directory for per-repetition swarm traces (JSON lines)
        progress: Show tqdm progress bars

    Returns:
        ExperimentReport
    """
    started = datetime.now(timezone.utc)
    ds = dataset if dataset is not None else load_dataset(cfg)
    repetitions = range(1, cfg.repetitions + 1)

    if cfg.parallel_repetitions and cfg.repetitions > 1:
        backend = "threading" if cfg.swarm.backend == "sequential" else cfg.swarm.backend
        rows = Parallel(n_jobs=cfg.repetitions, backend=backend)(
            delayed(_run_repetition)(ds, cfg, r, False) for r in repetitions
        )
    else:
        rows = [_run_repetition(ds, cfg, r, progress)
                for r in tqdm(repetitions, desc="repetitions", disable=not progress)]

    trace_paths = []
    if trace_dir is not None:
        trace_dir = Path(trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for row in rows:
            path = write_trace(row.swarm_history, trace_dir / f"swarm_trace_rep{row.repetition}.jsonl")
            trace_paths.append(str(path))

    mean, std = aggregate([row.validation_rmse for row in rows])
    finished = datetime.now(timezone.utc)
    report = ExperimentReport(
        config=cfg.to_flat(),
        rows=rows,
        mean=mean,
        std=std,
        timing={
            "started_at": started.isoformat(),
            "finished_at": finished.isoformat(),
            "repetition_seconds": [row.wall_seconds for row in rows],
        },
        trace_paths=trace_paths,
    )
    _logger.info("validation RMSE over %d repetition(s): %s", len(rows), report.formatted)
    return report
