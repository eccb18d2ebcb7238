"""
Hessian-Free Training Loop

Each outer iteration solves the damped Gauss-Newton system

    (J'J + lambda * C + gamma * I) dX = -grad L(X)

with inexact CG and applies the full step X <- X + dX. There is no line
search: gamma is the only step-size control. Training stops early when the
test RMSE stops improving, and any non-finite value ends the run with the
diverged flag set and an infinite fitness.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd
from scipy.sparse.linalg import LinearOperator

from src.config.experiment_config import TrainConfig
from src.errors import DivergenceError
from src.models.cg import CgTermination, cg_solve
from src.models.factors import (
    FactorState,
    Hyperparams,
    gn_vector_product,
    gradient,
    loss,
    rmse,
)
from src.models.reporting import json_float

_logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["iter", "train_rmse", "test_rmse", "cg_iters", "elapsed_s"]


@dataclass
class TrainReport:
    """
    Record of one Hessian-free training run.

    Attributes:
        final_state: Best-test-RMSE state (X0 if no step completed)
        hyperparams: (lambda, gamma) used
        train_rmse_history: Train RMSE after each outer iteration
        test_rmse_history: Test RMSE after each outer iteration (NaN without a test set)
        loss_history: Objective after each outer iteration
        cg_iterations: CG updates per outer iteration
        elapsed_history: Seconds since start at the end of each outer iteration
        outer_iters_run: Completed outer iterations
        best_iteration: 1-based index of the returned state (0 = X0)
        diverged: A non-finite value appeared
        elapsed_seconds: Wall time of the run
    """
    final_state: FactorState
    hyperparams: Hyperparams
    train_rmse_history: List[float] = field(default_factory=list)
    test_rmse_history: List[float] = field(default_factory=list)
    loss_history: List[float] = field(default_factory=list)
    cg_iterations: List[int] = field(default_factory=list)
    elapsed_history: List[float] = field(default_factory=list)
    outer_iters_run: int = 0
    best_iteration: int = 0
    diverged: bool = False
    elapsed_seconds: float = 0.0

    @property
    def monitored_history(self) -> List[float]:
        """History driving early stopping: test RMSE, or train RMSE without a test set."""
        if self.test_rmse_history and all(math.isnan(x) for x in self.test_rmse_history):
            return self.train_rmse_history
        return self.test_rmse_history

    @property
    def best_test_rmse(self) -> float:
        """Lowest monitored RMSE; +inf when nothing finite was recorded."""
        finite = [x for x in self.monitored_history if math.isfinite(x)]
        return min(finite) if finite else float("inf")

    @property
    def fitness(self) -> float:
        """Best test RMSE, or +inf for a diverged run."""
        return float("inf") if self.diverged else self.best_test_rmse

    def to_frame(self) -> pd.DataFrame:
        """Per-iteration metrics as a DataFrame with METRIC_COLUMNS."""
        return pd.DataFrame({
            "iter": np.arange(1, self.outer_iters_run + 1),
            "train_rmse": self.train_rmse_history,
            "test_rmse": self.test_rmse_history,
            "cg_iters": self.cg_iterations,
            "elapsed_s": self.elapsed_history,
        }, columns=METRIC_COLUMNS)

    def write_metrics_csv(self, path: Union[str, Path], header: Iterable[str] = ()) -> Path:
        """
        Write "iter,train_rmse,test_rmse,cg_iters,elapsed_s" rows at full precision.

        Header strings become leading "#" lines; read back with
        `pd.read_csv(path, comment="#")`.
        """
        path = Path(path)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            for text in header:
                handle.write(f"# {text}\n")
            self.to_frame().to_csv(handle, index=False, float_format="%.17g")
        return path

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready summary without the factor values."""
        return {
            "hyperparams": self.hyperparams.to_dict(),
            "train_rmse_history": [json_float(x) for x in self.train_rmse_history],
            "test_rmse_history": [json_float(x) for x in self.test_rmse_history],
            "loss_history": [json_float(x) for x in self.loss_history],
            "cg_iterations": list(self.cg_iterations),
            "outer_iters_run": self.outer_iters_run,
            "best_iteration": self.best_iteration,
            "best_test_rmse": json_float(self.best_test_rmse),
            "fitness": json_float(self.fitness),
            "diverged": self.diverged,
        }


def _check_inputs(split, X0: FactorState) -> None:
    if split.train.is_empty:
        raise ValueError("Training set is empty")
    if not X0.matches(split.train):
        raise ValueError(
            f"Initial factors are {X0.num_users}x{X0.num_items} but the split is "
            f"{split.num_users}x{split.num_items}"
        )


def train_slf(
    split,
    hp: Hyperparams,
    cfg: Optional[TrainConfig] = None,
    X0: Optional[FactorState] = None,
) -> TrainReport:
    """
    Run Hessian-free training from X0.

    Args:
        split: DataSplit or TuningSplit (only train and test are read)
        hp: Regularization and damping
        cfg: Outer-loop and CG configuration
        X0: Initial factors (never modified)

    Returns:
        TrainReport whose final_state has the lowest monitored RMSE

    Raises:
        ValueError: Empty training set or shape mismatch
    """
    cfg = cfg or TrainConfig()
    if X0 is None:
        raise ValueError("An initial FactorState is required")
    _check_inputs(split, X0)

    train, test = split.train, split.test
    has_test = not test.is_empty
    n = X0.size
    start = time.perf_counter()
    report = TrainReport(final_state=X0, hyperparams=hp)

    X = X0
    best_rmse = math.inf
    reference = math.inf  # monitored RMSE at the last significant improvement
    stale = 0
    previous_step = None

    for t in range(1, cfg.max_outer_iters + 1):
        try:
            g = gradient(X, train, hp.lambda_)
            state = X
            op = LinearOperator(
                (n, n),
                matvec=lambda v: gn_vector_product(state, train, v, hp.lambda_, hp.gamma),
                dtype=np.float64,
            )
            x0 = previous_step if (cfg.warm_start and previous_step is not None) else None
            solve = cg_solve(op, -g, x0=x0, config=cfg.cg)
            with np.errstate(over="ignore", invalid="ignore"):
                values = X.values + solve.solution.reshape(X.values.shape)
            if not np.all(np.isfinite(values)):
                raise DivergenceError("diverged: non-finite factors after update")
            X = X.with_values(values)
            previous_step = solve.solution
            train_rmse = rmse(X, train)
            test_rmse = rmse(X, test) if has_test else float("nan")
            objective = loss(X, train, hp.lambda_)
            monitored = test_rmse if has_test else train_rmse
            if not math.isfinite(monitored) or not math.isfinite(train_rmse):
                raise DivergenceError("diverged: non-finite RMSE")
        except DivergenceError as e:
            report.diverged = True
            _logger.warning("training diverged at iteration %d (lambda=%g, gamma=%g): %s",
                            t, hp.lambda_, hp.gamma, e)
            break

        report.train_rmse_history.append(train_rmse)
        report.test_rmse_history.append(test_rmse)
        report.loss_history.append(objective)
        report.cg_iterations.append(solve.iterations)
        report.elapsed_history.append(time.perf_counter() - start)
        report.outer_iters_run = t
        _logger.debug("iter %d: train_rmse=%.6f test_rmse=%.6f cg=%d (%s)",
                      t, train_rmse, test_rmse, solve.iterations, solve.termination.value)

        if monitored < best_rmse:
            best_rmse = monitored
            report.final_state = X
            report.best_iteration = t

        if solve.termination is CgTermination.ZERO_RHS:
            # Stationary point: the step was zero and further iterations repeat it
            break

        if monitored < reference - cfg.min_delta:
            reference = monitored
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                _logger.debug("early stop at iteration %d after %d stale rounds", t, stale)
                break

    report.elapsed_seconds = time.perf_counter() - start
    _logger.info("trained lambda=%g gamma=%g: %d iterations, best RMSE %.6f%s",
                 hp.lambda_, hp.gamma, report.outer_iters_run, report.best_test_rmse,
                 " (diverged)" if report.diverged else "")
    return report


def fitness_of(
    split,
    hp: Hyperparams,
    cfg: Optional[TrainConfig],
    X0: FactorState,
) -> float:
    """
    Best test RMSE of a full training run at `hp`, or +inf on divergence.

    X0 is immutable, so every call starts from exactly the same factors.

    Raises:
        ValueError: Empty test set
    """
    if split.test.is_empty:
        raise ValueError("Fitness needs a nonempty test set")
    return train_slf(split, hp, cfg, X0).fitness
