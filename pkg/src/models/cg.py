"""
Inexact Conjugate Gradient

Matrix-free CG over a symmetric positive semi-definite operator. The
operator is anything with a `matvec` method (scipy LinearOperator) or a
plain callable v -> A v; it is evaluated at most max_iters + 1 times.

Termination:
- zero_rhs: |b| = 0, x0 is returned untouched
- converged: |r| / |b| <= rel_tol
- curvature_breakdown: p'Ap <= curvature_floor * |p|^2, last iterate returned
- max_iters: budget exhausted
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Union

import numpy as np
from numpy.typing import NDArray
from scipy.sparse.linalg import LinearOperator

from src.config.experiment_config import CgConfig
from src.errors import DivergenceError

Operator = Union[LinearOperator, Callable[[NDArray], NDArray]]


class CgTermination(Enum):
    """Why a CG solve stopped."""
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    CURVATURE_BREAKDOWN = "curvature_breakdown"
    ZERO_RHS = "zero_rhs"


@dataclass
class CgResult:
    """
    Outcome of one CG solve.

    Attributes:
        solution: Final iterate
        iterations: Completed CG updates
        final_rel_residual: |r| / |b| at the final iterate (0 for a zero rhs)
        termination: Stop reason
        residual_history: |r| / |b| at the start and after each update
        operator_calls: Number of operator evaluations
    """
    solution: NDArray[np.float64]
    iterations: int
    final_rel_residual: float
    termination: CgTermination
    residual_history: List[float] = field(default_factory=list)
    operator_calls: int = 0


def _matvec(apply: Operator) -> Callable[[NDArray], NDArray]:
    if hasattr(apply, "matvec"):
        return apply.matvec
    return apply


def cg_solve(
    apply: Operator,
    b: NDArray,
    x0: Optional[NDArray] = None,
    config: Optional[CgConfig] = None,
) -> CgResult:
    """
    Solve A x = b by conjugate gradient from x0.

    Args:
        apply: Symmetric PSD operator (LinearOperator or callable)
        b: Right-hand side
        x0: Starting point (zeros if None)
        config: Budget and tolerances

    Returns:
        CgResult

    Raises:
        ValueError: If x0 and b lengths differ
        DivergenceError: If a non-finite value appears during iteration
    """
    config = config or CgConfig()
    matvec = _matvec(apply)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64).reshape(-1)
    if x.shape != b.shape:
        raise ValueError(f"x0 has length {x.size} but b has length {b.size}")
    if not np.all(np.isfinite(b)):
        raise DivergenceError("diverged: non-finite right-hand side")

    with np.errstate(over="ignore"):
        b_norm = float(np.linalg.norm(b))
    if not np.isfinite(b_norm):
        raise DivergenceError("diverged: right-hand side norm overflows")
    if b_norm == 0.0:
        return CgResult(x, 0, 0.0, CgTermination.ZERO_RHS, [0.0], 0)

    calls = 0
    if np.any(x):
        r = b - np.asarray(matvec(x), dtype=np.float64).reshape(-1)
        calls += 1
    else:
        r = b.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        rs = float(np.dot(r, r))
    history = [np.sqrt(rs) / b_norm]
    if not np.isfinite(rs):
        raise DivergenceError("diverged: non-finite CG residual")
    if history[-1] <= config.rel_tol:
        return CgResult(x, 0, history[-1], CgTermination.CONVERGED, history, calls)

    p = r.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, config.max_iters + 1):
            Ap = np.asarray(matvec(p), dtype=np.float64).reshape(-1)
            calls += 1
            curvature = float(np.dot(p, Ap))
            if not np.isfinite(curvature):
                raise DivergenceError("diverged: non-finite curvature in CG")
            if curvature <= config.curvature_floor * float(np.dot(p, p)):
                return CgResult(x, k - 1, history[-1], CgTermination.CURVATURE_BREAKDOWN,
                                history, calls)

            alpha = rs / curvature
            x = x + alpha * p
            r = r - alpha * Ap
            rs_new = float(np.dot(r, r))
            if not np.isfinite(rs_new) or not np.all(np.isfinite(x)):
                raise DivergenceError("diverged: non-finite CG iterate")
            history.append(np.sqrt(rs_new) / b_norm)
            if history[-1] <= config.rel_tol:
                return CgResult(x, k, history[-1], CgTermination.CONVERGED, history, calls)

            p = r + (rs_new / rs) * p
            rs = rs_new

    return CgResult(x, config.max_iters, history[-1], CgTermination.MAX_ITERS, history, calls)
