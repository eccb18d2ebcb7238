"""
Unit tests for the inexact conjugate gradient solver.
"""

import numpy as np
import pytest
from scipy import linalg
from scipy.sparse.linalg import aslinearoperator

from src.config.experiment_config import CgConfig
from src.errors import DivergenceError
from src.models.cg import CgTermination, cg_solve


def random_spd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T + n * np.eye(n)


class TestBasicSolves:
    """Tests for small systems with known solutions."""

    def test_identity(self):
        """Test that the identity converges to b in one update."""
        b = np.array([1.0, -2.0, 3.5])
        result = cg_solve(lambda v: v, b)
        assert np.allclose(result.solution, b)
        assert result.iterations == 1
        assert result.termination is CgTermination.CONVERGED

    def test_zero_rhs(self):
        """Test that a zero right-hand side returns x0 untouched."""
        x0 = np.array([0.5, 0.25])
        result = cg_solve(lambda v: 2 * v, np.zeros(2), x0=x0)
        assert result.termination is CgTermination.ZERO_RHS
        assert np.array_equal(result.solution, x0)
        assert result.iterations == 0
        assert result.operator_calls == 0

    def test_two_by_two(self):
        """Test A = [[4, 1], [1, 3]], b = (1, 2)."""
        A = np.array([[4.0, 1.0], [1.0, 3.0]])
        result = cg_solve(lambda v: A @ v, np.array([1.0, 2.0]),
                          config=CgConfig(max_iters=10, rel_tol=1e-10))
        assert result.iterations <= 2
        assert result.solution == pytest.approx([1 / 11, 7 / 11], abs=1e-10)

    def test_linear_operator_accepted(self):
        """Test a scipy LinearOperator as the operator."""
        A = np.array([[4.0, 1.0], [1.0, 3.0]])
        result = cg_solve(aslinearoperator(A), np.array([1.0, 2.0]),
                          config=CgConfig(max_iters=10, rel_tol=1e-10))
        assert result.solution == pytest.approx([1 / 11, 7 / 11], abs=1e-10)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            cg_solve(lambda v: v, np.ones(3), x0=np.ones(2))


class TestRandomSystems:
    """Tests against a direct solve."""

    @pytest.mark.parametrize("n", [10, 20])
    def test_matches_direct_solve(self, n):
        rng = np.random.default_rng(n)
        for _ in range(5):
            A = random_spd(rng, n)
            b = rng.standard_normal(n)
            result = cg_solve(lambda v: A @ v, b, config=CgConfig(max_iters=n, rel_tol=1e-12))
            expected = linalg.solve(A, b, assume_a="pos")
            assert np.linalg.norm(result.solution - expected) <= 1e-8 * np.linalg.norm(expected)

    def test_error_a_norm_decreases(self):
        """Test that the A-norm of the error never grows between iterates."""
        rng = np.random.default_rng(5)
        A = random_spd(rng, 12)
        b = rng.standard_normal(12)
        exact = linalg.solve(A, b, assume_a="pos")
        errors = []
        for k in range(1, 13):
            x = cg_solve(lambda v: A @ v, b, config=CgConfig(max_iters=k, rel_tol=1e-14)).solution
            e = x - exact
            errors.append(float(e @ A @ e))
        assert all(later <= earlier * (1 + 1e-9) + 1e-20
                   for earlier, later in zip(errors, errors[1:]))


class TestBudgetAndTermination:
    """Tests for the iteration budget and stop reasons."""

    def test_operator_call_budget(self):
        """Test that the operator runs at most max_iters + 1 times."""
        rng = np.random.default_rng(1)
        A = random_spd(rng, 30)
        calls = []

        def apply(v):
            calls.append(1)
            return A @ v

        result = cg_solve(apply, rng.standard_normal(30), x0=rng.standard_normal(30),
                          config=CgConfig(max_iters=4, rel_tol=1e-12))
        assert result.termination is CgTermination.MAX_ITERS
        assert result.iterations == 4
        assert len(calls) == result.operator_calls <= 5

    def test_residual_history(self):
        A = np.diag([1.0, 10.0, 100.0])
        result = cg_solve(lambda v: A @ v, np.ones(3), config=CgConfig(max_iters=3, rel_tol=1e-12))
        assert result.residual_history[0] == pytest.approx(1.0)
        assert len(result.residual_history) == result.iterations + 1
        assert result.final_rel_residual == result.residual_history[-1]

    def test_curvature_breakdown(self):
        """Test that a zero-curvature direction stops with the last iterate."""
        A = np.diag([0.0, 1.0])
        result = cg_solve(lambda v: A @ v, np.array([1.0, 0.0]))
        assert result.termination is CgTermination.CURVATURE_BREAKDOWN
        assert np.array_equal(result.solution, [0.0, 0.0])

    def test_non_finite_raises(self):
        with pytest.raises(DivergenceError):
            cg_solve(lambda v: v * np.inf, np.ones(2))
        with pytest.raises(DivergenceError):
            cg_solve(lambda v: v, np.array([np.nan, 1.0]))

    def test_input_not_modified(self):
        b = np.array([1.0, 2.0])
        x0 = np.array([0.1, 0.1])
        cg_solve(lambda v: 3 * v, b, x0=x0)
        assert np.array_equal(b, [1.0, 2.0])
        assert np.array_equal(x0, [0.1, 0.1])
