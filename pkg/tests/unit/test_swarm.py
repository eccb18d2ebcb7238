"""
Unit tests for the synchronous particle swarm.
"""

import json
import math

import numpy as np
import pytest

from src.config.experiment_config import SwarmConfig
from src.models.swarm import (
    Particle,
    SwarmState,
    evaluate_positions,
    init_swarm,
    particle_rng,
    run_swarm,
    step_generation,
    write_trace,
)

CONSTRICTION = dict(inertia=0.7298, c1=1.49618, c2=1.49618)


def sphere(position):
    """Scaled sphere with its minimum 0 at (0.05, 150)."""
    return ((position[0] - 0.05) / 0.1) ** 2 + ((position[1] - 150.0) / 300.0) ** 2


def manual_state(*particles):
    """Swarm whose particles start at given (position, velocity) pairs."""
    return SwarmState(particles=[
        Particle(position=np.array(p, dtype=float), velocity=np.array(v, dtype=float),
                 personal_best_pos=np.array(p, dtype=float))
        for p, v in particles
    ])


@pytest.fixture
def default_cfg():
    return SwarmConfig()


class TestConfig:
    """Tests for swarm configuration-derived values."""

    def test_velocity_clamp(self, default_cfg):
        """Test v_max at 20% of the (lambda, gamma) ranges."""
        assert default_cfg.v_max == pytest.approx([0.02, 60.0])

    def test_center(self, default_cfg):
        assert default_cfg.center() == pytest.approx([0.05, 150.0])


class TestInitialization:
    """Tests for init_swarm."""

    def test_within_bounds(self, default_cfg):
        state = init_swarm(default_cfg)
        assert len(state.particles) == 8
        assert np.all(state.positions >= default_cfg.lower)
        assert np.all(state.positions <= default_cfg.upper)
        assert np.all(np.abs(state.velocities) <= default_cfg.v_max)

    def test_deterministic(self, default_cfg):
        a, b = init_swarm(default_cfg), init_swarm(default_cfg)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.velocities, b.velocities)

    def test_seed_changes_swarm(self):
        a = init_swarm(SwarmConfig(seed=1))
        b = init_swarm(SwarmConfig(seed=2))
        assert not np.array_equal(a.positions, b.positions)

    def test_streams_independent_of_population(self):
        """Test that particle j draws the same start regardless of swarm size."""
        small = init_swarm(SwarmConfig(num_particles=2, seed=4))
        large = init_swarm(SwarmConfig(num_particles=6, seed=4))
        assert np.array_equal(small.positions, large.positions[:2])

    def test_particle_rng(self):
        a = particle_rng(3, 1, 2).random(4)
        b = particle_rng(3, 1, 2).random(4)
        c = particle_rng(3, 2, 1).random(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestMovement:
    """Tests for the velocity and position update."""

    def test_attractor_identity(self):
        """Test that pb = gb = p with omega = 1 keeps the velocity."""
        cfg = SwarmConfig(num_particles=1, inertia=1.0)
        state = manual_state(([0.05, 150.0], [0.01, -20.0]))
        step_generation(state, cfg, lambda p: 1.0)
        assert state.particles[0].velocity == pytest.approx([0.01, -20.0])
        assert state.particles[0].position == pytest.approx([0.06, 130.0])

    def test_velocity_clamped(self):
        """Test that a lambda velocity of 0.05 clamps to 0.02."""
        cfg = SwarmConfig(num_particles=1, inertia=1.0, c1=0.0, c2=0.0)
        state = manual_state(([0.0, 150.0], [0.05, 0.0]))
        step_generation(state, cfg, lambda p: 1.0)
        assert state.particles[0].velocity == pytest.approx([0.02, 0.0])
        assert state.particles[0].position == pytest.approx([0.02, 150.0])

    def test_position_clamped_zeroes_velocity(self):
        cfg = SwarmConfig(num_particles=1, inertia=1.0, c1=0.0, c2=0.0)
        state = manual_state(([0.09, 150.0], [0.02, 10.0]))
        step_generation(state, cfg, lambda p: 1.0)
        assert state.particles[0].position == pytest.approx([0.1, 160.0])
        assert state.particles[0].velocity == pytest.approx([0.0, 10.0])

    def test_tie_goes_to_lower_index(self):
        """Test that equal best fitness picks the lower particle index."""
        cfg = SwarmConfig(num_particles=3)
        state = manual_state(([0.01, 10.0], [0, 0]), ([0.05, 20.0], [0, 0]), ([0.07, 30.0], [0, 0]))
        step_generation(state, cfg, lambda p: 1.0 if p[0] > 0.03 else 2.0)
        assert state.global_best_fitness == 1.0
        assert state.global_best_pos == pytest.approx([0.05, 20.0])

    def test_history_records_evaluated_positions(self, default_cfg):
        state = init_swarm(default_cfg)
        start = state.positions.copy()
        step_generation(state, default_cfg, sphere)
        record = state.history[0]
        assert record.generation == 1
        assert np.allclose([p["pos"] for p in record.per_particle], start)
        assert record.global_best_fitness == min(p["fitness"] for p in record.per_particle)


class TestRunSwarm:
    """Tests for complete swarm runs."""

    def test_single_particle(self):
        """Test that a one-particle swarm tracks its own best."""
        cfg = SwarmConfig(num_particles=1, generations=5, seed=2)
        result = run_swarm(cfg, sphere)
        particle = result.state.particles[0]
        assert result.best_fitness == particle.personal_best_fitness
        assert np.array_equal(result.best_position, particle.personal_best_pos)

    def test_constant_fitness(self, default_cfg):
        """Test that gb stays at particle 0's first position."""
        first = init_swarm(default_cfg).particles[0].position
        result = run_swarm(default_cfg, lambda p: 3.0)
        assert np.array_equal(result.best_position, first)
        assert all(r.global_best_pos == list(first) for r in result.history)

    def test_deterministic(self):
        cfg = SwarmConfig(generations=6, seed=9)
        a = run_swarm(cfg, sphere)
        b = run_swarm(cfg, sphere)
        assert [r.to_dict() for r in a.history] == [r.to_dict() for r in b.history]

    @pytest.mark.parametrize("workers", [2, 8])
    def test_worker_count_invariance(self, workers):
        """Test identical histories for 1 and W workers."""
        serial = run_swarm(SwarmConfig(generations=6, seed=5, num_workers=1), sphere)
        parallel = run_swarm(SwarmConfig(generations=6, seed=5, num_workers=workers), sphere)
        assert [r.to_dict() for r in serial.history] == [r.to_dict() for r in parallel.history]
        assert np.array_equal(serial.best_position, parallel.best_position)

    def test_global_best_non_increasing(self):
        result = run_swarm(SwarmConfig(generations=15, seed=1), sphere)
        history = result.best_fitness_history
        assert all(b <= a for a, b in zip(history, history[1:]))

    def test_bounds_hold_every_generation(self):
        cfg = SwarmConfig(generations=30, seed=6, **CONSTRICTION)
        state = init_swarm(cfg)
        for _ in range(cfg.generations):
            step_generation(state, cfg, sphere)
            assert np.all(state.positions >= cfg.lower)
            assert np.all(state.positions <= cfg.upper)
            assert np.all(np.abs(state.velocities) <= cfg.v_max + 1e-12)

    def test_sphere_benchmark(self):
        """Test the median best over 10 seeds on the scaled sphere."""
        bests = [
            run_swarm(SwarmConfig(num_particles=8, generations=30, seed=seed, **CONSTRICTION),
                      sphere).best_fitness
            for seed in range(10)
        ]
        assert np.median(bests) <= 1e-3

    def test_sphere_benchmark_default_coefficients(self):
        """Test the scaled sphere with omega=1 and c1=c2=2."""
        bests = [
            run_swarm(SwarmConfig(num_particles=8, generations=30, seed=seed), sphere).best_fitness
            for seed in range(10)
        ]
        assert np.median(bests) <= 1e-3


class TestFaults:
    """Tests for worker faults and sentinels."""

    def test_exception_becomes_inf(self):
        def fragile(position):
            if position[0] > 0.05:
                raise RuntimeError("worker crashed")
            return 1.0

        values = evaluate_positions(fragile, [[0.01, 1.0], [0.09, 1.0]])
        assert values == [1.0, math.inf]

    def test_nan_becomes_inf(self):
        values = evaluate_positions(lambda p: float("nan"), [[0.01, 1.0]])
        assert values == [math.inf]

    def test_all_infinite_keeps_running(self):
        result = run_swarm(SwarmConfig(generations=3), lambda p: math.inf)
        assert result.best_fitness == math.inf
        assert len(result.history) == 3

    def test_parallel_order_preserved(self):
        positions = [[0.01 * k, 10.0 * k] for k in range(6)]
        values = evaluate_positions(sphere, positions, num_workers=3)
        assert values == [sphere(np.array(p)) for p in positions]


class TestTrace:
    """Tests for the JSON-lines trace."""

    def test_write_trace(self, tmp_path):
        result = run_swarm(SwarmConfig(generations=4, seed=3), sphere)
        path = write_trace(result.history, tmp_path / "trace.jsonl")
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert [r["generation"] for r in records] == [1, 2, 3, 4]
        assert len(records[0]["per_particle"]) == 8
        assert set(records[0]["per_particle"][0]) == {"pos", "vel", "fitness"}
