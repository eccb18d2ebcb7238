"""
Distributed Particle Swarm

Synchronous master-worker particle swarm over a bounded box.

Each generation:
1. The master dispatches fitness(position) for every particle to the workers
   (joblib Parallel); results come back tagged with the particle index.
2. After all results arrive, personal and global bests update. Improvements
   must be strict; ties go to the lowest particle index.
3. Velocities update with fresh r1, r2 per particle and dimension:
       v = omega * v + c1 * r1 * (pb - p) + c2 * r2 * (gb - p)
4. Velocities clamp to [-v_max, v_max]; positions move and clamp to the box,
   zeroing the velocity component of every clamped dimension.

The random draws of particle j in generation g come from a generator seeded
by (seed, j, g) alone, so results never depend on the number of workers.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import NDArray
from tqdm import tqdm

from src.config.experiment_config import SwarmConfig
from src.models.reporting import json_float

_logger = logging.getLogger(__name__)

Fitness = Callable[[NDArray[np.float64]], float]


def particle_rng(seed: int, particle: int, generation: int) -> np.random.Generator:
    """Random stream of one particle in one generation (generation 0 = initialization)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(particle, generation)))


@dataclass
class Particle:
    """
    One candidate point of the swarm.

    Attributes:
        position: Current position
        velocity: Current velocity
        personal_best_pos: Best position evaluated so far
        personal_best_fitness: Its fitness (+inf before the first evaluation)
        fitness: Fitness of the last evaluated position
    """
    position: NDArray[np.float64]
    velocity: NDArray[np.float64]
    personal_best_pos: NDArray[np.float64]
    personal_best_fitness: float = math.inf
    fitness: float = math.inf


@dataclass
class GenerationRecord:
    """Trace of one generation, as written to the JSON-lines sidecar."""
    generation: int
    global_best_fitness: float
    global_best_pos: List[float]
    per_particle: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "generation": self.generation,
            "global_best_fitness": json_float(self.global_best_fitness),
            "global_best_pos": list(self.global_best_pos),
            "per_particle": self.per_particle,
        }


@dataclass
class SwarmState:
    """
    State owned exclusively by the master.

    Attributes:
        particles: Population
        global_best_pos: Best position seen by any particle (None before the first evaluation)
        global_best_fitness: Its fitness
        generation: Completed generations
        history: One record per completed generation
    """
    particles: List[Particle]
    global_best_pos: Optional[NDArray[np.float64]] = None
    global_best_fitness: float = math.inf
    generation: int = 0
    history: List[GenerationRecord] = field(default_factory=list)

    @property
    def positions(self) -> NDArray[np.float64]:
        return np.array([p.position for p in self.particles])

    @property
    def velocities(self) -> NDArray[np.float64]:
        return np.array([p.velocity for p in self.particles])


@dataclass
class SwarmResult:
    """Outcome of run_swarm."""
    best_position: NDArray[np.float64]
    best_fitness: float
    history: List[GenerationRecord]
    state: SwarmState

    @property
    def best_fitness_history(self) -> List[float]:
        return [record.global_best_fitness for record in self.history]


def init_swarm(cfg: SwarmConfig) -> SwarmState:
    """
    Positions uniform in the box, velocities uniform in [-v_max, v_max].

    Particle j draws from its own stream (seed, j, 0).
    """
    lower, upper, v_max = cfg.lower, cfg.upper, cfg.v_max
    particles = []
    for j in range(cfg.num_particles):
        rng = particle_rng(cfg.seed, j, 0)
        position = rng.uniform(lower, upper)
        velocity = rng.uniform(-v_max, v_max)
        particles.append(Particle(position=position, velocity=velocity,
                                  personal_best_pos=position.copy()))
    return SwarmState(particles=particles)


def _safe_fitness(fitness: Fitness, index: int, position: NDArray) -> Tuple[int, float]:
    """Worker side: evaluate one particle; faults and NaN become +inf."""
    try:
        value = float(fitness(position))
    except Exception as e:  # worker fault: the swarm proceeds
        _logger.warning("fitness evaluation failed for particle %d at %s: %s",
                        index, np.array2string(position), e)
        return index, math.inf
    if math.isnan(value):
        _logger.warning("fitness returned NaN for particle %d; treated as +inf", index)
        return index, math.inf
    return index, value


def evaluate_positions(
    fitness: Fitness,
    positions: Sequence[NDArray],
    num_workers: int = 1,
    backend: str = "threading",
) -> List[float]:
    """
    Master side: evaluate positions in parallel and return fitness in input order.

    Workers receive (index, position) and return (index, fitness); the master
    blocks until all results are in.
    """
    positions = [np.array(p, dtype=np.float64) for p in positions]
    if num_workers <= 1 or backend == "sequential" or len(positions) <= 1:
        results = [_safe_fitness(fitness, j, p) for j, p in enumerate(positions)]
    else:
        results = Parallel(n_jobs=num_workers, backend=backend)(
            delayed(_safe_fitness)(fitness, j, p) for j, p in enumerate(positions)
        )
    values = [math.inf] * len(positions)
    for index, value in results:
        values[index] = value
    return values


def _update_bests(state: SwarmState, fitness_values: List[float]) -> None:
    for particle, value in zip(state.particles, fitness_values):
        particle.fitness = value
        if value < particle.personal_best_fitness:
            particle.personal_best_fitness = value
            particle.personal_best_pos = particle.position.copy()
    for particle in state.particles:
        if particle.personal_best_fitness < state.global_best_fitness:
            state.global_best_fitness = particle.personal_best_fitness
            state.global_best_pos = particle.personal_best_pos.copy()
    if state.global_best_pos is None:
        # Every evaluation so far is +inf; attract towards particle 0
        state.global_best_pos = state.particles[0].personal_best_pos.copy()


def _move(state: SwarmState, cfg: SwarmConfig, generation: int) -> None:
    lower, upper, v_max = cfg.lower, cfg.upper, cfg.v_max
    gb = state.global_best_pos
    for j, particle in enumerate(state.particles):
        rng = particle_rng(cfg.seed, j, generation)
        r1 = rng.random(cfg.dimensions)
        r2 = rng.random(cfg.dimensions)
        p = particle.position
        velocity = (cfg.inertia * particle.velocity
                    + cfg.c1 * r1 * (particle.personal_best_pos - p)
                    + cfg.c2 * r2 * (gb - p))
        velocity = np.clip(velocity, -v_max, v_max)
        position = p + velocity
        clamped = (position < lower) | (position > upper)
        position = np.clip(position, lower, upper)
        velocity[clamped] = 0.0
        particle.position = position
        particle.velocity = velocity


def step_generation(state: SwarmState, cfg: SwarmConfig, fitness: Fitness) -> SwarmState:
    """
    One synchronous generation: evaluate all, update bests, then move.

    The state is updated in place and returned.
    """
    generation = state.generation + 1
    evaluated = [(p.position.copy(), p.velocity.copy()) for p in state.particles]
    values = evaluate_positions(fitness, [pos for pos, _ in evaluated],
                                cfg.num_workers, cfg.backend)
    _update_bests(state, values)

    state.history.append(GenerationRecord(
        generation=generation,
        global_best_fitness=state.global_best_fitness,
        global_best_pos=[float(x) for x in state.global_best_pos],
        per_particle=[
            {"pos": [float(x) for x in pos], "vel": [float(x) for x in vel],
             "fitness": json_float(value)}
            for (pos, vel), value in zip(evaluated, values)
        ],
    ))

    _move(state, cfg, generation)
    state.generation = generation
    _logger.debug("generation %d: global best %.6g at %s", generation,
                  state.global_best_fitness, np.array2string(state.global_best_pos))
    return state


def run_swarm(cfg: SwarmConfig, fitness: Fitness, progress: bool = False) -> SwarmResult:
    """
    Initialize and run `cfg.generations` synchronous generations.

    Args:
        cfg: Swarm configuration
        fitness: position -> value; may return +inf, faults degrade to +inf
        progress: Show a tqdm progress bar over generations

    Returns:
        SwarmResult with the overall best and the per-generation history
    """
    state = init_swarm(cfg)
    for _ in tqdm(range(cfg.generations), desc="swarm", unit="gen", disable=not progress):
        step_generation(state, cfg, fitness)
    _logger.info("swarm finished: best fitness %.6g at %s after %d generations",
                 state.global_best_fitness, np.array2string(state.global_best_pos),
                 state.generation)
    return SwarmResult(
        best_position=state.global_best_pos.copy(),
        best_fitness=state.global_best_fitness,
        history=state.history,
        state=state,
    )


def write_trace(history: Sequence[GenerationRecord], path: Union[str, Path]) -> Path:
    """Write one JSON record per generation."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as handle:
        for record in history:
            handle.write(json.dumps(record.to_dict()) + "\n")
    return path
