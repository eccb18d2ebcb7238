"""
Visualization script for the latent-factor trainer and the hyperparameter swarm.

Generates:
1. Train/test RMSE per outer iteration for a few (lambda, gamma) settings
2. Global-best fitness and position trajectory of one swarm run
3. Heatmap of test-RMSE fitness over a (lambda, gamma) grid
"""

from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns

from src.config import ExperimentConfig
from src.models.factors import Hyperparams
from src.models.pipeline import initial_state, load_dataset, repetition_seeds, tune
from src.models.ratings import split_dataset
from src.models.trainer import fitness_of, train_slf


RESULTS_DIR = Path(__file__).parent.parent / "results"
RESULTS_DIR.mkdir(exist_ok=True)

SETTING_COLORS = ["#3498DB", "#2ECC71", "#E74C3C", "#9B59B6"]


def prepare(config: ExperimentConfig):
    """Split and initial state of repetition 1."""
    split_seed, init_seed, swarm_seed = repetition_seeds(config, 1)
    split = split_dataset(load_dataset(config), config.data.ratios, split_seed)
    return split, initial_state(split, config, init_seed), init_seed, swarm_seed


def plot_1_rmse_curves(config: ExperimentConfig, save_path: Path):
    """
    Visualization 1: RMSE per outer iteration.
    Solid lines are test RMSE, dashed lines train RMSE.
    """
    print("Generating Visualization 1: RMSE curves...")

    split, X0, _, _ = prepare(config)
    settings = [Hyperparams(0.0, 0.0), Hyperparams(0.01, 10.0),
                config.box_center(), Hyperparams(0.1, 300.0)]

    fig, ax = plt.subplots(figsize=(12, 7))
    for hp, color in zip(settings, SETTING_COLORS):
        report = train_slf(split, hp, config.train, X0)
        steps = np.arange(1, report.outer_iters_run + 1)
        label = f"lambda={hp.lambda_:g}, gamma={hp.gamma:g}"
        ax.plot(steps, report.test_rmse_history, color=color, linewidth=2.5, label=label)
        ax.plot(steps, report.train_rmse_history, color=color, linewidth=1.5, linestyle="--")

    ax.set_xlabel("Outer iteration", fontsize=12)
    ax.set_ylabel("RMSE", fontsize=12)
    ax.set_title("Hessian-free training convergence", fontsize=14, fontweight="bold")
    ax.legend(loc="best", fontsize=10)
    ax.grid(True, alpha=0.3)

    plt.tight_layout()
    plt.savefig(save_path, dpi=300, bbox_inches="tight")
    print(f"  Saved to: {save_path}")
    plt.close()


def plot_2_swarm_trajectory(config: ExperimentConfig, save_path: Path):
    """
    Visualization 2: Global-best fitness per generation and the path of the
    global-best position through the (lambda, gamma) box.
    """
    print("Generating Visualization 2: Swarm trajectory...")

    split, _, init_seed, swarm_seed = prepare(config)
    result = tune(split, config, init_seed=init_seed, swarm_seed=swarm_seed)
    generations = [r.generation for r in result.history]
    fitness = [r.global_best_fitness for r in result.history]
    path = np.array([r.global_best_pos for r in result.history])
    evaluated = np.array([p["pos"] for r in result.history for p in r.per_particle])

    fig, (left, right) = plt.subplots(1, 2, figsize=(16, 6))

    left.plot(generations, fitness, color=SETTING_COLORS[0], linewidth=2.5, marker="o")
    left.set_xlabel("Generation", fontsize=12)
    left.set_ylabel("Global-best test RMSE", fontsize=12)
    left.set_title("Swarm fitness", fontsize=14, fontweight="bold")
    left.grid(True, alpha=0.3)

    (lam_lo, lam_hi), (gam_lo, gam_hi) = config.swarm.bounds
    right.scatter(evaluated[:, 0], evaluated[:, 1], s=12, color="#95A5A6", alpha=0.5,
                  label="evaluated")
    right.plot(path[:, 0], path[:, 1], color=SETTING_COLORS[2], linewidth=2, marker="o",
               label="global best")
    right.set_xlim(lam_lo, lam_hi)
    right.set_ylim(gam_lo, gam_hi)
    right.set_xlabel("lambda", fontsize=12)
    right.set_ylabel("gamma", fontsize=12)
    right.set_title("Search trajectory", fontsize=14, fontweight="bold")
    right.legend(loc="best", fontsize=10)
    right.grid(True, alpha=0.3)

    plt.tight_layout()
    plt.savefig(save_path, dpi=300, bbox_inches="tight")
    print(f"  Saved to: {save_path}")
    plt.close()


def plot_3_fitness_heatmap(config: ExperimentConfig, save_path: Path, points: int = 6):
    """
    Visualization 3: Fitness landscape on a regular grid over the search box.
    Diverged cells are left blank.
    """
    print("Generating Visualization 3: Fitness heatmap...")

    split, X0, _, _ = prepare(config)
    view = split.tuning_view()
    (lam_lo, lam_hi), (gam_lo, gam_hi) = config.swarm.bounds
    lambdas = np.linspace(lam_lo, lam_hi, points)
    gammas = np.linspace(gam_lo, gam_hi, points)

    grid = pd.DataFrame(
        [[fitness_of(view, Hyperparams(lam, gam), config.train, X0) for lam in lambdas]
         for gam in gammas],
        index=[f"{g:.0f}" for g in gammas],
        columns=[f"{lam:.3f}" for lam in lambdas],
    ).replace(np.inf, np.nan)

    fig, ax = plt.subplots(figsize=(10, 8))
    sns.heatmap(grid, annot=True, fmt=".4f", cmap="viridis_r", ax=ax,
                cbar_kws={"label": "test RMSE"})
    ax.invert_yaxis()
    ax.set_xlabel("lambda", fontsize=12)
    ax.set_ylabel("gamma", fontsize=12)
    ax.set_title("Fitness over the search box", fontsize=14, fontweight="bold")

    plt.tight_layout()
    plt.savefig(save_path, dpi=300, bbox_inches="tight")
    print(f"  Saved to: {save_path}")
    plt.close()


def main():
    """Generate all visualizations."""
    print("=" * 70)
    print("PSLF - Visualization Suite")
    print("=" * 70)
    print()

    config = ExperimentConfig.desk()
    print(config.summary())
    print()

    print("Generating visualizations...")
    print("-" * 70)

    plot_1_rmse_curves(config, RESULTS_DIR / "1_rmse_curves.png")
    plot_2_swarm_trajectory(config, RESULTS_DIR / "2_swarm_trajectory.png")
    plot_3_fitness_heatmap(config, RESULTS_DIR / "3_fitness_heatmap.png")

    print()
    print("=" * 70)
    print("All visualizations generated successfully!")
    print(f"Results saved to: {RESULTS_DIR.absolute()}")
    print("=" * 70)


if __name__ == "__main__":
    main()
