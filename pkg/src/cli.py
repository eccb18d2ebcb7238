"""
Command-line front door.

    pslf split    [options]                         write the split manifest and parts
    pslf train    [options] --lambda L --gamma G    one Hessian-free run + snapshot
    pslf tune     [options]                         repeated split / tune / validate
    pslf evaluate --snapshot F --ratings R          RMSE of a snapshot on a ratings file

Common options: --config FILE, --set section.key=value (repeatable),
--output DIR, --workers N, --delimiter D, --data FILE,
--synthetic "users=U items=I rank=R density=p noise=s seed=k", -v/-vv.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 every run diverged.
"""

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from src.config.experiment_config import ExperimentConfig
from src.config.loader import resolve_config
from src.errors import ConfigError, RatingsFormatError, SnapshotError
from src.models.factors import FactorState, rmse
from src.models.pipeline import (
    cross_validate,
    initial_state,
    load_dataset,
    repetition_seeds,
)
from src.models.reporting import write_json
from src.models.ratings import RatingDataset, load_ratings, split_dataset
from src.models.synthetic import parse_synthetic_spec
from src.models.trainer import train_slf

_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3

DEFAULT_OUTPUT = "pslf_output"
ID_MAP_SUFFIX = ".ids.json"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors become ConfigError (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat section.key = value config file")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key (repeatable)")
    common.add_argument("--output", default=DEFAULT_OUTPUT, help="output directory")
    common.add_argument("--workers", type=int, help="parallel fitness evaluations")
    common.add_argument("--delimiter", help="ratings field separator (e.g. '::', tab, comma)")
    common.add_argument("--data", help="ratings file (overrides data.path)")
    common.add_argument("--synthetic", metavar="SPEC",
                        help="use synthetic data: 'users=U items=I rank=R density=p noise=s seed=k'")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress information, -vv for per-iteration detail")

    parser = _Parser(prog="pslf", description="Hessian-free latent factor training "
                                              "with particle-swarm hyperparameter tuning")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    commands.add_parser("split", parents=[common], help="write a split manifest and its parts")

    train = commands.add_parser("train", parents=[common], help="train at explicit (lambda, gamma)")
    train.add_argument("--lambda", dest="lambda_", type=float, help="regularization (hp.lambda)")
    train.add_argument("--gamma", type=float, help="damping (hp.gamma)")

    tune = commands.add_parser("tune", parents=[common], help="run the cross-validated experiment")
    tune.add_argument("--progress", action="store_true", help="show progress bars")

    evaluate = commands.add_parser("evaluate", parents=[common], help="RMSE of a factor snapshot")
    evaluate.add_argument("--snapshot", required=True, help="factor snapshot file")
    evaluate.add_argument("--ratings", required=True, help="ratings file to score")
    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def resolve_invocation(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults <- config file <- --set overrides <- dedicated flags."""
    overrides: List[str] = list(args.overrides)
    values: Dict[str, Any] = {}
    if args.workers is not None:
        values["swarm.num_workers"] = args.workers
    if args.delimiter is not None:
        values["data.delimiter"] = args.delimiter
    if args.data is not None:
        values["data.path"] = args.data
    if getattr(args, "lambda_", None) is not None:
        values["hp.lambda"] = args.lambda_
    if getattr(args, "gamma", None) is not None:
        values["hp.gamma"] = args.gamma

    cfg = resolve_config(args.config, overrides)
    if values:
        cfg = ExperimentConfig.from_flat({**cfg.to_flat(), **values})
    if args.synthetic:
        cfg = dataclasses.replace(
            cfg,
            synthetic=parse_synthetic_spec(args.synthetic, cfg.synthetic),
            data=dataclasses.replace(cfg.data, path=None),
        )
    return cfg


def _output_dir(args: argparse.Namespace) -> Path:
    path = Path(args.output)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _provenance(cfg: ExperimentConfig, seeds: Dict[str, int]) -> List[str]:
    """Comment lines embedding the resolved config and seeds into text artifacts."""
    return [f"pslf seeds {json.dumps(seeds)}", f"pslf config {json.dumps(cfg.to_flat())}"]


def _echo(path: Path) -> None:
    print(f"wrote {path}")


def write_id_map(snapshot_path: Path, ds: RatingDataset, extra: Dict[str, Any]) -> Path:
    """Sidecar with the external ids behind the snapshot's dense rows."""
    path = Path(str(snapshot_path) + ID_MAP_SUFFIX)
    return write_json(path, {"user_ids": list(ds.user_ids), "item_ids": list(ds.item_ids), **extra})


def read_id_map(snapshot_path: Path, state: FactorState):
    """(user_ids, item_ids) of a snapshot; dense decimal ids when no sidecar exists."""
    path = Path(str(snapshot_path) + ID_MAP_SUFFIX)
    if not path.exists():
        return ([str(u) for u in range(state.num_users)], [str(i) for i in range(state.num_items)])
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
        user_ids, item_ids = document["user_ids"], document["item_ids"]
    except (ValueError, KeyError) as e:
        raise SnapshotError(f"{path}: unreadable id map ({e})")
    if len(user_ids) != state.num_users or len(item_ids) != state.num_items:
        raise SnapshotError(f"{path}: id map does not match the snapshot dimensions")
    return user_ids, item_ids


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_split(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    ds = load_dataset(cfg)
    split_seed, _, _ = repetition_seeds(cfg, 1)
    split = split_dataset(ds, cfg.data.ratios, split_seed)
    out = _output_dir(args)
    seeds = {"split_seed": split_seed}

    print(ds.summary())
    counts = split.manifest()["counts"]
    print(f"train={counts['train']} test={counts['test']} validation={counts['validation']} "
          f"(seed {split_seed})")
    for name, part in (("train", split.train), ("test", split.test),
                       ("validation", split.validation)):
        _echo(part.write(out / f"{name}.ratings", cfg.data.delimiter, header=_provenance(cfg, seeds)))
    _echo(split.write_manifest(out / "split_manifest.json", extra={
        "files": {name: f"{name}.ratings" for name in ("train", "test", "validation")},
        "seeds": seeds,
        "config": cfg.to_flat(),
    }))
    return EXIT_OK


def cmd_train(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    ds = load_dataset(cfg)
    split_seed, init_seed, _ = repetition_seeds(cfg, 1)
    split = split_dataset(ds, cfg.data.ratios, split_seed)
    X0 = initial_state(split, cfg, init_seed)
    seeds = {"split_seed": split_seed, "init_seed": init_seed}

    started = time.perf_counter()
    report = train_slf(split, cfg.hp, cfg.train, X0)
    out = _output_dir(args)

    snapshot = report.final_state.save(out / "factors.bin")
    provenance = {"seeds": seeds, "config": cfg.to_flat()}
    paths = [
        snapshot,
        write_id_map(snapshot, ds, provenance),
        report.write_metrics_csv(out / "metrics.csv", header=_provenance(cfg, seeds)),
        split.test.write(out / "test.ratings", cfg.data.delimiter, header=_provenance(cfg, seeds)),
        write_json(out / "train_report.json", {
            **provenance,
            "report": report.to_dict(),
            "snapshot": snapshot.name,
            "timing": {"train_seconds": report.elapsed_seconds,
                       "command_seconds": time.perf_counter() - started},
        }),
    ]

    print(f"lambda={cfg.hp.lambda_:.6f} gamma={cfg.hp.gamma:.6f} iterations={report.outer_iters_run}")
    print(f"best_test_rmse={report.best_test_rmse:.6f} (iteration {report.best_iteration})")
    for path in paths:
        _echo(path)
    if report.diverged:
        print("training diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_tune(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    out = _output_dir(args)
    report = cross_validate(cfg, trace_dir=out, progress=args.progress)
    for row in report.rows:
        print(f"rep {row.repetition}: lambda={row.hyperparams.lambda_:.6f} "
              f"gamma={row.hyperparams.gamma:.6f} test_rmse={row.best_test_rmse:.6f} "
              f"validation_rmse={row.validation_rmse:.6f}"
              + (f" default_rmse={row.default_validation_rmse:.6f}"
                 if row.default_validation_rmse is not None else ""))
    print(f"validation RMSE {report.formatted}")
    for path in report.trace_paths:
        _echo(Path(path))
    _echo(report.write_json(out / "experiment_report.json"))
    if report.all_diverged:
        print("every repetition diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, cfg: ExperimentConfig) -> int:
    state = FactorState.load(args.snapshot)
    user_ids, item_ids = read_id_map(Path(args.snapshot), state)
    ratings = load_ratings(args.ratings, cfg.data.delimiter).reindex(user_ids, item_ids)
    if ratings.is_empty:
        raise RatingsFormatError("no ratings")
    print(f"rmse={rmse(state, ratings):.6f}")
    return EXIT_OK


COMMANDS = {
    "split": cmd_split,
    "train": cmd_train,
    "tune": cmd_tune,
    "evaluate": cmd_evaluate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.verbose)
        cfg = resolve_invocation(args)
        _logger.info("resolved configuration:\n%s", cfg.summary())
        return COMMANDS[args.command](args, cfg)
    except ConfigError as e:
        print(f"pslf: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (RatingsFormatError, SnapshotError) as e:
        print(f"pslf: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (FileNotFoundError, IsADirectoryError) as e:
        print(f"pslf: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        # Precondition failures on the data (too few ratings to split, empty parts)
        print(f"pslf: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
