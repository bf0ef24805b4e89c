"""CLI interface for spcgan-seg"""

import argparse
import json
import sys
from collections.abc import Callable
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .config import settings
from .errors import NumericFaultError, SegmentationError, SpecValidationError, SweepCellError
from .models.phantom import Split
from .models.run import RunConfig
from .nodes import (
    DataNode,
    EvaluationNode,
    LevelSetNode,
    PlottingNode,
    SegmentationNode,
    SweepNode,
    TrainingNode,
)
from .utils.json_store import JSONStore
from .workflow import LEVELSET_METHOD, create_workflow

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


class UsageError(Exception):
    """Invalid invocation: bad flags, missing inputs or an occupied output directory"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spcgan-seg",
        description="Semi-pixel-wise cycle-GAN lesion segmentation on synthetic ultrasound phantoms",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Generate the synthetic dataset
  spcgan-seg gen-data --config run.json --out runs/demo

  # Train the configured regime and segment the test split
  spcgan-seg train --config run.json --out runs/demo
  spcgan-seg segment --out runs/demo

  # Whole comparison in one go
  spcgan-seg benchmark --config run.json --out runs/demo --jobs 4
        """,
    )
    parser.add_argument("-v", "--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Run configuration (JSON)")
    common.add_argument("--seed", type=int, help="Global seed (overrides the config)")
    common.add_argument("--out", type=Path, help="Output root (overrides the config)")
    common.add_argument("--force", action="store_true", help="Write into a non-empty output directory")
    common.add_argument("--verbose", action="store_true", help="Print tracebacks on failure")

    parallel = argparse.ArgumentParser(add_help=False)
    parallel.add_argument(
        "--jobs", type=int, default=1, help="Worker threads (level-set fitting, sweep cells)"
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="Generate synthetic phantom splits")
    train = sub.add_parser("train", parents=[common], help="Train one regime")
    train.add_argument("--regime", choices=["spcgan", "gan_pix", "fcn"], help="Override train.regime")
    train.add_argument("--resume", action="store_true", help=argparse.SUPPRESS)
    segment = sub.add_parser("segment", parents=[common], help="Segment a manifest with a checkpoint")
    segment.add_argument("--checkpoint", type=Path, help="Checkpoint (default: <out>/train/checkpoint.pt)")
    segment.add_argument(
        "--input", type=Path, help="Manifest or 16-bit PNG image to segment (default: test split)"
    )
    sub.add_parser("levelset", parents=[common, parallel], help="Fit and apply the level-set baseline")
    sub.add_parser("eval", parents=[common], help="Score predicted masks and run t-tests")
    sub.add_parser("sweep", parents=[common, parallel], help="Learning curve over training-set size")
    plot = sub.add_parser("plot", parents=[common], help="Redraw figures from report tables")
    plot.add_argument("--report", type=Path, help="Directory with records.csv / sweep.csv")
    sub.add_parser("benchmark", parents=[common, parallel], help="gen-data, train all regimes, levelset, eval")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Read the config file (if any) and apply --seed / --out"""
    data: dict = {}
    if args.config is not None:
        if not args.config.exists():
            raise FileNotFoundError(f"Config not found: {args.config}")
        data = json.loads(args.config.read_text(encoding="utf-8"))
    config = RunConfig.model_validate(data)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["out_dir"] = args.out
    return config.model_copy(update=updates) if updates else config


def check_output(out_dir: Path, force: bool) -> JSONStore:
    """Refuse occupied directories unless forced"""
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise UsageError(f"Output directory is not empty: {out_dir} (use --force)")
    return JSONStore(out_dir)


def prepare_output(out_dir: Path, force: bool, config: RunConfig) -> JSONStore:
    """check_output, then record the resolved config"""
    store = check_output(out_dir, force)
    store.write("resolved-config.json", config)
    return store


def _default_methods(config: RunConfig) -> dict[str, Path]:
    methods = {}
    segment_root = config.out_dir / "segment"
    if segment_root.exists():
        for method_dir in sorted(p for p in segment_root.iterdir() if (p / "masks").is_dir()):
            methods[method_dir.name] = method_dir / "masks"
    levelset_masks = config.out_dir / "levelset" / Split.TEST / "masks"
    if levelset_masks.is_dir():
        methods[LEVELSET_METHOD] = levelset_masks
    return methods


def _checkpoint_method(checkpoint: Path) -> str:
    """Name predictions after the trained regime when the training summary is present"""
    summary = JSONStore(checkpoint.parent).read_optional("train-summary.json")
    return summary["regime"] if summary else checkpoint.parent.name


def cmd_gen_data(args: argparse.Namespace, config: RunConfig) -> None:
    store = prepare_output(config.data_dir, args.force, config)
    DataNode(config, store).run()


def cmd_train(args: argparse.Namespace, config: RunConfig) -> None:
    if args.resume:
        raise UsageError("resume is not supported")
    out_dir = config.out_dir / "train"
    store = prepare_output(out_dir, args.force, config)
    TrainingNode(config, out_dir, store, regime=args.regime).run()


def cmd_segment(args: argparse.Namespace, config: RunConfig) -> None:
    checkpoint = args.checkpoint or config.out_dir / "train" / "checkpoint.pt"
    source = args.input or config.manifest_path(Split.TEST)
    for path in (checkpoint, source):
        if not path.exists():
            raise FileNotFoundError(f"Input not found: {path}")
    method = _checkpoint_method(checkpoint)
    out_dir = config.out_dir / "segment" / method
    prepare_output(out_dir, args.force, config)
    SegmentationNode(checkpoint, source, out_dir).run()


def cmd_levelset(args: argparse.Namespace, config: RunConfig) -> None:
    out_dir = config.out_dir / "levelset"
    store = prepare_output(out_dir, args.force, config)
    manifests = [config.manifest_path(Split.TEST)]
    if config.manifest_path(Split.EXTERNAL).exists():
        manifests.append(config.manifest_path(Split.EXTERNAL))
    LevelSetNode(
        config.levelset, config.manifest_path(Split.TRAIN), manifests, out_dir, store, jobs=args.jobs
    ).run()


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> None:
    out_dir = config.out_dir / "eval"
    manifest = config.eval.test_manifest or config.manifest_path(Split.TEST)
    methods = config.eval.methods or _default_methods(config)
    store = prepare_output(out_dir, args.force, config)
    EvaluationNode(
        methods, manifest, out_dir, store, comparisons=config.eval.comparisons, alpha=config.eval.alpha
    ).run()


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> None:
    out_dir = config.out_dir / "sweep"
    store = prepare_output(out_dir, args.force, config)
    SweepNode(config, out_dir, store, jobs=args.jobs).run()


def cmd_plot(args: argparse.Namespace, config: RunConfig) -> None:
    report_dir = args.report or config.out_dir / "eval"
    if not report_dir.is_dir():
        raise FileNotFoundError(f"Report directory not found: {report_dir}")
    out_dir = config.out_dir / "plots"
    store = check_output(out_dir, args.force)
    train_root = config.out_dir / "train"
    train_dirs = [train_root, *sorted(p for p in train_root.glob("*") if p.is_dir())]
    PlottingNode(report_dir, out_dir, train_dirs=train_dirs).run()
    store.write("resolved-config.json", config)


def cmd_benchmark(args: argparse.Namespace, config: RunConfig) -> None:
    prepare_output(config.out_dir, args.force, config)
    create_workflow(config, jobs=args.jobs).run()


COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig], None]] = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "segment": cmd_segment,
    "levelset": cmd_levelset,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
    "benchmark": cmd_benchmark,
}


def invalid_fields(error: ValidationError) -> list[str]:
    """Dotted paths of the offending fields, including those named by model-level checks"""
    fields = []
    for detail in error.errors():
        path = [str(part) for part in detail["loc"]]
        cause = detail.get("ctx", {}).get("error")
        if isinstance(cause, SpecValidationError):
            path.append(cause.field)
        fields.append(".".join(path))
    return fields


def exit_code_for(error: BaseException) -> int:
    """Numeric faults are run failures; everything about inputs is a usage error"""
    if isinstance(error, SweepCellError) and error.__cause__ is not None:
        return exit_code_for(error.__cause__)
    if isinstance(error, NumericFaultError):
        return EXIT_FAILURE
    if isinstance(
        error,
        UsageError | ValidationError | SegmentationError | FileNotFoundError | ValueError,
    ):
        return EXIT_USAGE
    return EXIT_FAILURE


def run(argv: list[str] | None = None) -> int:
    """Parse arguments, execute one command and return its exit code"""
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        print(f"spcgan-seg v{__version__}")
        print("=" * 60)
        print(f"Command: {args.command}")
        print(f"Output: {config.out_dir}")
        print(f"Seed: {config.seed}")
        print(f"Device: {settings.device}")
        print("=" * 60)
        COMMANDS[args.command](args, config)
        print(f"\n✓ {args.command} finished")
        return EXIT_OK

    except KeyboardInterrupt:
        print("\n\n⚠ Interrupted by user", file=sys.stderr)
        return EXIT_INTERRUPTED

    except Exception as e:
        print(f"\n\n✗ Error: {e}", file=sys.stderr)
        if isinstance(e, ValidationError):
            print(f"Invalid fields: {', '.join(invalid_fields(e))}", file=sys.stderr)

        if args.verbose:
            import traceback

            print("\nFull traceback:", file=sys.stderr)
            traceback.print_exc()

        return exit_code_for(e)


def main():
    """Main CLI entry point"""
    sys.exit(run())


if __name__ == "__main__":
    main()
