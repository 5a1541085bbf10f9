"""Command-line entry point."""

import argparse
import json
import logging
import sys
from pathlib import Path

from genifer.config import get_settings
from genifer.core.exceptions import INTERNAL_ERROR, GeniferError, error_payload
from genifer.schemas.experiment import ExperimentConfig, load_experiment_config

logger = logging.getLogger("genifer")


def _configure_logging() -> None:
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = load_experiment_config(Path(args.config))
    if getattr(args, "seed", None) is not None:
        config = config.model_copy(update={"seed": args.seed})
    return config


def _output_dir(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    return Path(args.output) if args.output else get_settings().output_root / config.name


def _int_list(value: str) -> list[int]:
    return [int(v) for v in value.split(",") if v]


def cmd_run(args: argparse.Namespace) -> int:
    from genifer.services.reports.service import emit_report
    from genifer.services.trainer.service import run_sequence

    config = _load(args)
    out = _output_dir(args, config)
    record = run_sequence(config, output_dir=out, resume=args.resume)
    emit_report([record], out / "report")
    print(json.dumps({"run_id": record.run_id, "alpha_all": record.alpha_all, "trace": record.accuracy_trace}))
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    from genifer.services.trainer.service import run_ablation

    config = _load(args)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    seeds = _int_list(args.seeds) if args.seeds else None
    records = run_ablation(config, modes, seeds=seeds, output_dir=_output_dir(args, config), workers=args.workers)
    for r in records:
        print(json.dumps({"run_id": r.run_id, "mode": r.mode, "seed": r.seed, "alpha_all": r.alpha_all}))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from genifer.services.trainer.service import evaluate_checkpoint

    result = evaluate_checkpoint(Path(args.checkpoint), _load(args))
    print(json.dumps(result, sort_keys=True))
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    from genifer.services.reports.export import read_run_record
    from genifer.services.reports.service import emit_report

    records = [read_run_record(Path(p)) for p in args.records]
    for path in emit_report(records, Path(args.output), pdf=not args.no_pdf):
        print(path)
    return 0


def cmd_export_toy(args: argparse.Namespace) -> int:
    from genifer.services.data.dataset import write_image_folder
    from genifer.services.data.toy import TOY_CLASS_NAMES, make_toy_dataset

    root = Path(args.output)
    for split, count in (("train", args.train_per_class), ("test", args.test_per_class)):
        index = make_toy_dataset(count, split, args.image_size, args.seed)
        write_image_folder(index, root, TOY_CLASS_NAMES)
    print(root)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genifer", description="Class-incremental learning with generative replay")
    parser.add_argument("--json-errors", action="store_true", help="Print framework errors as JSON objects")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Train one continual sequence")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--output")
    run.add_argument("--resume", action="store_true", help="Continue from the latest checkpoint")
    run.set_defaults(func=cmd_run)

    ablate = sub.add_parser("ablate", help="Run ablation arms over shared seeds")
    ablate.add_argument("--config", required=True)
    ablate.add_argument("--modes", default="ifm,dfm,im", help="Comma-separated arm names")
    ablate.add_argument("--seeds", help="Comma-separated seeds")
    ablate.add_argument("--output")
    ablate.add_argument("--workers", type=int, default=1)
    ablate.set_defaults(func=cmd_ablate)

    evaluate = sub.add_parser("eval", help="Accuracy metrics of a checkpoint")
    evaluate.add_argument("--config", required=True)
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.set_defaults(func=cmd_eval)

    plot = sub.add_parser("plot", help="Report from saved run records")
    plot.add_argument("records", nargs="+")
    plot.add_argument("--output", required=True)
    plot.add_argument("--no-pdf", action="store_true")
    plot.set_defaults(func=cmd_plot)

    toy = sub.add_parser("export-toy", help="Write the toy dataset as an image folder")
    toy.add_argument("--output", required=True)
    toy.add_argument("--train-per-class", type=int, default=200)
    toy.add_argument("--test-per-class", type=int, default=100)
    toy.add_argument("--image-size", type=int, default=32)
    toy.add_argument("--seed", type=int, default=1234)
    toy.set_defaults(func=cmd_export_toy)
    return parser


def main(argv: list[str] | None = None) -> int:
    """Run the CLI; framework errors print ``code: message`` and exit with status 2."""
    args = build_parser().parse_args(argv)
    _configure_logging()
    try:
        return int(args.func(args))
    except GeniferError as e:
        payload = error_payload(e, command=args.command)
        if args.json_errors:
            print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)
        else:
            print(f"{payload['code']}: {payload['message']}", file=sys.stderr)
            if e.details:
                logger.debug(f"Error details: {e.details}")
        return 2
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        print(f"{INTERNAL_ERROR}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
