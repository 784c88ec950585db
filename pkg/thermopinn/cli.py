"""
Command line entry point, `thermopinn <subcommand> [options]`.

Exit codes: 0 success, 1 usage / config / IO / checkpoint problems, 2 numerical failure (overflow or a
diverged training run).
"""

import argparse
import json
import logging
import sys

from . import studies, verification
from .config import PRESETS, resolve_config
from .exceptions import ImproperUsage, NumericalOverflow, ThermoPinnException
from .outputs import header_lines, provenance, write_json, write_text
from .sampling import hierarchical_datasets
from .shared_types import TrainStatus, make_logger, set_verbosity
from .util import __version__, parse_bool

logger = make_logger("harness")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _bool(text: str) -> bool:
    try:
        return parse_bool(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment file")
    common.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset (default: desk)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a config entry, e.g. train.threshold=1e-3 (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--augmented", type=_bool, metavar="true|false")
    common.add_argument("--plots", action="store_true", default=None, help="also write SVG plots")
    common.add_argument("--full-scale", "--paper-scale", dest="full_scale", action="store_true", help="allow long-running full-scale presets")
    common.add_argument("--out", metavar="DIR", help="output directory")
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true")
    noise.add_argument("-q", "--quiet", action="store_true")

    parser = _Parser(prog="thermopinn", description="Physics-informed networks for Boussinesq flow with pressure-Poisson augmentation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("train", parents=[common], help="train one network, write checkpoint, metrics and errors")
    evaluate = sub.add_parser("evaluate", parents=[common], help="error report of a checkpoint")
    evaluate.add_argument("--checkpoint", required=True, metavar="PATH")
    convergence = sub.add_parser("convergence-study", parents=[common], help="threshold x dataset sweep with convergence fits")
    convergence.add_argument("--checkpoint", metavar="PATH", help="warm-start every cell from this checkpoint")
    sub.add_parser("architecture-study", parents=[common], help="architecture x dataset sweep, epochs to threshold")
    sub.add_parser("ablation-study", parents=[common], help="augmented vs bare residual")
    transfer = sub.add_parser("transfer", parents=[common], help="warm start from a checkpoint")
    transfer.add_argument("--checkpoint", required=True, metavar="PATH")
    transfer.add_argument("--cold-baseline", action="store_true", help="also train from scratch and compare")
    transfer.add_argument("--epochs", type=int, help="override the number of warm-start epochs (0 only evaluates)")
    sub.add_parser("sample", parents=[common], help="write the collocation ladder as CSV")
    sub.add_parser("verify", parents=[common], help="manufactured-solution, gradient and jet oracles")
    return parser


def _config(args):
    overrides = list(args.overrides)
    if getattr(args, "epochs", None) is not None:
        overrides.append(f"transfer.epochs={args.epochs}")
    if args.command == "convergence-study" and args.checkpoint is not None:
        overrides.append(f"transfer.checkpoint={json.dumps(args.checkpoint)}")
    return resolve_config(
        preset=args.preset,
        path=args.config,
        overrides=overrides,
        seed=args.seed,
        augmented=args.augmented,
        out=args.out,
        plots=args.plots,
        full_scale=args.full_scale,
    )


def _status_code(status: TrainStatus) -> int:
    return EXIT_NUMERICAL if status is TrainStatus.DIVERGED else EXIT_OK


def run(args) -> int:
    if args.verbose:
        set_verbosity(logging.DEBUG)
    elif args.quiet:
        set_verbosity(logging.WARNING)
    cfg = _config(args)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_text(out / "config.json", cfg.to_json() + "\n")

    if args.command == "train":
        _, history = studies.train_run(cfg)
        return _status_code(history.status)
    if args.command == "evaluate":
        studies.evaluate_run(cfg, args.checkpoint)
        return EXIT_OK
    if args.command == "convergence-study":
        studies.convergence_study(cfg)
        return EXIT_OK
    if args.command == "architecture-study":
        studies.architecture_study(cfg)
        return EXIT_OK
    if args.command == "ablation-study":
        studies.ablation_study(cfg)
        return EXIT_OK
    if args.command == "transfer":
        history = studies.transfer_run(cfg, args.checkpoint, args.cold_baseline or bool(cfg.transfer.get("cold_baseline")))
        return _status_code(history.status)
    if args.command == "sample":
        prov = provenance(cfg.to_dict(), cfg.seed)
        for dataset in hierarchical_datasets(cfg.levels, cfg.domain, cfg.seed):
            write_text(out / f"collocation_level{dataset.level}.csv", dataset.to_csv(header_lines=header_lines(prov)))
        logger.info(f"wrote {cfg.levels} collocation levels to {out}")
        return EXIT_OK
    if args.command == "verify":
        results = verification.run_all()
        write_json(out / "verify.json", results, provenance(cfg.to_dict(), cfg.seed))
        print(json.dumps({k: v["passed"] if isinstance(v, dict) else v for k, v in results.items()}, indent=2))
        return EXIT_OK if results["passed"] else EXIT_NUMERICAL
    raise AssertionError(f"unhandled command {args.command}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except NumericalOverflow:
        return EXIT_NUMERICAL
    except (ThermoPinnException, ImproperUsage):
        # already logged when raised
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
