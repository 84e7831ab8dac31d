"""Command line entry point: ``dagprop {train,compare,gradcheck,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from . import config as config_mod
from . import experiment
from .errors import DagPropError

_OVERRIDES = (
    ("--topology", str),
    ("--activation", str),
    ("--eta", float),
    ("--s", float),
    ("--iterations", int),
    ("--seed", int),
    ("--optimizer", str),
    ("--momentum", float),
    ("--dataset", str),
    ("--samples", int),
    ("--image-rows", int),
    ("--image-cols", int),
    ("--data-seed", int),
    ("--train-count", int),
    ("--test-count", int),
    ("--init-scale", float),
    ("--tail-threshold", float),
    ("--tail-window", int),
    ("--C", float),
    ("--codes", str),
    ("--seeds", str),
    ("--output-dir", str),
)


def _add_overrides(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("config overrides")
    for flag, kind in _OVERRIDES:
        g.add_argument(flag, type=kind, default=None, dest=flag.lstrip("-").replace("-", "_"))
    g.add_argument("--early-stop", action="store_const", const=True, default=None, dest="early_stop")


def _config(path: Optional[str], args: argparse.Namespace) -> config_mod.RunConfig:
    overrides = {
        flag.lstrip("-").replace("-", "_"): getattr(args, flag.lstrip("-").replace("-", "_"))
        for flag, _ in _OVERRIDES
    }
    overrides["early_stop"] = args.early_stop
    if path:
        return config_mod.load(path, **overrides)
    return config_mod.from_dict({k: v for k, v in overrides.items() if v is not None})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dagprop",
        description="Layered-DAG networks trained with adaptive-momentum backpropagation.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model and write model, trajectory and verdict")
    p.add_argument("config", nargs="?", help="key = value config file")
    p.add_argument("--dump-gradients", action="store_true", help="also write final gradients.npz")
    _add_overrides(p)

    p = sub.add_parser("compare", help="cross-connected vs sequential autoencoder metrics")
    p.add_argument("config", help="config of the cross-connected model")
    p.add_argument("--sequential", metavar="CONFIG", help="explicit config for the second model")
    _add_overrides(p)

    p = sub.add_parser("gradcheck", help="adjoint vs finite-difference gradients")
    p.add_argument("config", nargs="?")
    p.add_argument("--h", type=float, default=1e-6)
    p.add_argument("--unchecked", action="store_true", help="allow the unbounded linear activation")
    _add_overrides(p)

    p = sub.add_parser("verify", help="re-run the convergence analysis on a trajectory CSV")
    p.add_argument("trajectory")
    p.add_argument("--eta", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--C", type=float)
    p.add_argument("--tail-threshold", type=float, default=1e-4)
    p.add_argument("--tail-window", type=int, default=10)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "train":
            out = experiment.run_train(_config(args.config, args), dump_gradients=args.dump_gradients)
            print(json.dumps(out.report, indent=2, sort_keys=True))
            print(f"artifacts in {out.output_dir}", file=sys.stderr)
            return out.exit_code
        if args.command == "compare":
            cross = _config(args.config, args)
            seq = _config(args.sequential, args) if args.sequential else None
            rows = experiment.run_compare(cross, seq)
            print(experiment.format_table(rows))
            return 0
        if args.command == "gradcheck":
            report = experiment.run_gradcheck(_config(args.config, args), args.unchecked, args.h)
            print(json.dumps(report, indent=2, sort_keys=True))
            return 0 if report["passed"] else 1
        if args.command == "verify":
            v = experiment.run_verify(
                args.trajectory, args.eta, args.s, args.C, args.tail_threshold, args.tail_window
            )
            print(json.dumps(v.summary(), indent=2, sort_keys=True))
            return 0 if v.monotone_descent and v.descent_inequality_violations == 0 else 3
    except (DagPropError, OSError) as exc:
        print(f"dagprop: error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
