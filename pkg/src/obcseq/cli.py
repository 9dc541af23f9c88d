"""Command line entry point: ``obcseq simulate`` and ``obcseq trace``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ._accel import backend
from .distributions import RngStream
from .gibbs import run_gibbs
from .harness import ConfigError, load_config, repetition_setup, run_scenario

log = logging.getLogger("obcseq")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obcseq", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress per repetition")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="compare random and controlled sampling")
    sim.add_argument("--config", required=True, help="flat JSON scenario config")
    sim.add_argument("--seed", type=int, help="override master_seed")
    sim.add_argument("--reps", type=int, help="override repetitions")
    sim.add_argument("--threads", type=int, help="override parallelism (worker processes)")
    sim.add_argument("--out", default="results", help="output directory (default: results)")
    sim.add_argument("--plot", action="store_true", help="also write curves.svg")

    tr = sub.add_parser("trace", help="dump one Gibbs chain on a repetition's initial data")
    tr.add_argument("--config", required=True)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--rep", type=int, default=0, help="repetition index (default 0)")
    tr.add_argument("--out", required=True, help="CSV path for the trace")
    return parser


def _overridden(args):
    scn = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if getattr(args, "reps", None) is not None:
        changes["repetitions"] = args.reps
    if getattr(args, "threads", None) is not None:
        changes["parallelism"] = args.threads
    return scn.replace(**changes) if changes else scn


def _simulate(args) -> None:
    scn = _overridden(args)
    log.info("backend=%s repetitions=%d parallelism=%d", backend(), scn.repetitions, scn.parallelism)
    result = run_scenario(scn, out_dir=args.out, plot=args.plot)
    for method, (sizes, mean, _) in result.curves().items():
        print(f"{method:>10}: error {mean[0]:.4f} at n={sizes[0]} -> {mean[-1]:.4f} at n={sizes[-1]}")
    print(f"wrote {Path(args.out) / 'raw.csv'} and {Path(args.out) / 'mean.csv'}")


def _trace(args) -> None:
    scn = _overridden(args)
    _, initial, _ = repetition_setup(scn, args.rep)
    rng = RngStream(scn.master_seed).child("trace", args.rep)
    run_gibbs(initial, scn.hyper, scn.sampler.gibbs, rng, trace=args.out)
    print(f"wrote {args.out}")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        if args.command == "simulate":
            _simulate(args)
        else:
            _trace(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
