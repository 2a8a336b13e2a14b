"""Command-line entry point: ``srampuf {simulate,enroll,metrics,fe-trial,pipeline}``.

Exit codes: 0 success, 1 input or validation error, 2 infeasible
fuzzy-extractor parameters, 3 reproduction failure with ``--strict``.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import InfeasibleParametersError, PufError, ReproductionError
from .harness.config import load_config
from .harness.experiments import cmd_enroll, cmd_fe_trial, cmd_metrics, cmd_simulate, run_pipeline

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_REPRODUCTION = 3

log = logging.getLogger("srampuf")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srampuf", description="SRAM PUF analysis toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "write simulated readings for the configured campaign"),
        ("enroll", "aggregate per-device reference fingerprints"),
        ("metrics", "write reliability, summary and uniqueness reports"),
        ("fe-trial", "enroll the fuzzy extractor and attempt reproduction at every temperature"),
        ("pipeline", "simulate, enroll, metrics and fe-trial in one go"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir")
        p.add_argument("--profile", help="restrict to a single board profile")
        p.add_argument("--t", type=int, dest="fe_t", help="tolerated bit errors")
        p.add_argument("--k", type=int, dest="fe_k", help="bits per locker subsample")
        p.add_argument("--delta", type=float, dest="fe_delta", help="target reproduction error")
        p.add_argument("--strict", action="store_true", default=None,
                       help="exit with code 3 if any reproduction fails")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "enroll": cmd_enroll,
    "metrics": cmd_metrics,
    "fe-trial": cmd_fe_trial,
    "pipeline": run_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config).with_overrides(
            seed=args.seed,
            out_dir=args.out_dir,
            profiles=(args.profile,) if args.profile else None,
            fe_t=args.fe_t,
            fe_k=args.fe_k,
            fe_delta=args.fe_delta,
            strict=args.strict,
        )
        result = COMMANDS[args.command](config)
    except InfeasibleParametersError as exc:
        log.error("infeasible parameters: %s", exc)
        return EXIT_INFEASIBLE
    except ReproductionError as exc:
        log.error("%s", exc)
        return EXIT_REPRODUCTION
    except (PufError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    _report(args.command, result)
    return EXIT_OK


def _report(command: str, result) -> None:
    if command == "simulate":
        log.info("wrote %d readings (+%d enrollment)", len(result.readings), len(result.enrollment))
    elif command == "enroll":
        log.info("wrote %d references", len(result))
    elif command == "metrics":
        for (board, temp), mean in sorted(result.summary.items()):
            log.info("%s %3d °C  mean intra-HD %.2f %%", board, temp, 100 * mean)
    elif command == "fe-trial":
        _report_trial(result)
    elif command == "pipeline":
        _report("metrics", result[0])
        _report_trial(result[1])


def _report_trial(result) -> None:
    log.info("%d lockers, %d helper bytes", result.locker_count, result.helper_bytes)
    for (board, temp), (attempts, successes) in sorted(result.counts.items()):
        log.info("%s %3d °C  %d/%d reproduced", board, temp, successes, attempts)


if __name__ == "__main__":
    sys.exit(main())
