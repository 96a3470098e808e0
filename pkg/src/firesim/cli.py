"""Command-line entry point: ``firesim run|emission|validate``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import emission as em
from .errors import FireError, ScenarioError
from .scenario import load_scenario
from .simulation import emit_reports, run_scenario

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 1, 2


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    result = run_scenario(scenario)
    report = emit_reports(result, args.out)
    print(f"final_height={result.state.height} digest={report.digest}")
    return EXIT_OK


def _cmd_emission(args) -> int:
    state, _ = em.genesis_state(args.premine_coins, speed_factor=args.speed_factor)
    rows = em.iter_emission(state, args.blocks)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="\n") as fh:
        em.write_emission_csv(rows, fh)
    return EXIT_OK


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    print(f"ok: horizon={scenario.horizon} events={len(scenario.events)} ballots={len(scenario.ballots)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="firesim", description="FIRE protocol economy simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write its logs")
    run.add_argument("--scenario", required=True)
    run.add_argument("--out", required=True, help="output directory")
    run.set_defaults(func=_cmd_run)

    emit = sub.add_parser("emission", help="write the pure emission curve as CSV")
    emit.add_argument("--blocks", type=int, required=True)
    emit.add_argument("--premine-coins", type=int, default=0)
    emit.add_argument("--speed-factor", type=int, default=em.DEFAULT_SPEED_FACTOR)
    emit.add_argument("--out", required=True, help="output CSV file")
    emit.set_defaults(func=_cmd_emission)

    val = sub.add_parser("validate", help="check a scenario file without running it")
    val.add_argument("--scenario", required=True)
    val.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (FireError, ValueError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
