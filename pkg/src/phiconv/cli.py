"""``phiconv run SCENARIO.json [--out R.json] [--csv T.csv] [--seed N] [--lip-full]``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .errors import ScenarioError
from .scenario import csv_rows, dumps, error_report, execute_scenario, parse_scenario


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phiconv", description="Run Phi-convexity scenarios.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute one scenario file")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--out", help="write the report here instead of standard output")
    run.add_argument("--csv", help="per-sample table for genericity tasks")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--lip-full", action="store_true",
                     help="use the full indicator basis for Lipschitz families")
    return p


def run(args) -> int:
    try:
        with open(args.scenario, "rb") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"phiconv: cannot read {args.scenario}: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_scenario(text)
        if args.seed is not None:
            if cfg.task != "genericity":
                raise ScenarioError("params.seed", "--seed only applies to genericity tasks")
            if args.seed < 0:
                raise ScenarioError("params.seed", "must be >= 0")
            cfg.params["seed"] = args.seed
        if args.lip_full:
            if cfg.family["kind"] != "lipschitz":
                raise ScenarioError("family.kind", "--lip-full needs a lipschitz family")
            cfg.family["full"] = True
    except ScenarioError as exc:
        report = error_report(exc)
    else:
        report = execute_scenario(cfg)

    rows = report.pop("_rows", None)
    text_out = dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text_out)
    else:
        sys.stdout.write(text_out)
    if args.csv:
        if rows is None and report["status"]["state"] != "error":
            print("phiconv: --csv ignored, task produces no per-sample table", file=sys.stderr)
        elif rows is not None:
            with open(args.csv, "w", encoding="utf-8", newline="") as fh:
                fh.write(csv_rows(rows))
    state = report["status"]["state"]
    if state == "error":
        print(f"phiconv: {report['status']['kind']}: {report['status']['detail']}", file=sys.stderr)
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "run":
        return run(args)
    return 2  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
