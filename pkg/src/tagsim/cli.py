"""Command-line front end.

Verbs:
    run <scenario> [--seed N] [--out DIR] [--format json|csv|text]
    validate <scenario>
    trace <scenario> [--seed N] [--out DIR]
    bench [--ops N]

Reports land in --out, else $TAGSIM_OUT, else stdout. Exit codes: 0 ran,
2 scenario parse/validation failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import bench as bench_mod
from . import metrics
from .runner import run_scenario
from .scenario import ScenarioParseError, parse_scenario

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_IO = 3

_FORMATS = {"json": (metrics.to_json, "json"),
            "csv": (metrics.to_csv, "csv"),
            "text": (metrics.to_text, "txt")}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tagsim",
        description="Deterministic simulator of crowd-sourced BLE "
                    "offline-finding networks and their attacks.")
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="execute a scenario and emit a report")
    run.add_argument("scenario")
    run.add_argument("--seed", type=int, default=None,
                     help="override the scenario seed")
    run.add_argument("--out", default=None,
                     help="output directory (default: $TAGSIM_OUT or stdout)")
    run.add_argument("--format", choices=sorted(_FORMATS), default="json")

    val = sub.add_parser("validate", help="check a scenario file")
    val.add_argument("scenario")

    trace = sub.add_parser("trace", help="run and emit the full event log")
    trace.add_argument("scenario")
    trace.add_argument("--seed", type=int, default=None)
    trace.add_argument("--out", default=None)

    bench = sub.add_parser("bench", help="compare curve backends")
    bench.add_argument("--ops", type=int, default=2000,
                       help="operations per measurement")
    return parser


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
        return None, EXIT_IO
    try:
        return parse_scenario(text), EXIT_OK
    except ScenarioParseError as exc:
        for err in exc.errors:
            print(f"{path}: {err}", file=sys.stderr)
        return None, EXIT_PARSE


def _emit(content: str, out_dir: str | None, filename: str) -> int:
    dest = out_dir if out_dir is not None else os.environ.get("TAGSIM_OUT")
    if not dest:
        sys.stdout.write(content)
        return EXIT_OK
    path = os.path.join(dest, filename)
    try:
        os.makedirs(dest, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(content)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    print(path)
    return EXIT_OK


def _cmd_run(args) -> int:
    scenario, code = _load(args.scenario)
    if scenario is None:
        return code
    result = run_scenario(scenario, seed=args.seed)
    render, ext = _FORMATS[args.format]
    return _emit(render(result.report), args.out, f"{scenario.name}.{ext}")


def _cmd_validate(args) -> int:
    scenario, code = _load(args.scenario)
    if scenario is None:
        return code
    print(f"{args.scenario}: ok "
          f"(devices={len(scenario.trackers) + len(scenario.owners) + len(scenario.helpers) + len(scenario.attackers)}, "
          f"zones={len(scenario.zones)}, attacks={len(scenario.attacks)})")
    return EXIT_OK


def _cmd_trace(args) -> int:
    scenario, code = _load(args.scenario)
    if scenario is None:
        return code
    result = run_scenario(scenario, seed=args.seed)
    lines = "\n".join(result.world.trace.lines()) + "\n"
    return _emit(lines, args.out, f"{scenario.name}.trace")


def _cmd_bench(args) -> int:
    sys.stdout.write(bench_mod.render(bench_mod.run(ops=args.ops)))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "validate": _cmd_validate,
               "trace": _cmd_trace, "bench": _cmd_bench}[args.verb]
    return handler(args)


if __name__ == "__main__":
    raise SystemExit(main())
