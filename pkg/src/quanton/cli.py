"""Command-line front end.

Exit codes: 0 success, 1 internal error, 2 invalid input, 3 I/O error,
4 ``--check`` found a failed identity or a budget residual above 1e-10.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional

import numpy as np

from . import __version__, dsl
from . import elements as el
from .elements import INV_SQRT2
from .measures import report_for
from .qstate import StateError, state_from_json
from .scenarios import (PARAMETERS, SWEEPABLE, ScenarioError, StageTrace,
                        run_scenario, trace_pipeline, trace_to_dict)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_CHECK = 4

CHECK_TOL = 1e-10

SCENARIO_FLAGS = ("t1", "t2", "phi", "bs2", "qwp", "block")


class UsageError(ValueError):
    pass


def parse_real(text: str) -> float:
    """Decimal, scientific, or the literal ``1/sqrt2``."""
    stripped = text.strip()
    if stripped.lstrip("+-") == "1/sqrt2":
        return -INV_SQRT2 if stripped.startswith("-") else INV_SQRT2
    try:
        value = float(stripped)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not np.isfinite(value):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return value


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", choices=sorted(PARAMETERS))
    p.add_argument("--t1", type=parse_real, help="transmission amplitude of the first splitter")
    p.add_argument("--t2", type=parse_real, help="transmission amplitude of the second splitter (bmzi)")
    p.add_argument("--phi", type=parse_real, help="phase shift in radians")
    p.add_argument("--bs2", choices=("present", "absent"), help="second splitter (wdce)")
    p.add_argument("--qwp", choices=("in", "out"), help="quarter-wave plate (pqe)")
    p.add_argument("--block", choices=("none", "path1", "path2"), help="blocked path (unruh)")


def _add_output_flags(p: argparse.ArgumentParser, formats=("json", "csv")) -> None:
    p.add_argument("--format", choices=formats, default="json")
    p.add_argument("-o", "--output", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quanton", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a built-in scenario")
    _add_scenario_flags(run)
    _add_output_flags(run)
    run.add_argument("--check", action="store_true", help="verify identities and budgets")

    sweep = sub.add_parser("sweep", help="sweep one scenario parameter over a grid")
    _add_scenario_flags(sweep)
    sweep.add_argument("--param", required=True)
    sweep.add_argument("--from", dest="start", type=parse_real, required=True)
    sweep.add_argument("--to", dest="end", type=parse_real, required=True)
    sweep.add_argument("--steps", type=int, required=True)
    _add_output_flags(sweep)

    circuit = sub.add_parser("circuit", help="run a .iq circuit file")
    circuit.add_argument("path")
    _add_output_flags(circuit)
    circuit.add_argument("--check", action="store_true", help="verify budgets")

    measures = sub.add_parser("measures", help="compute measures of a state JSON file")
    measures.add_argument("path")
    measures.add_argument("--part", help="subsystem label for the bipartite budget")
    _add_output_flags(measures, formats=("json",))
    return parser


def _scenario_params(args) -> dict:
    given = {k: getattr(args, k) for k in SCENARIO_FLAGS if getattr(args, k) is not None}
    allowed = set(PARAMETERS[args.scenario])
    extra = sorted(set(given) - allowed)
    if extra:
        raise UsageError(f"{args.scenario} does not take " + ", ".join(f"--{k}" for k in extra))
    return given


# -- formatting ---------------------------------------------------------------

def to_json(data) -> str:
    return json.dumps(data, indent=2, allow_nan=False) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


STAGE_COLUMNS = ["label", "survival", "d", "coherence", "predictability", "entanglement", "bound",
                 "residual", "gy_visibility", "gy_predictability", "gy_relation_value", "gy_satisfied"]


def trace_csv(trace: StageTrace) -> str:
    rows = []
    for s in trace.stages:
        row = {"label": s.label, "survival": s.survival}
        row.update(s.report.to_dict())
        rows.append(row)
    return to_csv(STAGE_COLUMNS, rows)


def sweep_row(trace: StageTrace) -> dict:
    row = dict(trace.config)
    row.update(trace.detector_probabilities)
    row["survival"] = trace.survival
    for name, v in trace.visibility.items():
        row["V" + name[1:]] = v
    for s in trace.stages:
        b = s.report.budget
        row[f"{s.label}.C"] = b.coherence
        row[f"{s.label}.P"] = b.predictability
        row[f"{s.label}.E"] = b.entanglement
        row[f"{s.label}.residual"] = b.residual
    return row


def check_failures(trace: StageTrace) -> list[str]:
    failures = [f"check {name} failed" for name, ok in trace.checks.items() if not ok]
    for s in trace.stages:
        if abs(s.report.budget.raw_residual) > CHECK_TOL:
            failures.append(f"stage {s.label}: budget residual {s.report.budget.raw_residual!r}")
    return failures


# -- commands -----------------------------------------------------------------

def _finish_trace(trace: StageTrace, args) -> tuple[str, int]:
    text = to_json(trace_to_dict(trace)) if args.format == "json" else trace_csv(trace)
    code = EXIT_OK
    if getattr(args, "check", False):
        failures = check_failures(trace)
        for f in failures:
            print(f"check: {f}", file=sys.stderr)
        if failures:
            code = EXIT_CHECK
    return text, code


def cmd_run(args) -> tuple[str, int]:
    trace = run_scenario(args.scenario, **_scenario_params(args))
    return _finish_trace(trace, args)


def sweep_grid(start: float, end: float, steps: int) -> list[float]:
    if steps < 2:
        raise UsageError("--steps must be at least 2")
    if start == end:
        raise UsageError("degenerate range: --from equals --to")
    return [float(x) for x in np.linspace(start, end, steps)]


def cmd_sweep(args) -> tuple[str, int]:
    params = _scenario_params(args)
    if args.param not in SWEEPABLE[args.scenario]:
        allowed = ", ".join(SWEEPABLE[args.scenario]) or "none"
        raise UsageError(f"parameter {args.param!r} is not sweepable for {args.scenario} "
                         f"(sweepable: {allowed})")
    grid = sweep_grid(args.start, args.end, args.steps)
    rows = []
    for value in grid:
        params[args.param] = value
        rows.append(sweep_row(run_scenario(args.scenario, **params)))
    if args.format == "csv":
        return to_csv(list(rows[0]), rows), EXIT_OK
    data = {"scenario": args.scenario, "param": args.param, "from": args.start, "to": args.end,
            "steps": args.steps, "rows": rows}
    return to_json(data), EXIT_OK


def cmd_circuit(args) -> tuple[str, int]:
    try:
        with open(args.path, "rb") as fh:
            source = fh.read()
    except OSError as exc:
        raise IOError(f"{args.path}: {exc.strerror}") from None
    try:
        ast = dsl.parse(source)
    except dsl.CircuitError as exc:
        raise UsageError(exc.format(args.path)) from None
    _, initial, pipeline = dsl.lower(ast)
    trace = trace_pipeline("circuit", {"file": args.path}, pipeline, initial)
    return _finish_trace(trace, args)


def cmd_measures(args) -> tuple[str, int]:
    try:
        with open(args.path, encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IOError(f"{args.path}: {exc.strerror}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.path}: invalid JSON: {exc}") from None
    state = state_from_json(data)
    if args.part is not None:
        state.space.index(args.part)
    return to_json(report_for(state, args.part).to_dict()), EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "circuit": cmd_circuit, "measures": cmd_measures}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, code = COMMANDS[args.command](args)
    except (UsageError, ScenarioError, StateError, el.ElementError, ValueError) as exc:
        print(f"quanton {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"quanton {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        print(f"quanton {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    try:
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"quanton {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
