"""Command-line front end: check, instantiate, encode, run, oracle.

Exit codes: 0 success; 1 validation or encodability failure; 2 parse error;
3 capacity or livelock error; 4 usage error.  The environment variable
BIPKIT_MAX_NODES overrides the enumeration search bound.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from . import diagram as diagram_mod
from . import engine as engine_mod
from .dsl import ParseFailure, load_model
from .encoder import emit_macros_text, emit_xml, encode_macros, export_behavior_json
from .errors import (
    CapacityError,
    EncodabilityError,
    LivelockError,
    MacroEncodingError,
    ScriptError,
)
from .model import ArchitectureDiagram, ERROR, validate_model

OK = 0
FAILURE = 1
PARSE_ERROR = 2
CAPACITY = 3
USAGE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE)


class UsageError(Exception):
    pass


def _max_nodes() -> int:
    raw = os.environ.get("BIPKIT_MAX_NODES")
    if raw is None:
        return diagram_mod.DEFAULT_MAX_NODES
    try:
        value = int(raw)
        if value < 1:
            raise ValueError
        return value
    except ValueError:
        raise UsageError(f"BIPKIT_MAX_NODES must be a positive integer, got {raw!r}") from None


def _parse_bindings(pairs: Sequence[str]) -> dict[str, int]:
    binding: dict[str, int] = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise UsageError(f"--bind expects name=value, got {pair!r}")
        try:
            number = int(value)
        except ValueError:
            raise UsageError(f"--bind {name}: {value!r} is not an integer") from None
        if number < 0:
            raise UsageError(f"--bind {name}: value must be non-negative")
        binding[name] = number
    return binding


def _require_full_binding(d: ArchitectureDiagram, binding: dict[str, int]) -> None:
    unbound = sorted(d.parameters - set(binding))
    if unbound:
        raise UsageError("unbound parameters: " + ", ".join(unbound) + " (use --bind name=value)")


def _load(path: str) -> ArchitectureDiagram:
    return load_model(Path(path))


def _print_issues(issues) -> None:
    for issue in issues:
        print(str(issue))


def _report_rows(report: diagram_mod.EncodabilityReport) -> list[dict]:
    return [
        {
            "motif": e.motif,
            "port": str(e.port),
            "n": e.cardinality,
            "m": e.multiplicity,
            "d": e.degree,
            "factor": str(e.factor),
            "max_connectors": e.max_connectors,
            "multiplicity_ok": e.multiplicity_ok,
            "factor_ok": e.factor_ok,
        }
        for e in report.ends
    ]


def _print_report(report: diagram_mod.EncodabilityReport) -> None:
    print(f"{'motif':<12} {'port':<20} {'n':>3} {'m':>3} {'d':>3} {'s':>6} {'max':>5}  verdict")
    for e in report.ends:
        if e.ok:
            verdict = "ok"
        else:
            parts = []
            if not e.multiplicity_ok:
                parts.append(f"m={e.multiplicity} > n={e.cardinality}")
            if not e.factor_ok:
                parts.append(f"s={e.factor}, required {e.max_connectors}")
            verdict = "; ".join(parts)
        print(
            f"{e.motif:<12} {str(e.port):<20} {e.cardinality:>3} {e.multiplicity:>3} "
            f"{e.degree:>3} {str(e.factor):>6} {e.max_connectors:>5}  {verdict}"
        )
    print("encodable" if report.overall else "not encodable: no unique architecture")


def _write_output(path: Path, content: str, force: bool) -> None:
    if path.exists() and not force:
        raise UsageError(f"{path} exists; pass --force to overwrite")
    path.write_text(content, encoding="utf-8")


def cmd_check(args) -> int:
    d = _load(args.file)
    binding = _parse_bindings(args.bind)
    issues = validate_model(d)
    payload: dict = {
        "issues": [
            {
                "severity": i.severity,
                "code": i.code,
                "location": i.location,
                "message": i.message,
                "span": str(i.span) if i.span else None,
            }
            for i in issues
        ]
    }
    if not args.json:
        _print_issues(issues)
    failed = any(i.severity == ERROR for i in issues)

    binding_full = d.parameters <= set(binding)
    if binding and not binding_full:
        _require_full_binding(d, binding)
    if binding_full and not failed:
        report = diagram_mod.check_encodable(d, binding)
        payload["encodability"] = {"overall": report.overall, "ends": _report_rows(report)}
        if not args.json:
            _print_report(report)
        if not report.overall:
            failed = True
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return FAILURE if failed else OK


def cmd_instantiate(args) -> int:
    d = _load(args.file)
    binding = _parse_bindings(args.bind)
    _require_full_binding(d, binding)
    issues = validate_model(d)
    if any(i.severity == ERROR for i in issues):
        _print_issues(issues)
        return FAILURE

    configurations, truncated = diagram_mod.enumerate_diagram_configurations(
        d, binding, limit=args.limit, max_nodes=_max_nodes()
    )
    rendered = [
        sorted(str(c) for c in configuration.connectors()) for configuration in configurations
    ]
    if args.json:
        print(
            json.dumps(
                {"configurations": rendered, "count": len(rendered), "truncated": truncated},
                indent=2,
                sort_keys=True,
            )
        )
        return OK
    for i, connectors in enumerate(rendered, start=1):
        print(f"configuration {i}: " + " ".join(connectors))
    print(f"{len(rendered)} configuration{'s' if len(rendered) != 1 else ''}"
          + (" (truncated)" if truncated else ""))
    return OK


_FORMATS = {
    "macros": (".macros.txt", lambda d: emit_macros_text(encode_macros(d))),
    "xml": (".glue.xml", lambda d: emit_xml(encode_macros(d))),
    "behavior-json": (".behavior.json", lambda d: export_behavior_json(d.component_types)),
}


def cmd_encode(args) -> int:
    d = _load(args.file)
    binding = _parse_bindings(args.bind)
    issues = validate_model(d)
    _print_issues(issues)
    if any(i.severity == ERROR for i in issues):
        return FAILURE

    if d.parameters <= set(binding):
        report = diagram_mod.check_encodable(d, binding)
        if not report.overall:
            bad = ", ".join(f"{e.motif}/{e.port}" for e in report.failures())
            print(f"warning: the tested binding fails the uniqueness conditions ({bad})")

    suffix, render = _FORMATS[args.format]
    content = render(d)
    out = Path(args.out) if args.out else Path(Path(args.file).stem + suffix)
    _write_output(out, content, args.force)
    print(str(out))
    return OK


def cmd_run(args) -> int:
    d = _load(args.file)
    binding = _parse_bindings(args.bind)
    _require_full_binding(d, binding)
    issues = validate_model(d)
    if any(i.severity == ERROR for i in issues):
        _print_issues(issues)
        return FAILURE

    report = diagram_mod.check_encodable(d, binding)
    if not report.overall:
        bad = ", ".join(f"{e.motif}/{e.port}" for e in report.failures())
        print(f"not encodable: {bad}")
        return FAILURE

    script = None
    if args.events:
        script = engine_mod.EventScript.from_json(Path(args.events).read_text(encoding="utf-8"))

    config = engine_mod.EngineConfig(cycles=args.cycles, seed=args.seed, policy=args.policy)
    trace = engine_mod.run(d, binding, config, script=script, source=args.source)
    _write_output(Path(args.out), engine_mod.trace_to_json(trace), args.force)

    fired = sum(1 for c in trace["cycles"] if c["interaction"] is not None)
    idle = sum(1 for c in trace["cycles"] if c["idle"])
    print(f"{len(trace['cycles'])} cycles, {fired} interactions fired, {idle} idle")
    print(args.out)
    return OK


def _parse_sweep(text: str) -> int:
    spec = text.replace(" ", "")
    if not spec.startswith("n,m,d<="):
        raise UsageError(f'--sweep expects the form "n,m,d<=K", got {text!r}')
    try:
        bound = int(spec[len("n,m,d<="):])
        if bound < 1:
            raise ValueError
    except ValueError:
        raise UsageError(f"sweep bound must be a positive integer in {text!r}") from None
    return bound


def cmd_oracle(args) -> int:
    if bool(args.file) == bool(args.sweep):
        raise UsageError("pass either a model file or --sweep, not both")

    max_nodes = _max_nodes()
    if args.sweep:
        bound = _parse_sweep(args.sweep)
        records = diagram_mod.proposition_sweep(bound, max_nodes=max_nodes)
        disagreements = [r for r in records if not r.agree]
        if args.json:
            print(
                json.dumps(
                    [
                        {
                            "point": r.label,
                            "count": r.count,
                            "unique": r.encodable,
                            "agree": r.agree,
                        }
                        for r in records
                    ],
                    indent=2,
                )
            )
        else:
            for r in records:
                marker = "ok" if r.agree else "DISAGREES"
                print(f"{r.label}: count={r.count} unique-predicted={r.encodable} {marker}")
            print(f"{len(records)} points, {len(disagreements)} disagreements")
        return FAILURE if disagreements else OK

    d = _load(args.file)
    binding = _parse_bindings(args.bind)
    _require_full_binding(d, binding)
    report = diagram_mod.check_encodable(d, binding)
    failed = False
    for motif in d.motifs:
        # at least 2 so that a truncated count still separates 1 from many
        result = diagram_mod.enumerate_configurations(
            d, motif, binding, limit=max(2, args.limit), max_nodes=max_nodes
        )
        predicted = all(e.ok for e in report.ends if e.motif == motif.name)
        count = len(result)
        agree = (count == 1) == predicted
        marker = "ok" if agree else "DISAGREES"
        suffix = "+" if result.truncated else ""
        print(f"motif {motif.name}: count={count}{suffix} unique-predicted={predicted} {marker}")
        failed = failed or not agree
    return FAILURE if failed else OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bipkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"bipkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_bind=True):
        p.add_argument("file", help="model file (.bip)")
        if with_bind:
            p.add_argument(
                "--bind",
                action="append",
                default=[],
                metavar="NAME=VALUE",
                help="bind a cardinality parameter (repeatable)",
            )

    p_check = sub.add_parser("check", help="validate a model; with a full binding, "
                             "also report the encodability conditions")
    add_common(p_check)
    p_check.add_argument("--json", action="store_true", help="machine-readable output")
    p_check.set_defaults(func=cmd_check)

    p_inst = sub.add_parser("instantiate", help="enumerate the configurations of a diagram")
    add_common(p_inst)
    p_inst.add_argument("--limit", type=int, default=100, help="stop after this many (default 100)")
    p_inst.add_argument("--json", action="store_true", help="machine-readable output")
    p_inst.set_defaults(func=cmd_instantiate)

    p_enc = sub.add_parser("encode", help="emit macros, glue XML, or behavior JSON")
    add_common(p_enc)
    p_enc.add_argument("--format", required=True, choices=sorted(_FORMATS))
    p_enc.add_argument("--out", help="output path (defaults beside the input)")
    p_enc.add_argument("--force", action="store_true", help="overwrite an existing output file")
    p_enc.set_defaults(func=cmd_encode)

    p_run = sub.add_parser("run", help="execute an instantiated system, writing a JSON trace")
    add_common(p_run)
    p_run.add_argument("--cycles", type=int, required=True)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--events", help="event script JSON")
    p_run.add_argument(
        "--policy", choices=engine_mod.POLICIES, default=engine_mod.UNIFORM_RANDOM
    )
    p_run.add_argument(
        "--source",
        choices=(engine_mod.DIAGRAM_SOURCE, engine_mod.MACRO_SOURCE),
        default=engine_mod.DIAGRAM_SOURCE,
        help="where the allowed interaction set comes from",
    )
    p_run.add_argument("--out", required=True, help="trace output path")
    p_run.add_argument("--force", action="store_true", help="overwrite an existing output file")
    p_run.set_defaults(func=cmd_run)

    p_orc = sub.add_parser(
        "oracle",
        help="cross-check brute-force enumeration against the uniqueness conditions",
    )
    p_orc.add_argument("file", nargs="?", help="model file (.bip)")
    p_orc.add_argument("--bind", action="append", default=[], metavar="NAME=VALUE")
    p_orc.add_argument("--sweep", metavar='"n,m,d<=K"', help="sweep all small single-motif diagrams")
    p_orc.add_argument("--limit", type=int, default=1000)
    p_orc.add_argument("--json", action="store_true")
    p_orc.set_defaults(func=cmd_oracle)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else OK
    try:
        return args.func(args)
    except ParseFailure as exc:
        for error in exc.errors:
            print(str(error), file=sys.stderr)
        return PARSE_ERROR
    except json.JSONDecodeError as exc:
        print(f"invalid JSON: {exc}", file=sys.stderr)
        return PARSE_ERROR
    except (CapacityError, LivelockError) as exc:
        print(str(exc), file=sys.stderr)
        return CAPACITY
    except (EncodabilityError, MacroEncodingError, ScriptError) as exc:
        print(str(exc), file=sys.stderr)
        return FAILURE
    except UsageError as exc:
        print(f"bipkit: error: {exc}", file=sys.stderr)
        return USAGE
    except OSError as exc:
        print(f"bipkit: cannot read or write: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
