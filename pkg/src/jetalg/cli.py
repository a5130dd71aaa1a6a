"""Command line interface and check dispatch.

Commands:

    jets run <file> [--format text|json] [--check LABEL]
    jets example <name> [--format text|json]
    jets list

Exit codes: 0 when every executed check passes, 1 when at least one
fails, 2 on usage or parse errors.  The json rendering contains only
run-independent fields, so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Sequence

from .algebroid import (
    AnchorSpec,
    check_closure,
    check_hamiltonian,
    check_jacobi,
    formal_arguments,
    hamiltonian_bracket,
)
from .dsl import COMMANDS, CheckCommand, ParseError, Session, parse_session
from .errors import EngineError
from .homological import (
    bivector,
    build_q,
    check_master_equation,
    classical_checks,
    classical_q,
    verify_q2,
)
from .jetcore import ODD
from .registry import BUILTIN_TEXTS, builtin_examples
from .report import VerificationReport, make_report


def _anchor_spec(session: Session, args: Sequence[str]) -> AnchorSpec:
    operator = session.operators.get(args[0])
    if operator is None:
        raise EngineError(f"unknown operator {args[0]!r}")
    bracket = None
    if len(args) > 1:
        bracket = session.brackets.get(args[1])
        if bracket is None:
            raise EngineError(f"unknown bracket {args[1]!r}")
    odd_domain = None
    if operator.domain.parity == ODD:
        odd_domain = operator.domain
    else:
        odd_domain = session.odd_partner(operator.domain)
    return AnchorSpec(
        operator=operator,
        bracket=bracket,
        kind="generic" if bracket is not None else "hamiltonian",
        odd_domain=odd_domain,
        name=args[0],
    )


def run_check(session: Session, command: CheckCommand | str) -> VerificationReport:
    """Run one check command against a session."""
    if isinstance(command, str):
        parts = command.split()
        if not parts or parts[0] not in COMMANDS:
            raise EngineError(f"unknown check command {command!r}")
        command = CheckCommand(parts[0], tuple(parts[1:]))
    taken = set(session.bundles)
    name = command.args[0] if command.args else ""
    started = time.perf_counter()
    if command.command == "classical":
        spec = session.classicals.get(name)
        if spec is None:
            raise EngineError(f"unknown classical spec {name!r}")
        structural = classical_checks(spec, name)
        nilpotency = verify_q2(classical_q(spec), name)
        ok = structural.passed and nilpotency.passed
        return VerificationReport(
            check=command.label,
            inputs={"classical": name, "m": str(spec.m), "d": str(spec.d)},
            residuals=structural.residuals + nilpotency.residuals,
            verdict="pass" if ok else "fail",
            wall_time_ms=structural.wall_time_ms + nilpotency.wall_time_ms,
            values=structural.values + nilpotency.values,
        )
    spec = _anchor_spec(session, command.args)
    operator = spec.operator
    if command.command == "check-hamiltonian":
        return check_hamiltonian(operator, name, taken)
    if command.command == "bracket":
        derived = hamiltonian_bracket(operator, formal_arguments(operator, 2, taken))
        return make_report(
            check=command.label,
            inputs={"operator": str(operator)},
            residual_items=[],
            started=started,
            details={"bracket": str(derived)},
        )
    if command.command == "closure":
        report = check_closure(spec, taken)
        report.check = command.label
        return report
    if command.command == "jacobi":
        report = check_jacobi(spec, taken)
        report.check = command.label
        return report
    if command.command == "build-q":
        q = build_q(spec, taken=taken)
        details = {}
        for bundle, sections in q.field.velocities.items():
            for comp, poly in enumerate(sections, start=1):
                suffix = f"[{comp}]" if bundle.fibre_dim > 1 else ""
                details[f"phi_{bundle.symbol}{suffix}"] = str(poly)
        return make_report(
            check=command.label,
            inputs={"operator": str(operator), "bracket": str(q.bracket)},
            residual_items=[],
            started=started,
            details=details,
        )
    if command.command == "verify-q2":
        report = verify_q2(build_q(spec, taken=taken), name)
        report.check = command.label
        return report
    if command.command == "bivector":
        density = bivector(operator, spec.odd_domain, taken)
        return make_report(
            check=command.label,
            inputs={"operator": str(operator)},
            residual_items=[],
            started=started,
            details={"density": str(density)},
        )
    if command.command == "master":
        q = build_q(spec, taken=taken)
        density = bivector(operator, q.b_bundle, taken)
        report = check_master_equation(density, q.u_bundle, q.b_bundle, name)
        report.check = command.label
        return report
    raise EngineError(f"unknown check command {command.command!r}")


def run_session(session: Session) -> list[VerificationReport]:
    return [run_check(session, command) for command in session.checks]


def render_report(report: VerificationReport, format: str = "text") -> bytes:
    """Serialize one report; json output is stable across runs."""
    if format == "json":
        return json.dumps(_report_dict(report), indent=2, sort_keys=True).encode()
    return _report_text(report).encode()


def render_reports(
    reports: Sequence[VerificationReport], format: str = "text"
) -> bytes:
    if format == "json":
        payload = {"reports": [_report_dict(report) for report in reports]}
        return json.dumps(payload, indent=2, sort_keys=True).encode()
    failed = sum(1 for report in reports if not report.passed)
    blocks = [_report_text(report) for report in reports]
    summary = f"{len(reports)} checks, {len(reports) - failed} passed, {failed} failed"
    return ("\n".join(blocks + [summary])).encode()


def _report_dict(report: VerificationReport) -> dict:
    return {
        "check": report.check,
        "verdict": report.verdict,
        "engine_version": report.engine_version,
        "inputs": report.inputs,
        "residuals": [
            {"name": name, "value": value} for name, value in report.residuals
        ],
        "details": report.details,
    }


def _report_text(report: VerificationReport) -> str:
    lines = [f"CHECK {report.check}: {report.verdict.upper()}"]
    for key, value in report.inputs.items():
        lines.append(f"  input {key}: {value}")
    for name, value in report.residuals:
        lines.append(f"  residual: {value} [{name}]")
    for key, value in report.details.items():
        lines.append(f"  detail {key}: {value}")
    lines.append(f"  time: {report.wall_time_ms:.1f} ms")
    return "\n".join(lines) + "\n"


def _emit(data: bytes) -> None:
    sys.stdout.write(data.decode())
    if not data.endswith(b"\n"):
        sys.stdout.write("\n")


def _run_reports(session: Session, check_filter: str | None) -> list[VerificationReport] | None:
    commands = session.checks
    if check_filter is not None:
        commands = [
            command
            for command in commands
            if command.label == check_filter or command.command == check_filter
        ]
        if not commands:
            print(f"error: no check matches {check_filter!r}", file=sys.stderr)
            return None
    try:
        return [run_check(session, command) for command in commands]
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="jets",
        description="Certify brackets, closure, Jacobi and nilpotency "
        "identities for differential-operator anchors on jet spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser("run", help="run the checks of a session file")
    run_parser.add_argument("file")
    run_parser.add_argument("--format", choices=("text", "json"), default="text")
    run_parser.add_argument("--check", default=None, help="run only this check")
    example_parser = sub.add_parser("example", help="run a built-in example")
    example_parser.add_argument("name")
    example_parser.add_argument("--format", choices=("text", "json"), default="text")
    sub.add_parser("list", help="list built-in examples")
    try:
        options = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if options.command == "list":
        for session in builtin_examples():
            print(session.name)
        return 0
    if options.command == "example":
        text = BUILTIN_TEXTS.get(options.name)
        if text is None:
            print(f"error: unknown example {options.name!r}", file=sys.stderr)
            return 2
        session = parse_session(text, options.name)
        reports = run_session(session)
        _emit(render_reports(reports, options.format))
        return 0 if all(report.passed for report in reports) else 1
    try:
        with open(options.file, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        session = parse_session(text, options.file)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    reports = _run_reports(session, options.check)
    if reports is None:
        return 2
    _emit(render_reports(reports, options.format))
    return 0 if all(report.passed for report in reports) else 1


def entry() -> None:
    sys.exit(main())
