"""Command-line front end.

Exit codes: 0 success, 1 unreadable or malformed input, 2 nondeterminism or a
blocking restricted-class violation, 3 delay pattern outside the rewrites,
4 candidate rejected by the simulation check.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from constants import SNP_DEFAULT_HORIZON, SNP_FIXTURES_DIR, SNP_LOG_LEVEL, SNP_SWEEP_WORKERS
from snp.constructs import classify_constructs
from snp.document import load_system, parse_assignments, render_system
from snp.dot import export_dot
from snp.eliminator import transform
from snp.equivalence import Expectation, compare
from snp.errors import (
    NondeterminismError,
    OutOfScopeError,
    RestrictionError,
    SNPError,
    UnclassifiableTopologyError,
)
from snp.fixtures import fixture_path, run_sweep
from snp.matrix_engine import build_transition_matrix, matrix_run
from snp.models import SystemDescription
from snp.simulator import run
from snp.validation import validate_restricted

logger = logging.getLogger("snp.cli")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_RESTRICTED = 2
EXIT_OUT_OF_SCOPE = 3
EXIT_REJECT = 4


def _load(reference: str, assignments) -> SystemDescription:
    """A document path, or the name of a shipped fixture."""
    path = Path(reference)
    if not path.is_file():
        path = fixture_path(reference, SNP_FIXTURES_DIR)
    return load_system(path, parse_assignments(assignments))


def _horizon(args) -> Optional[int]:
    return args.horizon if args.horizon is not None else SNP_DEFAULT_HORIZON


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")


def cmd_simulate(args) -> int:
    system = _load(args.path, args.set)
    result = run(system, _horizon(args))
    if args.format == "records":
        lines = result.trace.records()
    else:
        lines = result.trace.lines(verbose=args.verbose)
        lines += result.sinks.lines()
        lines.append(f"halted={'true' if result.halted else 'false'} steps={result.trace.steps} "
                     f"lost-spikes={result.trace.lost_spikes}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validate_restricted(_load(args.path, args.set))
    if args.format == "records":
        _emit(json.dumps(report.to_dict()) + "\n", args.out)
    else:
        _emit("\n".join(report.lines()) + "\n", args.out)
    return EXIT_RESTRICTED if report.blocking else EXIT_OK


def cmd_classify(args) -> int:
    routing = classify_constructs(_load(args.path, args.set))
    if args.format == "records":
        _emit("".join(json.dumps(c.model_dump()) + "\n" for c in routing.constructs), args.out)
    else:
        _emit("\n".join(routing.lines()) + "\n", args.out)
    return EXIT_OK


def cmd_transform(args) -> int:
    result = transform(_load(args.path, args.set), _horizon(args))
    document = render_system(result.system)
    report = result.report()
    if args.out is None:
        sys.stdout.write(document)
        sys.stderr.write(report)
        return EXIT_OK
    _emit(document, args.out)
    sidecar = args.out.with_name(args.out.name + ".report")
    sidecar.write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return EXIT_OK


def cmd_check(args) -> int:
    original = _load(args.original, args.set)
    candidate = _load(args.candidate, args.set)
    expected = None
    factors = parse_assignments(args.expect_factor)
    if args.expect_offset is not None or factors:
        expected = Expectation(offset=args.expect_offset, factors=factors)
    verdict = compare(original, candidate, _horizon(args), expected)
    if args.format == "records":
        _emit(json.dumps(verdict.to_dict()) + "\n", args.out)
    else:
        _emit(verdict.report(), args.out)
    if args.record:
        from database.database import SessionLocal, init_db, record_check

        init_db()
        with SessionLocal() as db:
            logger.info("check stored as %s", record_check(db, verdict).id)
    return EXIT_OK if verdict.accepted else EXIT_REJECT


def cmd_matrix(args) -> int:
    system = _load(args.path, args.set)
    matrix = build_transition_matrix(system)
    text = matrix.dump()
    if args.verbose:
        vectors = matrix_run(system, _horizon(args))
        text += "".join(f"t={t} " + " ".join(str(v) for v in vector) + "\n" for t, vector in enumerate(vectors))
    _emit(text, args.out)
    return EXIT_OK


def cmd_export_dot(args) -> int:
    _emit(export_dot(_load(args.path, args.set)), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.stop < args.start:
        raise SNPError("--to must not be below --from")
    outcomes = run_sweep(args.fixture, args.param, range(args.start, args.stop + 1),
                         horizon=_horizon(args), workers=args.workers,
                         fixed=parse_assignments(args.set), directory=SNP_FIXTURES_DIR)
    _emit("".join(outcome.line() + "\n" for outcome in outcomes), args.out)
    if args.record:
        from database.database import SessionLocal, init_db, record_sweep

        init_db()
        with SessionLocal() as db:
            for outcome in outcomes:
                record_sweep(db, outcome)
    if any(outcome.error is not None for outcome in outcomes):
        return EXIT_OUT_OF_SCOPE
    return EXIT_OK if all(outcome.accepted for outcome in outcomes) else EXIT_REJECT


def _common(parser: argparse.ArgumentParser, path: bool = True) -> None:
    if path:
        parser.add_argument("path", help="system document, or the name of a shipped fixture")
    parser.add_argument("--horizon", type=int, default=None, help="maximum number of steps")
    parser.add_argument("--set", action="append", default=[], metavar="NAME=INT",
                        help="override a document parameter")
    parser.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
    parser.add_argument("--format", choices=("text", "records"), default="text")
    parser.add_argument("--verbose", action="store_true", help="include configurations in the output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snp", description="Simulate SNP systems and eliminate rule delays.")
    parser.add_argument("--log-debug", action="store_true", help="DEBUG logging for the snp package")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, handler, help_text in (
        ("simulate", cmd_simulate, "run a system and print its trace"),
        ("validate", cmd_validate, "report restricted-class violations"),
        ("classify", cmd_classify, "list the routing constructs of a system"),
        ("transform", cmd_transform, "rewrite a system into a delay-free one"),
        ("matrix", cmd_matrix, "print the transition matrix of a delay-free system"),
        ("export-dot", cmd_export_dot, "print the topology as a DOT graph"),
    ):
        sub = commands.add_parser(name, help=help_text)
        _common(sub)
        sub.set_defaults(handler=handler)

    check = commands.add_parser("check", help="decide whether a delay-free candidate simulates a system")
    check.add_argument("original")
    check.add_argument("candidate")
    _common(check, path=False)
    check.add_argument("--expect-offset", type=int, default=None)
    check.add_argument("--expect-factor", action="append", default=[], metavar="SINK=INT")
    check.add_argument("--record", action="store_true", help="store the verdict in the run ledger")
    check.set_defaults(handler=cmd_check)

    sweep = commands.add_parser("sweep", help="transform and check a fixture over a parameter range")
    sweep.add_argument("fixture")
    _common(sweep, path=False)
    sweep.add_argument("--param", default="d")
    sweep.add_argument("--from", dest="start", type=int, default=1)
    sweep.add_argument("--to", dest="stop", type=int, default=5)
    sweep.add_argument("--workers", type=int, default=SNP_SWEEP_WORKERS)
    sweep.add_argument("--record", action="store_true", help="store each outcome in the run ledger")
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=SNP_LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s")
    if args.log_debug:
        logging.getLogger("snp").setLevel(logging.DEBUG)
    try:
        return args.handler(args)
    except (NondeterminismError, RestrictionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESTRICTED
    except (OutOfScopeError, UnclassifiableTopologyError) as exc:
        print(f"out of scope: {exc}", file=sys.stderr)
        return EXIT_OUT_OF_SCOPE
    except (SNPError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
