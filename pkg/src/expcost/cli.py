"""``expcost`` command line: parse, exact, certify, estimate and corpus runs.

Exit codes are shared by all commands: 0 ok, 1 violation, 2 inconclusive,
3 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .certify import AnnotationError, CreditAnnotation, certify, load_certificate
from .costs import MODELS, get_model
from .engine import DEFAULT_MAX_DEPTH, DEFAULT_TOL, SCHEMA_VERSION, expected_cost
from .lang.parser import ParseError, parse_program
from .lang.pretty import pretty
from .montecarlo import DEFAULT_STEP_LIMIT, estimate

EXIT_OK, EXIT_VIOLATION, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(obj, fmt: str = "json", out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(obj, indent=2, sort_keys=False) + "\n")
    else:
        out.write(obj if isinstance(obj, str) else _csv_rows([obj]))


def _csv_rows(rows: list) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
    return buf.getvalue()


def _params(pairs) -> dict:
    out = {}
    for p in pairs or ():
        k, sep, v = p.partition("=")
        if not sep:
            raise UsageError(f"--param expects NAME=VALUE, got {p!r}")
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            raise UsageError(f"--param value for {k!r} is not JSON: {v!r}") from None
    return out


def _load_program(target: str, params: dict):
    """Returns ``(expr, corpus entry or None)``; a path wins over an entry name."""
    p = Path(target)
    if p.exists():
        return parse_program(p.read_text(), source=str(p)), None
    from .corpus import get_entry

    try:
        entry = get_entry(target)
    except KeyError:
        raise UsageError(f"no such file or corpus entry: {target}") from None
    return entry.program(**params), entry


def _model(name: Optional[str], entry, default: str = "all"):
    if name is None:
        name = entry.model if entry is not None else default
    try:
        return get_model(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def cmd_parse(args) -> int:
    expr, _ = _load_program(args.program, _params(args.param))
    print(pretty(expr))
    return EXIT_OK


def cmd_exact(args) -> int:
    params = _params(args.param)
    expr, entry = _load_program(args.program, params)
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    rep = expected_cost(expr, _model(args.model, entry), max_depth=args.depth, tol=args.tol)
    _emit(rep.to_json() if args.format == "json" else rep.to_csv(), args.format)
    if float(rep.stuck_mass) > 0:
        return EXIT_VIOLATION
    return EXIT_OK if rep.converged else EXIT_INCONCLUSIVE


def _annotation(args, entry, params):
    model_name = None
    if args.cert and args.cert != "builtin":
        try:
            ann, model_name, _ = load_certificate(args.cert)
        except (OSError, ValueError, KeyError, AnnotationError) as exc:
            raise UsageError(f"cannot load certificate {args.cert}: {exc}") from None
    elif entry is not None:
        ann = entry.certificate(**params)
        if ann is None:
            raise UsageError(f"corpus entry {entry.name} has no registered certificate")
    else:
        raise UsageError("certify needs --cert PATH for a program file")
    if args.credit is not None:
        try:
            ann = CreditAnnotation(Fraction(args.credit), ann.site_rules, ann.default_rule)
        except ValueError:
            raise UsageError(f"bad --credit value {args.credit!r}") from None
    return ann, model_name


def cmd_certify(args) -> int:
    params = _params(args.param)
    expr, entry = _load_program(args.program, params)
    ann, cert_model = _annotation(args, entry, params)
    model = _model(args.model or cert_model, entry)
    post = entry.postcondition(**params) if entry is not None else None
    rep = certify(expr, ann, model, budget=args.budget, postcondition=post)
    _emit(rep.to_json(), "json")
    return {"Certified": EXIT_OK, "Refuted": EXIT_VIOLATION}.get(rep.verdict, EXIT_INCONCLUSIVE)


def cmd_estimate(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.step_limit < 1:
        raise UsageError("--step-limit must be positive")
    params = _params(args.param)
    expr, entry = _load_program(args.program, params)
    est = estimate(expr, _model(args.model, entry), args.trials, args.seed, args.step_limit)
    _emit(est.to_json(), "json")
    return EXIT_OK if est.stuck == 0 else EXIT_VIOLATION


def _run_one(job):
    from .corpus import get_entry
    from .corpus.check import run_instance

    name, params, trials, seed = job
    return run_instance(get_entry(name), params, trials, seed).to_json()


def cmd_corpus(args) -> int:
    from .corpus import corpus_entries

    wanted = set()
    for o in args.only or ():
        wanted.update(x for x in o.split(",") if x)
    entries = corpus_entries()
    known = {e.name for e in entries}
    unknown = wanted - known
    if unknown:
        raise UsageError(f"unknown corpus entries: {', '.join(sorted(unknown))}")
    jobs = [(e.name, p, args.trials, args.seed)
            for e in entries if not wanted or e.name in wanted
            for p in e.instances()]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_run_one, jobs))
    else:
        rows = [_run_one(j) for j in jobs]
    failed = [r for r in rows if not r["passed"]]
    if args.format == "json":
        _emit({"schema_version": SCHEMA_VERSION, "kind": "corpus_summary",
               "instances": len(rows), "failed": len(failed), "results": rows})
    else:
        sys.stdout.write(_csv_rows(rows))
    return EXIT_VIOLATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="expcost", description="Expected-cost analysis for RandML programs.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    models = sorted(MODELS)

    def program_cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("program", help="RandML source file or corpus entry name")
        p.add_argument("--param", action="append", metavar="NAME=VALUE",
                       help="corpus entry parameter (JSON value)")
        return p

    program_cmd("parse", "print the desugared core term")

    p = program_cmd("exact", "expected cost by exact enumeration")
    p.add_argument("--model", choices=models)
    p.add_argument("--depth", type=int, default=DEFAULT_MAX_DEPTH)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = program_cmd("certify", "check a credit certificate")
    p.add_argument("--cert", metavar="PATH", help="certificate JSON, or 'builtin'")
    p.add_argument("--credit", help="override the initial credit (decimal or p/q)")
    p.add_argument("--model", choices=models)
    p.add_argument("--budget", type=int, default=1_000_000)

    p = program_cmd("estimate", "Monte Carlo estimate of expected cost")
    p.add_argument("--model", choices=models)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step-limit", type=int, default=DEFAULT_STEP_LIMIT)

    p = sub.add_parser("corpus", help="check every corpus entry")
    p.add_argument("--only", action="append", metavar="NAME")
    p.add_argument("--trials", type=int, default=2000, help="Monte Carlo trials (0 skips)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return ap


_COMMANDS = {"parse": cmd_parse, "exact": cmd_exact, "certify": cmd_certify,
             "estimate": cmd_estimate, "corpus": cmd_corpus}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(_COMMANDS))
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be at least 1")
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"expcost: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"expcost: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
