"""Command-line front end.

Exit codes: 0 success, 1 error-severity findings (lint, check), 2 usage or
I/O errors. Findings always go to stdout; stderr carries only usage and
I/O problems.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

from . import auditor, erdi8, idstore, server, urikit

__all__ = ["run", "main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, stderr: Optional[TextIO] = None, **kwargs):
        super().__init__(*args, **kwargs)
        self._stderr = stderr

    def _print_message(self, message, file=None):
        # usage errors go to the caller's stderr, --help to stdout
        if message:
            target = (self._stderr or sys.stderr) if file is sys.stderr else (file or sys.stdout)
            target.write(message)


def build_parser(stderr: Optional[TextIO] = None) -> argparse.ArgumentParser:
    parser = _Parser(prog="purlite", description="Persistent identifier toolkit.", stderr=stderr)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("lint", help="check a URI against the style catalog", stderr=stderr)
    p.add_argument("uri")
    p.add_argument("--profile", choices=("resource", "document"), default="resource")
    p.add_argument("--max-path-length", type=int, default=urikit.MAX_PATH_LENGTH)

    p = sub.add_parser("check", help="dereference a URI and audit its redirect chain", stderr=stderr)
    p.add_argument("uri")
    p.add_argument("--accept", default="text/turtle")
    p.add_argument("--strict", action="store_true", help="treat a chain without 303 as an error")
    p.add_argument("--max-hops", type=int, default=10)
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--format", choices=("text", "lines"), default="text")
    p.add_argument("--route", action="append", default=[], metavar="ORIGIN=URL",
                   help="send requests for ORIGIN to URL instead (repeatable)")

    p = sub.add_parser("mint", help="mint one identifier", stderr=stderr)
    p.add_argument("--strategy", required=True, choices=idstore.KINDS)
    p.add_argument("--ledger", type=Path, help="journal file (required for ledger-backed strategies)")
    p.add_argument("--name", help="counter name in the ledger (default: the strategy)")
    p.add_argument("--prefix", default="")
    p.add_argument("--length", type=int, default=2)
    p.add_argument("--start")
    p.add_argument("--max-retries", type=int, default=10)
    p.add_argument("--digest-bits", type=int, default=64)
    p.add_argument("--field", action="append", default=[], help="natural key field, in order (repeatable)")
    p.add_argument("--seed", default="purlite", help="machine seed for statelessTime")
    p.add_argument("--safe", action="store_true", help="use the vowel-free alphabet")

    p = sub.add_parser("rules", help="rules file tools", stderr=stderr)
    rules_sub = p.add_subparsers(dest="rules_command", required=True, parser_class=_Parser)
    v = rules_sub.add_parser("validate", help="validate a rules file", stderr=stderr)
    v.add_argument("path", type=Path)

    p = sub.add_parser("encode", help="re-encode a UUID or hex value as an erdi8 id", stderr=stderr)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--uuid")
    group.add_argument("--hex")
    p.add_argument("--min-length", type=int, default=1)
    p.add_argument("--safe", action="store_true")

    p = sub.add_parser("estimate", help="birthday-bound collision probability", stderr=stderr)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--space", type=int, required=True)

    p = sub.add_parser("serve", help="run the redirect server", stderr=stderr)
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return parser


def _lint(args, out, err) -> int:
    try:
        uri = urikit.parse(args.uri)
    except urikit.MalformedUri as exc:
        print(f"purlite lint: {exc}", file=err)
        return 2
    diagnostics = urikit.lint(uri, args.profile, args.max_path_length)
    for d in diagnostics:
        print(urikit.format_diagnostic(d), file=out)
    return 1 if any(d.severity == "error" for d in diagnostics) else 0


def _check(args, out, err) -> int:
    routes = {}
    for item in args.route:
        origin, eq, url = item.partition("=")
        if not eq:
            print(f"purlite check: --route expects ORIGIN=URL, got {item!r}", file=err)
            return 2
        routes[origin] = url
    try:
        report = auditor.audit(args.uri, args.accept, args.max_hops,
                               auditor.HttpFetcher(args.timeout, routes), strict=args.strict)
    except urikit.MalformedUri as exc:
        print(f"purlite check: {exc}", file=err)
        return 2
    out.write(auditor.report_render(report, args.format))
    if report.network_error:
        print(f"purlite check: {report.network_error}", file=err)
        return 2
    return 1 if report.errors else 0


def _mint(args, out, err) -> int:
    alphabet = erdi8.SAFE if args.safe else erdi8.STANDARD
    try:
        strategy = idstore.MintStrategy(
            args.name or args.strategy, args.strategy, args.prefix, alphabet, args.length,
            args.max_retries, args.digest_bits, args.start)
        ledger = idstore.Ledger(args.ledger) if args.ledger else None
        identifier = idstore.mint(strategy, ledger, fields=args.field, machine_seed=args.seed)
    except (idstore.LedgerError, idstore.RetriesExhausted, erdi8.SpaceExhausted, OSError, ValueError) as exc:
        print(f"purlite mint: {exc}", file=err)
        return 2
    print(identifier, file=out)
    return 0


def _rules(args, out, err) -> int:
    try:
        text = args.path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"purlite rules: {exc}", file=err)
        return 2
    _, errors = server.check_rules(text)
    for e in errors:
        print(f"{args.path}:{e.line}: {type(e).__name__}: {e.message}", file=out)
    if errors:
        return 2
    print("OK", file=out)
    return 0


def _encode(args, out, err) -> int:
    alphabet = erdi8.SAFE if args.safe else erdi8.STANDARD
    value = args.uuid if args.uuid is not None else args.hex
    try:
        if args.min_length < 1:
            raise ValueError("--min-length must be at least 1")
        print(erdi8.reencode_hex(value, args.min_length, alphabet), file=out)
    except ValueError as exc:
        print(f"purlite encode: {exc}", file=err)
        return 2
    return 0


def _estimate(args, out, err) -> int:
    try:
        p = idstore.collision_probability(args.count, args.space)
    except ValueError as exc:
        print(f"purlite estimate: {exc}", file=err)
        return 2
    print(f"{p:.6g}", file=out)
    return 0


def _serve(args, out, err) -> int:
    logging.basicConfig(level=args.log_level, stream=err,
                        format="%(asctime)s %(levelname)s %(name)s %(message)s")
    return server.serve(args.config, stderr=err)


COMMANDS = {
    "lint": _lint,
    "check": _check,
    "mint": _mint,
    "rules": _rules,
    "encode": _encode,
    "estimate": _estimate,
    "serve": _serve,
}


def run(argv: Sequence[str], stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser(err)
    try:
        with contextlib.redirect_stdout(out):
            args = parser.parse_args(list(argv))
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 after --help
        return exc.code if isinstance(exc.code, int) else 2
    return COMMANDS[args.command](args, out, err)


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
