"""Command-line front end.

    freegroup-ergodic identity   --config cfg.json [--out report.json]
    freegroup-ergodic converge   --config cfg.json [--out table.csv] [--exact]
    freegroup-ergodic maximal    --config cfg.json
    freegroup-ergodic witness    --config cfg.json
    freegroup-ergodic invariance --config cfg.json

Exit status: 0 success, 1 identity mismatch or failed check, 2 bad input,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from . import experiments
from .errors import DEFAULT_CAP, InputError, PreconditionError, ResourceLimitError, resource_cap
from .measures import format_fraction

COMMANDS = ("identity", "converge", "maximal", "witness", "invariance")


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _json(data) -> str:
    return json.dumps(data, indent=2) + "\n"


def _csv(rows, exact: bool) -> str:
    def num(q):
        return format_fraction(q) if exact else format(float(q), ".17g")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "sup_error", "l1_error"])
    for row in rows:
        writer.writerow([row.index, num(row.sup_error), num(row.l1_error)])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freegroup-ergodic", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--exact", action="store_true", help="print exact rationals instead of floats")
        p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="max enumerated items per command")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config_path = Path(args.config)
    try:
        config = json.loads(config_path.read_text())
    except FileNotFoundError:
        print(f"error: config not found: {config_path}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: bad JSON in {config_path}: {exc}", file=sys.stderr)
        return 2
    base = config_path.resolve().parent
    try:
        with resource_cap(args.cap):
            if args.command == "identity":
                report = experiments.run_identity(config)
                _write(_json(report), args.out)
                if not report["pass"]:
                    fail = report["failure"]
                    print(
                        "identity failed: instance={instance} n={n} gamma={gamma} lhs={lhs} rhs={rhs}".format(**fail),
                        file=sys.stderr,
                    )
                    return 1
            elif args.command == "converge":
                _write(_csv(experiments.run_converge(config, base), args.exact), args.out)
            elif args.command == "maximal":
                _write(_json(experiments.run_maximal(config, base, args.exact)), args.out)
            elif args.command == "witness":
                _write(_json(experiments.run_witness(config)), args.out)
            elif args.command == "invariance":
                _write(_json(experiments.run_invariance(config)), args.out)
    except (InputError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except AssertionError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
