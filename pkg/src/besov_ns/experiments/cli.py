"""Command line: besov-ns <kind> [--config path] [--set section.key=value ...] [--out dir]."""
from __future__ import annotations

import argparse
import sys

from .config import KINDS, ConfigError, load_config
from .runner import run


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="besov-ns", description="Run one numerical experiment.")
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", help="INI file with [grid], [physics], [solver], [experiment]")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                    help="override one setting (repeatable)")
    ap.add_argument("--out", default="out", help="output directory (default: out)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides, kind=args.kind)
    except (ConfigError, OSError) as exc:
        print(f"besov-ns: config error: {exc}", file=sys.stderr)
        return 2
    try:
        outcome = run(cfg, args.out)
    except RuntimeError as exc:
        print(f"besov-ns: {exc}", file=sys.stderr)
        return 1
    for c in outcome.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    print(f"report: {args.out}/report.txt")
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
