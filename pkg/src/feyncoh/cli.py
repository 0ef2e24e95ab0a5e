"""Command-line entry point: validate, run, reproduce, list-presets.

Exit codes: 0 success, 2 validation or usage failure, 3 numeric failure
(including a failed figure shape check).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from . import figures
from .config import ConfigErrors, list_presets, load_preset, parse_config
from .core import UsageError
from .runner import run

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def _load(target: str):
    """A path to a config file, or the name of a bundled preset."""
    p = Path(target)
    if p.exists():
        return parse_config(p)
    if target in list_presets():
        return load_preset(target)
    return parse_config(p)   # reports the missing file


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="feyncoh", description="Path-sum coherence simulations.")
    sub = ap.add_subparsers(dest="verb", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--out-dir", help="directory for artifacts")
    common.add_argument("--mode", choices=["analytic", "montecarlo", "both"])

    v = sub.add_parser("validate", parents=[common], help="parse and validate a config file")
    v.add_argument("config")
    r = sub.add_parser("run", parents=[common], help="run a config file or preset")
    r.add_argument("config")
    rp = sub.add_parser("reproduce", parents=[common], help="emit the data behind a figure")
    rp.add_argument("figure", help=f"one of {', '.join(figures.FIGURES)} or 'all'")
    sub.add_parser("list-presets", parents=[common], help="list bundled presets")
    return ap


def _validate(args) -> int:
    try:
        cfg = _load(args.config)
    except ConfigErrors as exc:
        for e in exc.errors:
            print(f"{args.config}: {e}", file=sys.stderr)
        return EXIT_INVALID
    print(f"{args.config}: ok ({cfg.experiment.type}, {len(cfg.sources)} source(s))")
    return EXIT_OK


def _run(args) -> int:
    try:
        cfg = _load(args.config)
    except ConfigErrors as exc:
        for e in exc.errors:
            print(f"{args.config}: {e}", file=sys.stderr)
        return EXIT_INVALID
    if args.samples is not None and args.samples < 1:
        print("--samples must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    res = run(cfg, args.out_dir, args.samples, args.seed, args.mode)
    if res.exit_code:
        print(res.message, file=sys.stderr)
        return res.exit_code
    print((res.out_dir / "report.txt").read_text(encoding="utf-8"), end="")
    print(f"artifacts written to {res.out_dir}")
    return EXIT_OK


def _reproduce(args) -> int:
    ids = figures.FIGURES if args.figure == "all" else [args.figure]
    out = Path(args.out_dir or "figures")
    status = EXIT_OK
    for fig in ids:
        try:
            data = figures.reproduce(fig, out, seeds=args.samples, seed=args.seed or 0)
        except UsageError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_INVALID
        except (ArithmeticError, ValueError) as exc:
            print(f"{fig}: numeric failure: {exc}", file=sys.stderr)
            status = EXIT_NUMERIC
            continue
        for text, ok in data.checks:
            print(f"{fig}: {'PASS' if ok else 'FAIL'}  {text}")
        if not data.passed:
            status = EXIT_NUMERIC
    print(f"data written under {out}")
    return status


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "list-presets":
        for name in list_presets():
            print(name)
        return EXIT_OK
    return {"validate": _validate, "run": _run, "reproduce": _reproduce}[args.verb](args)


if __name__ == "__main__":
    sys.exit(main())
