"""Regenerate the data for every figure and print the shape checks."""

import argparse
import sys

from feyncoh import figures


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="figures")
    ap.add_argument("--seeds", type=int, default=None, help="seeds per N for the visibility figure")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    ok = True
    for fig in figures.FIGURES:
        data = figures.reproduce(fig, args.out_dir, seeds=args.seeds, seed=args.seed)
        for text, passed in data.checks:
            print(f"{fig:7s} {'PASS' if passed else 'FAIL'}  {text}")
        ok &= data.passed
    return 0 if ok else 3


if __name__ == "__main__":
    sys.exit(main())
