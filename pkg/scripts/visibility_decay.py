"""Fitted first-order visibility of two thermal beams versus detected photon count.

Prints the median over seeds for each N next to 1/sqrt(N) and the
log-log slope, and optionally writes the table as CSV.
"""

import argparse
import csv

import numpy as np

from feyncoh.montecarlo import FirstOrderConfig, simulate_first_order


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ns", type=int, nargs="+", default=[100, 300, 1000, 3000, 10000, 30000])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--kind", default="thermal", choices=["thermal", "laser", "single_photon"])
    ap.add_argument("--intervals", type=int, default=1, help="coherence intervals for laser beams")
    ap.add_argument("--csv", help="write N, median, q1, q3 to this file")
    args = ap.parse_args()

    rows = []
    for n in args.ns:
        vs = [simulate_first_order(FirstOrderConfig(args.kind, n, n_intervals=args.intervals,
                                                    p_simultaneous=0.5, seed=s)).visibility
              for s in range(args.seeds)]
        q1, med, q3 = np.percentile(vs, [25, 50, 75])
        rows.append((n, med, q1, q3))
        print(f"N = {n:7d}  median V = {med:.5f}  IQR [{q1:.5f}, {q3:.5f}]  1/sqrt(N) = {n ** -0.5:.5f}")
    ns = np.array([r[0] for r in rows], dtype=float)
    med = np.array([r[1] for r in rows])
    if len(rows) > 1 and np.all(med > 0):
        print(f"log-log slope = {np.polyfit(np.log(ns), np.log(med), 1)[0]:.4f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n_photons", "median_visibility", "q1", "q3"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
