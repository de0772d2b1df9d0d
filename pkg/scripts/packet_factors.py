"""Rate factor versus arrival probability for 1..n packets per frame.

Writes one CSV per objective: column ``beta`` then ``n1..nK`` and the
minimizing packet count.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from seqrd.random_rate import optimize_packets


def sweep(rate, n_max, points, objective):
    rows = []
    for beta in np.linspace(0.0, 1.0, points):
        best, factors = optimize_packets(rate, float(beta), n_max, objective)
        rows.append([float(beta), *factors, best])
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rates", default="1,5.5")
    ap.add_argument("--max-n", type=int, default=3)
    ap.add_argument("--points", type=int, default=101)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for rate in (float(r) for r in args.rates.split(",")):
        for objective in ("squared", "single"):
            rows = sweep(rate, args.max_n, args.points, objective)
            path = out / f"packets_R{rate:g}_{objective}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["beta", *(f"n{n}" for n in range(1, args.max_n + 1)), "best_n"])
                for r in rows:
                    w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])
            switches = [(r[0], r[-1]) for a, r in zip(rows, rows[1:]) if a[-1] != r[-1]]
            print(f"{path}: best n changes at", ", ".join(f"beta={b:.2f}->n={n}" for b, n in switches) or "never")


if __name__ == "__main__":
    main()
