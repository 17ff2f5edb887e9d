"""How the dRpA RMSE-win region moves with nN, p and r_K on the top lattice.

    python scripts/sweep_sample_size.py
"""

import argparse
import csv
import itertools
from pathlib import Path

from nsum import analytic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nn", type=float, nargs="+", default=[5e3, 5e4, 5e5, 5e6])
    ap.add_argument("--p", type=float, nargs="+", default=[0.01, 0.001])
    ap.add_argument("--rk", type=float, nargs="+", default=[0.1])
    ap.add_argument("--variance-form", choices=analytic.VARIANCE_FORMS, default="derived")
    ap.add_argument("--output", default="results/sweep_counts.csv")
    args = ap.parse_args()
    top = analytic.PRESETS["fig1-top"]
    rows = []
    for p, rk, nn in itertools.product(args.p, args.rk, args.nn):
        grid = analytic.winner_grid(p, rk, nn, top.log_a, top.r, args.variance_form)
        rows.append({"p": p, "r_k": rk, "nN": nn,
                     "drpa_rmse_wins": grid.count("rmse", "dRpA"),
                     "drpr_rmse_wins": grid.count("rmse", "dRpR"),
                     "invalid": grid.count("rmse", "invalid")})
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    with open(args.output, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    for row in rows:
        print(f"p={row['p']:<6g} r_K={row['r_k']:<5g} nN={row['nN']:<8g} "
              f"dRpA wins {row['drpa_rmse_wins']}")


if __name__ == "__main__":
    main()
