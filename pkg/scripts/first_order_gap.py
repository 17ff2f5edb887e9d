"""Monte Carlo moments of dRpR and dRpA against the first-order closed forms.

The dRpA mean carries a second-order term of order 1/(N_K p) that the
closed forms drop; this script shows it shrinking as probe links grow.

    python scripts/first_order_gap.py --a 2 --r 0.25
"""

import argparse

from nsum import analytic
from nsum.montecarlo import simulate_drpr_drpa
from nsum.netgen import BlockParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--r", type=float, default=0.25)
    ap.add_argument("--n-total", type=int, default=20_000)
    ap.add_argument("--probe-size", type=int, default=2000)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--p", type=float, nargs="+", default=[0.005, 0.01, 0.02, 0.05, 0.1])
    args = ap.parse_args()
    print(f"{'p':>7} {'N_K p':>7} {'kind':>5} {'MC mean':>10} {'closed':>10} "
          f"{'gap':>9} {'var ratio':>9}")
    for p in args.p:
        params = BlockParams.scaled(args.n_total, int(round(args.r * args.n_total)), args.a, p)
        values, _ = simulate_drpr_drpa(params, args.n, args.probe_size, args.reps, seed=1)
        for kind in analytic.KINDS:
            v = values[kind]
            mean = analytic.expect_general(kind, params.p_hh, params.p_hl, params.p_ll, args.r)
            var = analytic.var_general(kind, params.p_hh, params.p_hl, params.p_ll, args.r,
                                       args.n, args.n_total, args.probe_size)
            print(f"{p:7g} {args.probe_size * p:7g} {kind:>5} {v.mean():10.6f} {mean:10.6f} "
                  f"{v.mean() / mean - 1:9.2%} {v.var(ddof=1) / var:9.3f}")


if __name__ == "__main__":
    main()
