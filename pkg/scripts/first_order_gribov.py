"""Terms of the first-order trace series for S_3 + H_{mu, lam}.

The cubic coupling has no diagonal part, so each term equals the second-order
eigenvalue shift lam^2/3 [1 + 2/(j-1) - 2/(j-2)] up to O(lam^4 / j^2) and the
partial sums grow linearly with slope lam^2/3. The script prints the computed
terms next to that prediction.

Usage: python3 scripts/first_order_gribov.py [--mu 1] [--lam 0.2] [--n-max 80] [--dim 400]
"""

from __future__ import annotations

import argparse

import numpy as np

from focknum.spectra import GribovParams, gribov_perturbation
from focknum.trace import first_order_series


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--lam", type=float, default=0.2)
    ap.add_argument("--n-max", type=int, default=80)
    ap.add_argument("--dim", type=int, default=400)
    args = ap.parse_args()

    B = gribov_perturbation(GribovParams(mu=args.mu, lam=args.lam))
    ts = first_order_series(3, B, args.dim, args.n_max, check_convergence=True)
    terms = np.diff(ts.partial_sums, prepend=0)
    lam2 = args.lam ** 2
    print(f"{'j':>4} {'S_j':>22} {'term_j':>22} {'second order':>22}")
    for j in range(args.n_max + 1):
        pred = lam2 / 3 * (1 + 2 / (j - 1) - 2 / (j - 2)) if j >= 4 else float("nan")
        if j < 12 or j % 10 == 0:
            print(f"{j:4d} {ts.partial_sums[j].real:22.15e} {terms[j].real:22.15e} {pred:22.15e}")
    print(f"slope lam^2/3 = {lam2 / 3:.15e}")


if __name__ == "__main__":
    main()
