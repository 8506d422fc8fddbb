#!/usr/bin/env python3
"""Sweep SPD spectra and compare observed residual contraction to the bounds.

For each condition number the worst per-step residual ratio of the minimal
residual and steepest descent methods is recorded together with its
spectral bound (sqrt(1 - nu^2) resp. sqrt(1/nu^2 - 1) with nu the
antieigenvalue 2 sqrt(mM)/(m+M)).  Writes a CSV and prints a table.

Usage: python scripts/rate_study.py [--out rates.csv] [--seed 0]
"""

import argparse
import csv
import math

import numpy as np

import gradcert as gc


def worst_ratio(problem, family):
    trace = gc.solve(problem, gc.MethodSpec(family), gc.euclidean(),
                     gc.StopRule(res_tol=1e-10, max_iter=500))
    res = trace.res_norms
    return max(b / a for a, b in zip(res, res[1:])), trace.n_steps


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="rate_study.csv")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = []
    rng = np.random.default_rng(args.seed)
    for kappa in (1.5, 2.0, 4.0, 8.0, 16.0, 32.0):
        for dim in (2, 4):
            m, M = 1.0, kappa
            x0 = rng.uniform(-2.0, 2.0, dim)
            problem = gc.linear_spd(m, M, dim, rotate=True,
                                    seed=args.seed + dim, x0=x0)
            nu = 2.0 * math.sqrt(m * M) / (m + M)
            for family, bound in (
                    (gc.MIN_RESIDUAL, math.sqrt(1.0 - nu * nu)),
                    (gc.STEEPEST_DESCENT, math.sqrt(1.0 / nu**2 - 1.0))):
                ratio, steps = worst_ratio(problem, family)
                rows.append({"kappa": kappa, "dim": dim, "family": family,
                             "nu": nu, "worst_ratio": ratio, "bound": bound,
                             "margin": bound - ratio, "steps": steps})

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)

    print(f"{'kappa':>6} {'dim':>4} {'family':>18} {'worst':>9} {'bound':>9} {'margin':>9}")
    for r in rows:
        print(f"{r['kappa']:>6.1f} {r['dim']:>4d} {r['family']:>18} "
              f"{r['worst_ratio']:>9.5f} {r['bound']:>9.5f} {r['margin']:>9.5f}")
    print(f"\nwrote {args.out}")
    assert all(r["margin"] >= -1e-9 for r in rows), "a bound was violated"


if __name__ == "__main__":
    main()
