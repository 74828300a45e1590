#!/usr/bin/env python3
"""Empirical convergence study of the solver's step size.

Solves one smooth-history problem at a ladder of step sizes against a
fine-grid reference and prints the observed error ratios (a fourth-order
march shows ratios near 16 when h halves).

Usage:
    python3 scripts/convergence_study.py [--a A] [--horizon T] [--steps N]
"""

import argparse
import math

import numpy as np

from infidelay import (
    CoefficientFamily,
    DelaySchedule,
    ProblemSpec,
    SolverConfig,
    history_preset,
    solve,
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--a", type=float, default=0.1, help="instantaneous drift coefficient")
    parser.add_argument("--horizon", type=float, default=3.0, help="integration horizon")
    parser.add_argument("--steps", type=int, default=4, help="number of halvings from h = 0.2")
    parser.add_argument(
        "--family",
        choices=["finite", "geometric"],
        default="finite",
        help="delay family: one coefficient -0.5, or b_i = 2^-i",
    )
    args = parser.parse_args()

    if args.family == "finite":
        fam = CoefficientFamily.finite_support([-0.5], DelaySchedule())
    else:
        fam = CoefficientFamily.geometric(1.0, 0.5, DelaySchedule())
    problem = ProblemSpec(args.a, fam, history_preset("cos"))

    hs = [0.2 / 2**j for j in range(args.steps)]
    ref = solve(problem, args.horizon, SolverConfig(h=hs[-1] / 8.0))
    ts = np.linspace(0.0, args.horizon, 601)
    ref_vals = ref.eval(ts)

    print(f"a = {args.a}, family = {args.family}, horizon = {args.horizon}")
    print(f"{'h':>10s} {'max error':>14s} {'ratio':>8s} {'order':>7s}")
    prev = None
    for h in hs:
        traj = solve(problem, args.horizon, SolverConfig(h=h))
        err = float(np.max(np.abs(traj.eval(ts) - ref_vals)))
        if prev is None:
            print(f"{h:10.5f} {err:14.4e} {'-':>8s} {'-':>7s}")
        else:
            ratio = prev / err if err > 0 else math.inf
            order = math.log2(ratio) if math.isfinite(ratio) and ratio > 0 else float("nan")
            print(f"{h:10.5f} {err:14.4e} {ratio:8.2f} {order:7.2f}")
        prev = err


if __name__ == "__main__":
    main()
