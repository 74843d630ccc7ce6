"""Truncation error rate against bond dimension, with extrapolation.

Evolves a batch of circuits at several bond dimensions, prints the
median error per two-qubit gate for each, then extrapolates the line
through the largest two bond dimensions to the chi needed for a target
error rate.
"""
import argparse

from rcsw import circuits, graphs
from rcsw.errors import FitError
from rcsw.mps import epsilon_vs_chi


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--depth", type=int, default=8)
    ap.add_argument("--instances", type=int, default=6)
    ap.add_argument("--chis", type=int, nargs="+", default=[4, 8, 16, 32])
    ap.add_argument("--blocks", type=int, default=2)
    ap.add_argument("--target-eps", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cs = [circuits.build_rg_circuit(
        graphs.sample_colored_graph(args.n, args.depth, args.seed + i),
        args.seed + i) for i in range(args.instances)]
    scan = epsilon_vs_chi(cs, args.chis, args.blocks, seed=args.seed)

    print(f"N = {args.n}, d = {args.depth}, {args.instances} circuits")
    print(f"{'chi':>5} {'blocking':>10} {'eps_median':>11} {'eps_std':>9}")
    for row in scan.rows:
        print(f"{row.chi:>5} {row.blocking:>10} {row.eps_median:>11.3e} "
              f"{row.eps_std:>9.1e}")

    try:
        chi_star = scan.extrapolate_chi(args.target_eps)
        print(f"\nextrapolated chi for eps = {args.target_eps:g}: "
              f"{chi_star:.0f}")
    except FitError as e:
        print(f"\nextrapolation unavailable: {e}")


if __name__ == "__main__":
    main()
