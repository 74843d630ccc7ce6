"""Fidelity estimator comparison on simulated noisy circuits.

Sweeps depth at fixed size and noise, printing the direct trajectory
fidelity next to the sample-based scores (linear cross entropy, mirror
return probability) and the analytic gate-counting prediction.
"""
import argparse

import numpy as np

from rcsw import circuits, graphs, statevector
from rcsw.estimators import GateCountParams, gate_counting
from rcsw.statevector import NoiseModel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--depths", type=int, nargs="+", default=[2, 4, 6, 8])
    ap.add_argument("--instances", type=int, default=4)
    ap.add_argument("--trajectories", type=int, default=48)
    ap.add_argument("--shots", type=int, default=4)
    ap.add_argument("--eps2q", type=float, default=0.008)
    ap.add_argument("--eps-mem", type=float, default=0.001)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    nm = NoiseModel(eps_2q=args.eps2q, eps_mem=args.eps_mem)
    gc = GateCountParams(eps_1q=0.0, eps_2q=args.eps2q, p_spam=0.0,
                         eps_mem=args.eps_mem)

    print(f"N = {args.n}, eps_2q = {args.eps2q}, eps_mem = {args.eps_mem}")
    print(f"{'d':>3} {'F_direct':>9} {'F_xeb':>8} {'F_mb':>8} {'F_gc':>8}")
    for d in args.depths:
        direct, xeb, mb = [], [], []
        for i in range(args.instances):
            s = args.seed + i
            c = circuits.build_rg_circuit(
                graphs.sample_colored_graph(args.n, d, s), s)
            probs = statevector.run(c).probabilities()
            res = statevector.run_trajectories(
                c, nm, args.trajectories, seed=s + 100,
                shots_per_traj=args.shots)
            direct.append(res.fidelity)
            xeb.extend(2.0 ** c.n * probs[int(x, 2)] - 1.0
                       for x in res.samples)
            mirror = circuits.build_mirror(c, seed=s + 200)
            mres = statevector.run_trajectories(
                mirror, nm, args.trajectories, seed=s + 300,
                shots_per_traj=args.shots)
            mb.extend(1.0 if x == mirror.initial_bits else 0.0
                      for x in mres.samples)
        print(f"{d:>3} {np.mean(direct):>9.4f} {np.mean(xeb):>8.4f} "
              f"{np.mean(mb):>8.4f} {gate_counting(gc, args.n, d):>8.4f}")


if __name__ == "__main__":
    main()
