"""Build a limit-periodic potential and report its periodic approximants."""

import argparse

import numpy as np

from kslab import potentials as pot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=1.0)
    ap.add_argument("--gamma", type=float, default=200.0)
    ap.add_argument("--L", type=int, default=1000)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    lp = pot.limit_periodic_potential(args.eps, args.gamma, args.L, args.levels, args.seed)
    print(f"n_k = {lp.sequences.ns}, ||V|| = {lp.norm:.5f} (< eps = {args.eps})")
    for k, (p, w) in enumerate(lp.approximants):
        v = np.asarray(w.values)
        defect = float(np.max(np.abs(v[p:] - v[:-p]))) if p < len(v) else float("nan")
        dist = float(np.max(np.abs(lp.lp - v)))
        print(f"level {k}: period {p:6d}  periodicity defect {defect:g}  sup-dist {dist:.3e}  tail bound {lp.tail[k]:.3e}")


if __name__ == "__main__":
    main()
