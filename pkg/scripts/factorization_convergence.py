"""Nested-quadrature correlator at increasing resolution next to a Monte Carlo
reference, for small volumes."""

import argparse

from kslab import ksoperators as ko
from kslab import potentials as pot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[100, 200, 400, 800])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for L, n in [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2)]:
        spec = pot.KSSpec()
        mc, se = ko.correlator_mc(spec, L, n, args.trials, args.seed)
        vals = [ko.correlator_integral(spec, L, n, N=N, n_E=N) for N in args.resolutions]
        steps = " ".join(f"{abs(b - a):.1e}" for a, b in zip(vals, vals[1:]))
        print(f"L={L} n={n}: mc {mc:.5f} +- {se:.1e} | quad {vals[-1]:.6f} | refinement steps {steps}")


if __name__ == "__main__":
    main()
