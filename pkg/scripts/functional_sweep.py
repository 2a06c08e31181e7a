"""How far the Monte Carlo correlator moves when a correlation functional
L_1 = c xi_0 is switched on, against the functional-free quadrature value."""

import argparse

import numpy as np

from kslab import ksoperators as ko
from kslab import potentials as pot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--coefficients", type=float, nargs="+", default=[0.0, 0.1, 0.25, 0.5, 1.0, -0.5])
    ap.add_argument("--trials", type=int, default=300_000)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    quad = ko.correlator_integral(pot.KSSpec(), 1, 1)
    print(f"quadrature (no functional terms): {quad:.5f}")
    for c in args.coefficients:
        spec = pot.KSSpec(functionals={1: pot.LinearFunctional({0: c})} if c else {})
        mc, se = ko.correlator_mc(spec, 1, 1, args.trials, args.seed)
        print(f"c={c:+5.2f}  mc {mc:.5f} +- {se:.1e}  rel diff {abs(mc - quad) / mc:.2%}  ({abs(mc - quad) / se:.0f} sigma)")


if __name__ == "__main__":
    main()
