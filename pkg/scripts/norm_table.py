"""Discretized operator norms over the energy window for several scales."""

import argparse

from kslab import verify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scales", type=float, nargs="+", default=[1.0, 0.3, 0.1])
    ap.add_argument("--points", type=int, default=11)
    args = ap.parse_args()
    print(f"{'a':>5} {'E':>8} {'S_11':>10} {'S_12':>10} {'bound':>8} {'T_22':>10}")
    for a, E, s11, s12, t22 in verify.norm_sweep(args.scales, args.points):
        print(f"{a:5g} {E:8.3f} {s11:10.6f} {s12:10.6f} {a ** -0.5:8.4f} {t22:10.6f}")


if __name__ == "__main__":
    main()
