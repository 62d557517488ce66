#!/usr/bin/env python3
"""Dump the 1D hierarchical coarse basis (two bisection levels) and check one-step exactness."""
import argparse

from helmwave.cli import main as helmwave


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--bisections", type=int, default=2)
    p.add_argument("-o", "--output", default="oned_basis.csv")
    args = p.parse_args()
    argv = ["oned", "--n", str(args.n), "--bisections", str(args.bisections), "-o", args.output]
    if args.k is not None:
        argv += ["--k", str(args.k)]
    raise SystemExit(helmwave(argv))


if __name__ == "__main__":
    main()
