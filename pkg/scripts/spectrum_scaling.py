#!/usr/bin/env python3
"""Singular values of one 2x2 subdomain's interface map for k = 16, 32, 64 (k h = 1).

Writes spectrum_k<k>.csv files and prints the number of values above a threshold.
"""
import argparse
import csv
from pathlib import Path

from helmwave.cli import main as helmwave


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[8, 16, 32], help="elements per subdomain side (k = 2n)")
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--subdomain", type=int, default=1)
    p.add_argument("--outdir", default="results")
    args = p.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    prev = None
    for n in args.n:
        path = out / f"spectrum_k{2 * n}.csv"
        helmwave(["spectrum", "--levels", "2x2", "--n", str(n), "--subdomain", str(args.subdomain), "-o", str(path)])
        with open(path, newline="", encoding="utf-8") as fh:
            sig = [float(r["sigma"]) for r in csv.DictReader(fh)]
        count = sum(s > args.threshold for s in sig)
        ratio = f"  ratio {count / prev:.2f}" if prev else ""
        print(f"k={2 * n:4d}  {len(sig):4d} values  sigma_max={sig[0]:.3f}  #>{args.threshold:g}: {count}{ratio}")
        prev = count


if __name__ == "__main__":
    main()
