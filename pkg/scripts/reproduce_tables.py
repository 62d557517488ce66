#!/usr/bin/env python3
"""Rerun published iteration-count tables and print them next to the reference.

    python3 scripts/reproduce_tables.py table1 --n 4 8 --seeds 1 2 3 --jobs 4

Cells that are too large for a workstation (n=32 with m=16) are skipped unless
--all is given.
"""
import argparse
import csv
import io
import sys
from contextlib import redirect_stdout

from helmwave.cli import main as helmwave
from helmwave.reference import TABLES


def run(table, n, key, seeds, jobs):
    flag = "--ell" if table.hierarchical else "--m"
    argv = ["sweep", "--preset", table.name, "--n", str(n), flag, str(key),
            "--seeds", ",".join(map(str, seeds)), "--jobs", str(jobs)]
    buf = io.StringIO()
    with redirect_stdout(buf):
        helmwave(argv)
    return list(csv.DictReader(io.StringIO(buf.getvalue())))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("table", choices=sorted(TABLES))
    p.add_argument("--n", type=int, nargs="*", help="subset of n rows")
    p.add_argument("--keys", type=int, nargs="*", help="subset of m (or ell) columns")
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--all", action="store_true", help="include cells with more than 2^18 elements")
    args = p.parse_args()

    table = TABLES[args.table]
    label = "ell" if table.hierarchical else "m"
    print(f"{table.name}: {table.problem}" + (f", c0={table.c0:g}, {table.nlayers} layers" if table.problem == "layered" else ""))
    for (n, key), (ncs, published) in sorted(table.cells.items()):
        if args.n and n not in args.n or args.keys and key not in args.keys:
            continue
        side = n * (2**key if table.hierarchical else key)
        if side * side > 2**18 and not args.all:
            print(f"n={n:3d} {label}={key:2d}  skipped ({side}x{side} mesh; use --all)")
            continue
        rows = run(table, n, key, args.seeds, args.jobs)
        got = [int(float(r["iterations"])) if r["iterations"] else None for r in rows]
        print(f"n={n:3d} {label}={key:2d}  n_c={ncs}  ours={tuple(got)}  published={published}")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
