#!/usr/bin/env python3
"""Plot trace CSVs produced by `adp run`.

Usage: plot_trace.py TRACE.csv [TRACE.csv ...] [--out FILE.png] [--column NAME]

Reads the fixed trace schema and plots the chosen column (default err_policy)
against k, together with bound_total_k when it is finite. Needs matplotlib;
without it, prints a per-file summary instead.
"""

import argparse
import csv
import math
import sys


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SystemExit(f"{path}: empty trace")
    return rows


def series(rows, column):
    ks, values = [], []
    for row in rows:
        v = float(row[column])
        if math.isfinite(v):
            ks.append(int(row["k"]))
            values.append(v)
    return ks, values


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("traces", nargs="+")
    parser.add_argument("--out", default="trace.png")
    parser.add_argument("--column", default="err_policy")
    args = parser.parse_args()

    data = {path: load(path) for path in args.traces}

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        for path, rows in data.items():
            ks, values = series(rows, args.column)
            status = rows[-1]["status"]
            print(f"{path}: {len(rows)} rows, final {args.column} = {values[-1]:.6g}, "
                  f"status = {status}")
        print("matplotlib not available; printed summaries only", file=sys.stderr)
        return

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path, rows in data.items():
        ks, values = series(rows, args.column)
        (line,) = ax.plot(ks, values, label=f"{path} ({args.column})")
        bk, bounds = series(rows, "bound_total_k")
        if bounds:
            ax.plot(bk, bounds, linestyle="--", color=line.get_color(),
                    label=f"{path} (bound)")
    ax.set_xlabel("iteration k")
    ax.set_ylabel(args.column)
    ax.set_yscale("log")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
