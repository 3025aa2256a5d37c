#!/usr/bin/env python3
"""Plot acceptable link loss versus launch power from a ``satnl curve`` CSV."""

import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "uniform": dict(color="tab:blue", marker="o"),
    "shaped": dict(color="tab:orange", marker="s"),
    "shaped_tx_nlpr": dict(color="tab:green", marker="^"),
    "shaped_split_nlpr": dict(color="tab:red", marker="v"),
    "ideal": dict(color="gray", linestyle="--"),
    "linear": dict(color="black", linestyle=":"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("--out", default="curve.png")
    args = ap.parse_args()

    curves = defaultdict(list)
    with open(args.csv, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["acceptable_loss_db"] != "infeasible":
                curves[row["mode"]].append((float(row["power_dbm"]), float(row["acceptable_loss_db"])))

    fig, ax = plt.subplots(figsize=(6, 4))
    for mode, pts in curves.items():
        pts.sort()
        ax.plot(*zip(*pts), label=mode, **STYLE.get(mode, {}))
    ax.set_xlabel("launch power [dBm]")
    ax.set_ylabel("acceptable link loss [dB]")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
