#!/usr/bin/env python3
"""Full acceptable-loss sweep (30-50 dBm, all modes) and a gain summary.

    python scripts/sweep_acceptable_loss.py --target 5 --jobs 4 --out results/curve_t5.csv
"""

import argparse
import math
import os
from pathlib import Path

from satnl.cli import CURVE_COLUMNS, curve_rows, write_csv
from satnl.config import load_config, preset_for_target

ROOT = Path(__file__).resolve().parents[1]
MODES = ("uniform", "shaped", "shaped_tx_nlpr", "shaped_split_nlpr", "ideal", "linear")


def peak(rows, mode):
    vals = [r["acceptable_loss_db"] for r in rows if r["mode"] == mode]
    vals = [v for v in vals if v != "infeasible"]
    return max(vals) if vals else -math.inf


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default=str(ROOT / "configs" / "uplink_default.toml"))
    ap.add_argument("--target", type=float, default=5.0, choices=(3.0, 5.0))
    ap.add_argument("--powers", default=",".join(str(p) for p in range(30, 51)))
    ap.add_argument("--jobs", type=int, default=int(os.environ.get("SATNL_JOBS", os.cpu_count() or 1)))
    ap.add_argument("--out", default=str(ROOT / "results" / "curve.csv"))
    args = ap.parse_args()

    cfg = preset_for_target(load_config(args.config), args.target)
    powers = [float(p) for p in args.powers.split(",")]
    rows = curve_rows(cfg, MODES, powers, args.target, jobs=args.jobs, timing=True)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.exists():
        out.unlink()
    write_csv(rows, CURVE_COLUMNS, str(out))

    best = {m: peak(rows, m) for m in MODES}
    for m in MODES:
        print(f"{m:>18}: peak acceptable loss {best[m]:.2f} dB")
    print(f"shaping gain       {best['shaped'] - best['uniform']:+.2f} dB")
    print(f"TX-NLPR extra gain {best['shaped_tx_nlpr'] - best['shaped']:+.2f} dB")
    print(f"split over uniform {best['shaped_split_nlpr'] - best['uniform']:+.2f} dB")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
