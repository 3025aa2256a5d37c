"""Command-line interface: run, curve, build-lut, dump-constellation, validate."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import metrics
from .config import MODES, ConfigError, LinkConfig, apply_mode, load_config, preset_for_target
from .modem import Constellation, dump_constellation_rows
from .shaping import AmplitudeAlphabet, build_codebook, lut_size_bits

log = logging.getLogger("satnl")

RUN_COLUMNS = (
    "mode", "launch_power_dbm", "loss_db", "snr_db_analytic", "snr_db_empirical",
    "gmi_bits_per_2d", "M", "shaped", "kappa", "bandwidth_hz", "n_symbols", "seed",
    "diag_oob_launch", "diag_oob_tx_nlpr", "diag_ssfm_steps",
)
CURVE_COLUMNS = (
    "mode", "power_dbm", "target_gmi", "acceptable_loss_db", "gmi_at_solution", "seed", "runtime_s",
)
LUT_COLUMNS = ("index", "a1", "a2", "a3", "a4", "energy")
CONSTELLATION_COLUMNS = ("index", "label", "i", "q", "i_grid", "q_grid", "norm_energy")


def fmt(value) -> str:
    """Stable text form for CSV cells."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6f}" if abs(value) >= 1e-3 or value == 0 else f"{value:.6e}"
    return str(value)


def write_csv(rows, columns, out: str | None) -> None:
    """Write rows to ``out`` (appending, header once) or to stdout."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])
    body = buf.getvalue()
    header = ",".join(columns) + "\n"
    if out is None or out == "-":
        sys.stdout.write(header + body)
        return
    path = Path(out)
    if path.exists() and path.stat().st_size > 0:
        with path.open() as fh:
            existing = fh.readline()
        if existing != header:
            raise ConfigError(f"{path}: existing header does not match {header.strip()!r}")
        with path.open("a") as fh:
            fh.write(body)
    else:
        path.write_text(header + body)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.mode != "custom":
        cfg = apply_mode(cfg, args.mode)
    seed = args.seed if args.seed is not None else metrics.cell_seed(cfg.sim.base_seed, args.power_dbm)
    res = metrics.run_point(cfg, args.power_dbm, args.loss_db, seed, args.mode)
    write_csv([res.as_row()], RUN_COLUMNS, args.out)
    return 0


def _curve_cell(cfg: LinkConfig, mode: str, power: float, target: float, tol: float, timing: bool) -> dict:
    start = time.perf_counter()
    seed = metrics.cell_seed(cfg.sim.base_seed, power)
    res = metrics.acceptable_loss(apply_mode(cfg, mode), power, target, tol, seed)
    return {
        "mode": mode,
        "power_dbm": float(power),
        "target_gmi": float(target),
        "acceptable_loss_db": res.loss_db if res.feasible else "infeasible",
        "gmi_at_solution": res.gmi_at_solution,
        "seed": seed,
        "runtime_s": round(time.perf_counter() - start, 3) if timing else "",
    }


def curve_rows(cfg, modes, powers, target, tol=0.1, jobs=1, timing=False) -> list[dict]:
    """Acceptable-loss rows for every (mode, power), sorted by mode order then power."""
    cells = [(m, p) for m in modes for p in sorted(powers)]
    if jobs <= 1:
        rows = [_curve_cell(cfg, m, p, target, tol, timing) for m, p in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_curve_cell, cfg, m, p, target, tol, timing) for m, p in cells]
            rows = [f.result() for f in futures]
    return rows


def cmd_curve(args) -> int:
    cfg = preset_for_target(load_config(args.config), args.target_gmi)
    modes = args.modes.split(",")
    for m in modes:
        if m not in MODES:
            raise ConfigError(f"--modes: unknown mode {m!r}; choose from {', '.join(MODES)}")
    powers = [float(p) for p in args.powers.split(",")]
    rows = curve_rows(cfg, modes, powers, args.target_gmi, args.tol_db, args.jobs, args.record_runtime)
    write_csv(rows, CURVE_COLUMNS, args.out)
    return 0


def cmd_build_lut(args) -> int:
    cb = build_codebook(AmplitudeAlphabet.for_qam(args.M), args.N, args.k)
    tx, rx = lut_size_bits(cb)
    log.info("LUT sizes: TX %d bits, RX %d bits", tx, rx)
    rows = []
    for i, (block, e) in enumerate(zip(cb.entries.tolist(), cb.energies.tolist())):
        row = {"index": i, "energy": e}
        row.update({f"a{j + 1}": a for j, a in enumerate(block)})
        rows.append(row)
    cols = ("index",) + tuple(f"a{j + 1}" for j in range(args.N)) + ("energy",)
    write_csv(rows, cols, args.out)
    return 0


def cmd_dump_constellation(args) -> int:
    c = Constellation(args.M)
    rows = [
        dict(zip(CONSTELLATION_COLUMNS, r + (c.uniform_energy,)))
        for r in dump_constellation_rows(c)
    ]
    write_csv(rows, CONSTELLATION_COLUMNS, args.out)
    return 0


def cmd_validate(args) -> int:
    from .validation import run_all

    failed = 0
    for check in run_all():
        print(f"{'PASS' if check.ok else 'FAIL'}  {check.name}: {check.detail}")
        failed += not check.ok
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="satnl", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one (power, loss) point")
    p.add_argument("config")
    p.add_argument("--power-dbm", type=float, required=True)
    p.add_argument("--loss-db", type=float, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", default="custom", choices=("custom",) + MODES)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("curve", help="acceptable link loss versus launch power")
    p.add_argument("config")
    p.add_argument("--powers", required=True, help="comma-separated launch powers in dBm")
    p.add_argument("--target-gmi", type=float, choices=(3.0, 5.0), required=True)
    p.add_argument("--modes", default="uniform,shaped,shaped_tx_nlpr,shaped_split_nlpr,ideal")
    p.add_argument("--tol-db", type=float, default=0.1)
    p.add_argument("--jobs", type=int, default=int(os.environ.get("SATNL_JOBS", "1")))
    p.add_argument("--record-runtime", action="store_true", help="fill runtime_s (breaks byte-identical reruns)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("build-lut", help="dump the sphere-shaping codebook")
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--N", type=int, default=4)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_lut)

    p = sub.add_parser("dump-constellation", help="dump labeled QAM points")
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dump_constellation)

    p = sub.add_parser("validate", help="run the analytic self-checks")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"satnl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
