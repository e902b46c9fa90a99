"""Batch front end: `cast-sim simulate|bound|latency --config FILE --out DIR`."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import replace
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from . import config as cfgmod
from .latency import latency_table
from .montecarlo import CSV_COLUMNS, cells_to_csv, run_sweep

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
MANIFEST_VERSION = 1


def _tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def _write_outputs(out_dir: Path, name: str, text: str, cfg_tree: dict, seed, started: float) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    csv_path.write_text(text)
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "tool_version": _tool_version(),
        "seed": seed,
        "config": cfg_tree,
        "wall_clock_s": round(time.time() - started, 3),
        "outputs": [{"file": csv_path.name, "sha256": hashlib.sha256(text.encode()).hexdigest()}],
    }
    (out_dir / f"{name}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return csv_path


def _experiment(args):
    tree = cfgmod.load_tree(cfgmod.resolve_path(args.config))
    return cfgmod.experiment_from_tree(tree, seed=args.seed, trials=args.trials)


def cmd_simulate(args) -> int:
    started = time.time()
    cfg = _experiment(args)
    cells = run_sweep(cfg, threads=args.threads)
    path = _write_outputs(Path(args.out), cfg.experiment_id, cells_to_csv(cells),
                          cfgmod.snapshot(cfg), cfg.seed, started)
    ok = sum(1 for c in cells if not math.isnan(c.success_rate))
    print(f"{cfg.experiment_id}: {ok} cells x {cfg.trials} trials -> {path}")
    return EXIT_OK


def cmd_bound(args) -> int:
    started = time.time()
    cfg = _experiment(args)
    cfg = replace(cfg, attach_bound=True, selection_rule=("channel_aware",))
    cells = run_sweep(cfg, threads=args.threads)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS + ("bound_valid",))
    body = list(csv.reader(io.StringIO(cells_to_csv(cells))))[1:]
    for row, c in zip(body, cells):
        # bound holds when empirical success is not below it by more than the combined 95% CI
        slack = 1.96 * math.hypot(c.success_se, c.bound_se)
        w.writerow(row + [str(int(c.success_rate >= c.bound_lower - slack))])
    path = _write_outputs(Path(args.out), cfg.experiment_id, buf.getvalue(),
                          cfgmod.snapshot(cfg), cfg.seed, started)
    print(f"{cfg.experiment_id}: bound over {len(cells)} cells -> {path}")
    return EXIT_OK


def cmd_latency(args) -> int:
    started = time.time()
    tree = cfgmod.load_tree(cfgmod.resolve_path(args.config))
    unknown = set(tree) - {"experiment_id", "description", "n", "latency"}
    if unknown:
        raise cfgmod.ConfigError(f"unknown field(s) {sorted(unknown)}")
    cal, extra = cfgmod.latency_section(tree)
    patterns = extra.get("patterns") or [extra.get("pattern", "DSUDDDDDDD")]
    ms = extra.get("m", 256)
    ms = ms if isinstance(ms, list) else [ms]
    n = tree.get("n", 1024)
    try:
        rows = [r for m in ms for r in latency_table(patterns, int(m), cal, n)]
    except ValueError as e:
        raise cfgmod.ConfigError(f"latency: {e}") from None
    buf = io.StringIO()
    cols = ("pattern", "dl_ul", "m", "conventional_ms", "minislot_ms", "cast_ms")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols])
    name = tree.get("experiment_id", "latency")
    path = _write_outputs(Path(args.out), name, buf.getvalue(), tree, None, started)
    print(f"{name}: {len(rows)} rows -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cast-sim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("simulate", cmd_simulate), ("bound", cmd_bound), ("latency", cmd_latency)):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="config file, or a bundled name such as fig6")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed (u64)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker processes (falls back to CAST_SIM_THREADS, then 1)")
        sp.add_argument("--trials", type=int, default=None, help="override trials per cell")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except cfgmod.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # any failure past config validation is a runtime error
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
