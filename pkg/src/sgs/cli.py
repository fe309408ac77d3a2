"""Command-line runner: ``sgs <experiment> --config <path> [--out <dir>] [--seed <u64>] [--jobs <n>]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .experiments import (
    EXPERIMENTS,
    ConfigError,
    format_value,
    list_experiments,
    load_config,
    run_experiment,
)

log = logging.getLogger("sgs")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


def _setup_logging():
    level = os.environ.get("SGS_LOG", "error").strip().lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        level = "error"
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row[c]) for c in columns])
    return buf.getvalue()


def write_artifacts(cfg, columns, rows, out_dir: Path) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{cfg.experiment}.csv"
    meta_path = out_dir / f"{cfg.experiment}.meta.json"
    csv_path.write_text(render_csv(columns, rows), encoding="utf-8")
    meta = {
        "experiment": cfg.experiment,
        "config_sha256": cfg.digest,
        "seed": cfg.seed,
        "seeds": cfg.seeds,
        "version": __version__,
        "sampling": cfg.sampling.describe(),
        "reconstruction": cfg.reconstruction.describe(),
        "columns": list(columns),
        "rows": len(rows),
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, meta_path


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sgs", description="Generalized sampling and compressed sensing experiments.")
    p.add_argument("experiment", help="experiment name, or 'list' for the catalogue")
    p.add_argument("--config", type=Path, help="INI configuration file")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    p.add_argument("--seed", type=_u64, default=None, help="base seed, overrides [run] seed")
    p.add_argument("--jobs", type=_positive, default=1, help="worker processes for seed ensembles")
    p.add_argument("--version", action="version", version=f"sgs {__version__}")
    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.experiment == "list":
        print(list_experiments())
        return EXIT_OK
    if args.experiment not in EXPERIMENTS:
        print(f"sgs: unknown experiment {args.experiment!r}; run `sgs list`", file=sys.stderr)
        return EXIT_USAGE
    if args.config is None:
        print("sgs: --config is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"sgs: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(text, args.experiment, args.seed, args.jobs)
    except ConfigError as exc:
        print(f"sgs: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        columns, rows = run_experiment(cfg)
        csv_path, _ = write_artifacts(cfg, columns, rows, args.out)
    except Exception as exc:  # module errors surface with context, not a traceback
        log.debug("experiment failed", exc_info=True)
        print(f"sgs: {cfg.experiment} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    log.info("wrote %s", csv_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
