"""Command line entry point: ``qedbounds <task> --config <path> [--out <path>] [--seed <u64>] [--threads <n>]``.

Exit status is 0 on success, 1 when any row or criterion failed numerically
(or, for ``accept``, when any criterion failed), 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import __version__
from .errors import ConfigurationError, QEDBoundsError
from .harness import (EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, TASKS, SweepConfig, exit_code, resolve_out, run,
                      run_fit, with_seed, write_csv)


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("thread count must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qedbounds", description="Self-energy bound sweeps and acceptance checks.")
    p.add_argument("task", choices=TASKS)
    p.add_argument("--config", required=True, help="JSON sweep configuration")
    p.add_argument("--out", help="output path (CSV, or JSON report for accept)")
    p.add_argument("--seed", type=_u64, help="master seed, overrides the config")
    p.add_argument("--threads", type=_positive, default=1)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _accept(cfg: SweepConfig, out) -> int:
    from .acceptance import AcceptanceContext, report_json, run_suite

    ctx = AcceptanceContext(cfg.constants_set(), cfg.seed)
    results = run_suite(ctx, cfg.options.get("criteria"), echo=print)
    path = resolve_out(cfg, out, "json")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_json(results) + "\n")
    failed = [r.criterion_id for r in results if not r.passed]
    if failed:
        print(f"failing criteria: {', '.join(map(str, failed))}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = with_seed(SweepConfig.from_json(args.config), args.seed)
        if cfg.task != args.task:
            cfg = replace(cfg, task=args.task)
        if cfg.task == "accept":
            return _accept(cfg, args.out)
        if cfg.task == "fit":
            fit, rows = run_fit(cfg)
            print(f"exponent {fit.exponent:.6g} +- {fit.stderr:.2g}  r^2 {fit.r_squared:.6f}  n {fit.n_points}")
        else:
            rows = run(cfg, threads=args.threads)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QEDBoundsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    write_csv(rows, resolve_out(cfg, args.out))
    return exit_code(rows)


if __name__ == "__main__":
    sys.exit(main())
