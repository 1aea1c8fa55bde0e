"""Command-line entry point: ``hdpareto <subcommand> --config cfg.json --out dir``.

Exit codes: 0 success, 1 invalid config or input, 2 runtime failure.
``HDPARETO_THREADS`` sets the number of worker processes for repeats; BLAS
inside each worker is pinned to one thread so results do not depend on it.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

RUNNERS = {
    "synth-sweep": "run_synth_sweep",
    "front-compare": "run_front_compare",
    "fairness-run": "run_fairness",
    "adversarial-contrast": "run_adversarial_contrast",
    "hv-report": "run_hv_report",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdpareto", description="Pareto-set estimation experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress and solver warnings")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="strict JSON config file")
        p.add_argument("--out", default=None, help="output directory (overrides output_dir in the config)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")

    from . import experiments
    from .config import ConfigError, ExperimentKind, load_config, resolved
    from .dataio import InsufficientRows, MissingColumn, UnparsableCell
    from .outputs import emit_outputs

    try:
        cfg = load_config(args.config, ExperimentKind(args.command))
        out_dir = args.out or cfg.output_dir
        if not out_dir:
            raise ConfigError("no output directory: pass --out or set output_dir")
        experiments.worker_count()
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        result = getattr(experiments, RUNNERS[args.command])(cfg)
    except (MissingColumn, UnparsableCell, InsufficientRows) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - reported, mapped to the runtime exit code
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    try:
        paths = emit_outputs(result, resolved(cfg), out_dir)
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {paths['results.csv']} ({len(result.rows)} rows)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
