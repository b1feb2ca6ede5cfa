"""Command-line entry point.

    freightej build-inventory --config run.yaml [--out DIR] [--workers N]
    freightej damages | sr-ledger | ej-regress | modal-shift | all  (same flags)
    freightej make-demo DIR

Exit status: 0 success, 1 config or input error, 2 numerical or
consistency failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from freightej import __version__
from freightej.errors import FreightEJError

# stage name -> Run method; "all" runs them in this order
STAGES = {
    "build-inventory": "build_inventory",
    "damages": "damages",
    "sr-ledger": "sr_ledger",
    "ej-regress": "ej_regress",
    "modal-shift": "modal_shift",
}


def _parser():
    p = argparse.ArgumentParser(prog="freightej", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in (*STAGES, "all"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="run configuration (YAML)")
        sp.add_argument("--out", help="output directory (overrides output_dir in the config)")
        sp.add_argument("--workers", type=int, help="worker threads (default: config or 1)")
    demo = sub.add_parser("make-demo", help="write the demo fixture and its config")
    demo.add_argument("dir")
    demo.add_argument("--scale", type=int, default=1,
                      help="multiply link and shipment counts (benchmarking)")
    return p


def _run(args) -> int:
    from freightej.config import load_config
    from freightej.errors import ConfigError
    from freightej.pipeline import Run

    stage = "config"
    cfg = load_config(args.config)
    out = args.out or cfg.output_dir
    if out is None:
        raise ConfigError("no output directory: pass --out or set output_dir")
    run = Run(cfg, out, args.workers)
    names = list(STAGES) if args.command == "all" else [args.command]
    try:
        for stage in names:
            getattr(run, STAGES[stage])()
    except FreightEJError as exc:
        exc.stage = stage
        raise
    run.write_manifest(args.command)
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "make-demo":
            from freightej.demo import write_demo
            cfg = write_demo(args.dir, scale=args.scale)
            print(f"demo fixture written; run: freightej all --config {cfg}")
            return 0
        return _run(args)
    except FreightEJError as exc:
        stage = getattr(exc, "stage", "config")
        print(f"freightej: {stage}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
