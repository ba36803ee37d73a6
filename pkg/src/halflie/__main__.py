"""Command line: ``python -m halflie run <config>`` and ``python -m halflie list``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, HalfLieError
from .harness import catalog, load_config, run


def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="halflie", description="Run reproducible half-Lie group experiments.")
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment from an INI config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (default: $HALFLIE_OUT or .)")
    p_run.add_argument("--seed", type=_seed, help="override the config seed")
    p_run.add_argument("--verbose", "-v", action="store_true", dest="verbose_run")
    p_list = sub.add_parser("list", help="print the experiment catalog")
    p_list.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args(argv)

    verbose = args.verbose or getattr(args, "verbose_run", False)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)

    if args.command == "list":
        entries = catalog()
        if args.json:
            print(json.dumps(entries, indent=2))
        else:
            width = max(len(e["name"]) for e in entries)
            for e in entries:
                print(f"{e['name']:<{width}}  {e['description']}  [{e['anchor']}]")
        return 0

    try:
        cfg = load_config(args.config, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        status, checks = run(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HalfLieError as exc:
        print(f"{cfg.name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    failed = [name for name, ok in checks if not ok]
    if failed:
        print(f"{cfg.name}: FAILED {', '.join(failed)}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
