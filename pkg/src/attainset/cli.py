"""Command-line interface.

Subcommands: toy-dim, lie-check, estimate-dim, local-spectrum,
train-stats, reachability. Common flags: --config PATH, --seed INT,
--out DIR, --full. Exit codes: 0 success, 2 configuration error,
3 numerical divergence.
"""

import argparse
import json
import sys

from .config import load_config, resolve_config
from .errors import ConfigError, DivergenceError
from .experiments import run_experiment, write_run

_SUBCOMMANDS = {
    "toy-dim": "toy_dim",
    "lie-check": "lie_check",
    "estimate-dim": "estimate_dim",
    "local-spectrum": "local_spectrum",
    "train-stats": "train_stats",
    "reachability": "reachability",
}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="attainset",
        description="Desk-scale studies of states attained by two-layer "
                    "neural feedback policies.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, experiment in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {experiment} experiment")
        p.add_argument("--config", help="JSON config file (merged over defaults)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--full", action="store_true",
                       help="paper-scale run where the experiment supports it")
        if name == "estimate-dim":
            p.add_argument("csv", nargs="?", help="point-cloud CSV, one point per row")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    experiment = _SUBCOMMANDS[args.command]
    try:
        file_doc = load_config(args.config) if args.config else None
        cfg = resolve_config(experiment, file_doc=file_doc, seed=args.seed,
                             output=args.out, full=args.full or None,
                             csv_path=getattr(args, "csv", None))
        table, extra, runtime = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE

    write_run(cfg["output"], cfg, table, extra=extra, runtime=runtime)
    if experiment == "estimate_dim":
        print(extra)
    else:
        print(table.to_csv_text(), end="")
        if table.metadata:
            print(json.dumps({"metadata": _plain(table.metadata)}, sort_keys=True))
    return EXIT_OK


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    return obj


if __name__ == "__main__":
    sys.exit(main())
