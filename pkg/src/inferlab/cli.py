"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .experiments import (ConfigError, rebuild_report, run_attr_experiment, run_inversion_experiment, train_only,
                          validate_config)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
VERBS = ("train", "attack-attr", "attack-inv", "report", "validate")


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--seed", type=_u64, help="master seed (overrides config)")
    common.add_argument("--threads", type=_positive, default=1, help="grid cells run concurrently")
    parser = argparse.ArgumentParser(prog="inferlab", parents=[common],
                                     description="Privacy attacks and defenses for split and black-box models.")
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("train", parents=[common], help="train the configured model and write a checkpoint")
    sub.add_parser("attack-attr", parents=[common], help="run the attribute-inference sweep")
    sub.add_parser("attack-inv", parents=[common], help="run the model-inversion sweep")
    sub.add_parser("report", parents=[common], help="rebuild aggregates and plots from existing CSVs")
    sub.add_parser("validate", parents=[common], help="check a config and print it with defaults filled")
    return parser


def _load(args, expect_kind=None):
    if not args.config:
        raise ConfigError([("", "--config is required")])
    cfg = validate_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out:
        cfg["output_dir"] = args.out
    if expect_kind and cfg["kind"] != expect_kind:
        raise ConfigError([("/kind", f"this verb needs kind {expect_kind!r}, config has {cfg['kind']!r}")])
    return cfg


def run(args):
    if args.verb == "validate":
        print(json.dumps(_load(args), indent=2, sort_keys=True))
    elif args.verb == "train":
        path, acc = train_only(_load(args))
        print(f"wrote {path} (test accuracy {acc:.4f})")
    elif args.verb == "attack-attr":
        cfg = _load(args, "attr-attack")
        rows = run_attr_experiment(cfg, threads=args.threads)
        print(f"wrote {len(rows)} rows to {os.path.join(cfg['output_dir'], 'attr_report.csv')}")
    elif args.verb == "attack-inv":
        cfg = _load(args, "inversion-attack")
        rows = run_inversion_experiment(cfg, threads=args.threads)
        print(f"wrote {len(rows)} rows to {os.path.join(cfg['output_dir'], 'inv_report.csv')}")
    elif args.verb == "report":
        out = args.out or (_load(args)["output_dir"] if args.config else None)
        if out is None:
            raise ConfigError([("", "report needs --out or --config")])
        for name in rebuild_report(out):
            print(f"wrote {os.path.join(out, name)}")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        run(args)
    except ConfigError as e:
        for ptr, msg in e.errors:
            print(f"config error at {ptr or '/'}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - every other failure maps to one exit code
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
