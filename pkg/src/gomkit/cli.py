"""Command-line entry point: ``gomkit <stage> [--config PATH] [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import GomkitError
from .pipeline import STAGES, RunConfig, run_pipeline

EXIT_ERROR = 2
EXIT_PARTIAL = 3


def _parser():
    p = argparse.ArgumentParser(prog="gomkit", description=__doc__)
    p.add_argument("stage", choices=(*STAGES, "all", "fetch", "synth"))
    p.add_argument("--config", help="RunConfig file (JSON or YAML)")
    p.add_argument("--dataset", help="dataset name, e.g. APA or TVA")
    p.add_argument("--gesture", action="append", help="restrict to a gesture class (repeatable)")
    p.add_argument("--sensors", help="comma-separated sensor labels")
    p.add_argument("--out", help="output directory")
    p.add_argument("--data", help="directory holding the dataset's BVH files")
    p.add_argument("--cache", help="download cache (default: $GOMKIT_CACHE or ~/.cache/gomkit)")
    p.add_argument("--seed", type=int, help="random seed (synth / cross-validation)")
    p.add_argument("--noise", type=float, default=0.0, help="synth: white-noise sd in degrees")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.dataset:
        cfg.dataset = args.dataset
    if args.gesture:
        cfg.gestures = tuple(args.gesture)
    if args.sensors:
        cfg.sensors = tuple(s.strip() for s in args.sensors.split(",") if s.strip())
    if args.out:
        cfg.out_dir = args.out
    if args.data:
        cfg.data_dir = args.data
    if args.seed is not None:
        cfg.hmm.seed = args.seed
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.stage == "fetch":
            from .datasets import fetch, load_manifest
            tree = fetch(load_manifest(cfg.dataset), args.cache)
            print(tree)
            return 0
        if args.stage == "synth":
            from .synth import write_dataset
            files = write_dataset(cfg.data_dir or cfg.out_dir, cfg.dataset,
                                  seed=args.seed or 0, noise=args.noise)
            print(json.dumps({k: len(v) for k, v in files.items()}))
            return 0
        result = run_pipeline(cfg, args.stage)
    except GomkitError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(result, indent=2, sort_keys=True, default=str))
    stages = result.values() if args.stage == "all" else [result]
    failures = [s.get("errors") for s in stages if isinstance(s, dict) and s.get("errors")]
    if failures:
        for f in failures:
            for k, v in f.items():
                print(f"{k}: {v}", file=sys.stderr)
        return EXIT_PARTIAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
