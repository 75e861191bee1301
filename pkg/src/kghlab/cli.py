"""Command-line entry point: ``kghlab --config run.ini --out results``."""
from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, ConfigError, parse_config, validate
from .experiments import EXIT_CONFIG, run


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kghlab", description="Klein-Gordon-Hartree simulator and diagnostics.")
    p.add_argument("--config", metavar="PATH", help="INI configuration file (defaults are used if omitted)")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides experiment.output)")
    p.add_argument("--seed", type=int, help="random seed (overrides experiment.seed)")
    p.add_argument("--experiment", choices=EXPERIMENTS, help="experiment to run (overrides experiment.name)")
    p.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = ""
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        cfg = parse_config(text)
        if args.seed is not None:
            cfg.experiment.seed = args.seed
        if args.experiment:
            cfg.experiment.name = args.experiment
        validate(cfg)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, args.out, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
