"""
Provides a command line interface for ctxlab.

Usage:

```shell
python cli.py verify [--filter theorem1,chain]
python cli.py train-lm --config runs/copy.json --seed 0 --out runs/copy
python cli.py cache-basis --out runs/copy
python cli.py eval-extrapolate --out runs/copy --set EVAL_LENGTHS=[64,128,256]
python cli.py gen-prefs --out runs/facts
python cli.py train-longpo --out runs/facts --canonical-output
python cli.py trends --out runs/trends
```

"""
import argparse
import logging
import sys
from argparse import RawTextHelpFormatter

from dotenv import load_dotenv

from ctxlab.config import Config
from ctxlab.errors import ConfigError, CtxLabError
from ctxlab.harness import COMMANDS, cmd_trends, cmd_verify
from ctxlab.utils import setup_run_logging

# =============================================================================
# CLI
# =============================================================================

cli = argparse.ArgumentParser(
    description="Long-context adaptation lab: ODE frequency scaling and short-to-long preference optimization.",
    # Enables the use of newlines in the help message
    formatter_class=RawTextHelpFormatter)

# =====================================
# Arg: Subcommand
# =====================================

subcommand_descriptions = {
    "verify": "Run the property suites; nonzero exit if any fails",
    "train-lm": "Train the tiny LM (and the ODE dynamics) on short sequences",
    "cache-basis": "Precompute scaled frequency bases at the cache grid",
    "eval-extrapolate": "Perplexity at each EVAL_LENGTHS entry",
    "gen-prefs": "Generate short-to-long preference data",
    "train-longpo": "Preference-optimize a copy of the checkpoint on the dataset",
    "trends": "Train end to end and check the extrapolation and reward-margin trends (slow)",
}

cli.add_argument(
    # Position 0 argument
    "command",
    type=str,
    help="The subcommand to run. Options:\n" + "\n".join(
        f"  {name}: {desc}" for name, desc in subcommand_descriptions.items()
    ),
    choices=list(subcommand_descriptions))

# =====================================
# Arg: Config
# =====================================

cli.add_argument(
    "--config",
    type=str,
    help="JSON or KEY=value configuration file merged over the defaults.",
    default=None)

cli.add_argument(
    "--set",
    type=str,
    action="append",
    metavar="KEY=VALUE",
    help="Override one configuration key (repeatable).",
    default=[])

# =====================================
# Arg: Run
# =====================================

cli.add_argument(
    "--seed",
    type=int,
    help="Root seed for every named random stream.",
    default=None)

cli.add_argument(
    "--out",
    type=str,
    help="Output directory for metrics, checkpoints, caches and datasets.",
    default=None)

cli.add_argument(
    "--filter",
    type=str,
    help="Comma-separated suite names for `verify`, or trend names for `trends`.",
    default=None)

cli.add_argument(
    "--canonical-output",
    action="store_true",
    help="Leave wall-clock fields out of metrics so repeated runs are byte-identical.")

cli.add_argument(
    "--log-level",
    type=str,
    choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    default=None)

# =============================================================================
# Main
# =============================================================================


def parse_overrides(args) -> dict:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got '{item}'")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["SEED"] = args.seed
    if args.out is not None:
        overrides["OUT_DIR"] = args.out
    if args.canonical_output:
        overrides["CANONICAL_OUTPUT"] = True
    if args.log_level is not None:
        overrides["LOG_LEVEL"] = args.log_level
    return overrides


def main(argv=None) -> int:
    """
    Resolve the configuration, set up run logging under the output
    directory and dispatch to the subcommand.
    """
    load_dotenv()
    args = cli.parse_args(argv)
    try:
        config = Config(args.config, parse_overrides(args))
        setup_run_logging(config.out_path, getattr(logging, config.log_level.upper(), logging.INFO))
        if args.command == "verify":
            return cmd_verify(config, args.filter)
        if args.command == "trends":
            return cmd_trends(config, args.filter)
        return COMMANDS[args.command](config)
    except CtxLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
