"""
CLI interface for advpose.

This module provides the command-line interface, parsing arguments,
resolving the experiment config and dispatching to the command handlers.
"""

import argparse
import logging
import os
import sys

from advpose import __description__, __version__
from advpose.errors import ConfigError
from advpose.experiment.ablation import cmd_ablate
from advpose.experiment.config import DEFAULT_CONFIG_FILE, create_default_config, load_config
from advpose.experiment.runner import (
    EXIT_CONFIG, EXIT_IO, cmd_eval, cmd_gen_data, cmd_gradcheck, cmd_pretrain, cmd_report, cmd_train_adv,
)
from advpose.models.variants import VARIANTS
from advpose.utils.colors import error, info

logger = logging.getLogger(__name__)

def configure_logging(verbose=False, debug=False):
    """
    Configure logging based on verbosity level.

    Args:
        verbose: Boolean indicating if verbose output is enabled
        debug: Boolean indicating if debug output is enabled
    """
    if debug:
        # Debug mode - maximum verbosity
        logging.basicConfig(
            level=logging.DEBUG,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        logging.debug("Debug logging enabled")
    elif verbose:
        logging.basicConfig(
            level=logging.INFO,
            format='%(name)s - %(levelname)s - %(message)s'
        )
        logging.info("Verbose logging enabled")
    else:
        logging.basicConfig(
            level=logging.WARNING,
            format='%(levelname)s - %(message)s'
        )


def build_parser():
    """Argument parser for every advpose verb."""
    parser = argparse.ArgumentParser(prog="advpose", description=__description__)
    parser.add_argument('--version', action='version', version=f'advpose {__version__}')
    parser.add_argument('--verbose', '-v', action='store_true',
                        help='Enable verbose output with progress bars')
    parser.add_argument('--debug', action='store_true',
                        help='Enable debug mode with maximum logging for troubleshooting')
    parser.add_argument('--config', metavar='PATH',
                        help=f'Experiment config file (default: ./{DEFAULT_CONFIG_FILE} if present)')
    parser.add_argument('--seed', type=int, metavar='N', help='Run a single seed instead of the configured list')
    parser.add_argument('--variant', metavar='NAME',
                        help=f'Model variant ({", ".join(VARIANTS)})')
    parser.add_argument('--out', metavar='DIR', help='Report directory override')

    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    init_parser = subparsers.add_parser("init", help="Write a default config file")
    init_parser.add_argument("path", nargs="?", default=DEFAULT_CONFIG_FILE, help="Where to write the config")

    subparsers.add_parser("gen-data", help="Generate the lab, wild and transfer datasets")

    pretrain_parser = subparsers.add_parser("pretrain", help="Pretrain the generator")
    pretrain_parser.add_argument("--resume", action="store_true", help="Continue from the last checkpoint")

    adv_parser = subparsers.add_parser("train-adv", help="Adversarially train a variant")
    adv_parser.add_argument("--resume", action="store_true", help="Continue from the last checkpoint")

    eval_parser = subparsers.add_parser("eval", help="Evaluate a checkpoint")
    eval_parser.add_argument("--checkpoint", metavar="PATH", help="Checkpoint to evaluate (default: the variant's)")
    eval_parser.add_argument("--dataset", metavar="PATH", help="Dataset file (default: every test split)")

    subparsers.add_parser("ablate", help="Run the variant-by-seed ablation matrix")
    subparsers.add_parser("gradcheck", help="Gradient self-test of every architecture")
    subparsers.add_parser("report", help="Collect reports into summary.csv")
    return parser


def resolve_config(args):
    """
    Load the config named by --config (or the default file) and apply overrides.

    Raises:
        FileNotFoundError: If --config names a missing file
        ConfigError: If the config or an override is invalid
    """
    path = args.config
    if path is None and os.path.exists(DEFAULT_CONFIG_FILE):
        path = DEFAULT_CONFIG_FILE
    config = load_config(path)
    if path:
        logger.info("Using config %s", path)
    return config.with_overrides(seed=args.seed, variant=args.variant, out=args.out)


def main(argv=None):
    """
    Main entry point for the advpose command.

    Returns:
        int: Exit code (0 success, 1 usage/config, 2 I/O, 3 missing artifact)
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    configure_logging(verbose=args.verbose, debug=args.debug)

    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    if args.command == "init":
        return handle_init_command(args.path)
    if args.command == "gradcheck":
        return cmd_gradcheck()

    try:
        config = resolve_config(args)
    except FileNotFoundError as e:
        print(error(str(e)))
        return EXIT_CONFIG
    except ConfigError as e:
        print(error(f"Invalid configuration: {e}"))
        return EXIT_CONFIG
    except OSError as e:
        print(error(f"Could not read config: {e}"))
        return EXIT_IO

    progress = args.verbose or args.debug
    if args.command == "gen-data":
        return cmd_gen_data(config)
    elif args.command == "pretrain":
        return cmd_pretrain(config, resume=args.resume, show_progress=progress)
    elif args.command == "train-adv":
        return cmd_train_adv(config, resume=args.resume, show_progress=progress)
    elif args.command == "eval":
        return cmd_eval(config, checkpoint=args.checkpoint, dataset=args.dataset)
    elif args.command == "ablate":
        return cmd_ablate(config, show_progress=progress)
    elif args.command == "report":
        return cmd_report(config)

    # Should never reach here due to argparse
    return EXIT_CONFIG


def handle_init_command(path):
    """
    Handle the init command.

    Returns:
        int: Exit code (0 for success, 1 if the file exists, 2 on write failure)
    """
    if os.path.exists(path):
        print(error(f"{path} already exists"))
        return EXIT_CONFIG
    if not create_default_config(path):
        return EXIT_IO
    print(info(f"Edit {path} and run 'advpose gen-data' next"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
