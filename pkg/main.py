"""Main entry point for the octmix toolkit."""

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from audit.run_log import run_log
from commands import augment, evaluate, gen_synth, inspect_filter, sweep, train
from config.run_config import load_run_config
from config.settings import settings
from modules.errors import ConfigError, OctmixError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2

COMMAND_RUNNERS: Dict[str, Callable] = {
    'gen-synth': gen_synth.run,
    'augment': augment.run,
    'train': train.run,
    'eval': evaluate.run,
    'sweep': sweep.run,
    'inspect-filter': inspect_filter.run,
}

COMMAND_HELP = {
    'gen-synth': "write a synthetic corpus (CSV recordings + manifest)",
    'augment': "apply an augmentation policy to a corpus and dump tensors",
    'train': "train a variant over independent trials and write reports",
    'eval': "evaluate a saved model directory on a corpus split",
    'sweep': "grid over alpha and the Octave Mix cutoff",
    'inspect-filter': "dump low-pass kernel taps and frequency response",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='octmix', description="Octave Mix augmentation and DAR-FFE training")
    subparsers = parser.add_subparsers(dest='command', required=True)
    for name, help_text in COMMAND_HELP.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument('--config', '-c', default=None, help="JSON run config (see configs/SCHEMA.md)")
        sub.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                         help="override a config value, e.g. train.pretrain_epochs=5")
        sub.add_argument('--verbose', '-v', action='store_true', help="debug logging")
    return parser


def configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.logging_level,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    is_valid, errors = settings.validate_required_settings()
    if not is_valid:
        for error in errors:
            logger.error(error)
        return EXIT_CONFIG_ERROR

    try:
        cfg = load_run_config(args.config, args.command, args.overrides)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG_ERROR

    try:
        run_log.open(cfg.output_dir)
        run_log.log_event('run_started', f"{args.command} started",
                          {'command': args.command, 'config': args.config,
                           'overrides': args.overrides, 'seed': cfg.seed})
        COMMAND_RUNNERS[args.command](cfg)
        exit_code = EXIT_OK
        run_log.log_event('run_finished', f"{args.command} finished", {'command': args.command})
    except ConfigError as e:
        logger.error(str(e))
        exit_code = EXIT_CONFIG_ERROR
        run_log.log_error(e, exit_code, args.command)
    except (OctmixError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        exit_code = EXIT_RUNTIME_ERROR
        run_log.log_error(e, exit_code, args.command)
    finally:
        run_log.close()
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
