import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from gaussmac.api.commands import COMMANDS, write_output
from gaussmac.core.config import settings
from gaussmac.core.exceptions import ConfigError, GaussMacError
from gaussmac.core.logging_config import setup_logging
from gaussmac.schemas import RunConfig

logger = logging.getLogger("gaussmac")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaussmac",
        description=settings.APP_NAME,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    parser.add_argument("command", choices=sorted(COMMANDS), help="Computation to run")
    parser.add_argument("--config", required=True, help="JSON channel / run configuration")
    parser.add_argument("--out", help="Output file (rows are logged when omitted)")
    parser.add_argument("--format", choices=["csv", "json"], help="Output format (default csv)")
    parser.add_argument("--rays", type=int, help="Number of ray directions for gaussian-region")
    parser.add_argument("--seed", type=int, help="Seed for random directions and optimizer starts")
    parser.add_argument("--workers", type=int, help="Rays evaluated in parallel")
    parser.add_argument("--oracle", action="store_true", help="Add the Fock-space column to point-capacity")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Read the JSON file, fold in command-line overrides, validate once"""
    path = Path(args.config)
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config {path} must hold a JSON object")

    data["command"] = args.command
    if args.out is not None:
        data["out"] = args.out
    if args.format is not None:
        data["format"] = args.format
    if args.oracle:
        data["oracle"] = True
    optimizer = dict(data.get("optimizer") or {})
    for key in ("rays", "seed", "workers"):
        value = getattr(args, key)
        if value is not None:
            optimizer[key] = value
    data["optimizer"] = optimizer

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid config {path}:\n{e}") from e


def run(run_config: RunConfig) -> int:
    handler = COMMANDS[run_config.command]
    logger.info(f"🚀 Running {run_config.command}")
    output = handler(run_config)
    written = write_output(output, run_config.out, run_config.format)
    for path in written:
        logger.info(f"✅ Wrote {path}")
    if output.failure is not None:
        raise output.failure
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging("DEBUG" if args.verbose else settings.LOG_LEVEL)
    try:
        return run(load_config(args))
    except GaussMacError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    except Exception:
        logger.exception("❌ Unexpected failure")
        return 1


if __name__ == "__main__":
    sys.exit(main())
