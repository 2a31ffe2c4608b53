#!/usr/bin/env python3
"""
eup-spectra: spectra and closed-form checks for PT-symmetric extended momentum operators.
Usage:
  python eup_spectra.py <check|spectrum|momentum|pct|fig1|sweep> --config config.yml [--out results] [--format json|text|html] [--verbose]
"""

import argparse
import logging
import sys
import traceback
from pathlib import Path

# Allow running from project root
sys.path.insert(0, str(Path(__file__).resolve().parent))

from src.commands import run_command
from src.config import COMMANDS, OUTPUT_FORMATS, parse_config
from src.errors import ConfigError, EupSpectraError
from src.report import emit_report

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _failing_operation(error: BaseException) -> str:
    """Innermost public function of the package on the traceback."""
    name = "run_command"
    for frame in traceback.extract_tb(error.__traceback__):
        if Path(frame.filename).parent.name == "src" and not frame.name.startswith(("_", "<")):
            name = frame.name
    return name


def main() -> int:
    parser = argparse.ArgumentParser(description="Spectra of PT-symmetric extended momentum operators")
    parser.add_argument("command", choices=COMMANDS, help="What to run")
    parser.add_argument("--config", type=Path, default=Path("config.yml"), help="Path to YAML/JSON run config")
    parser.add_argument("--out", type=Path, default=None, help="Output directory (overrides output.dir)")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, default=None, help="Report format (overrides output.format)")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    args = parser.parse_args()

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
    )

    try:
        cfg = parse_config(args.config).with_output(args.out, args.format)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report = run_command(args.command, cfg)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except EupSpectraError as e:
        print(f"Error: {args.command}: {_failing_operation(e)}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILED

    try:
        path = emit_report(report, cfg.output_format, cfg.output_dir)
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILED

    graded = [check for check in report.checks if check.passed is not None]
    failed = [check.name for check in graded if not check.passed]
    print(f"Config: {report.config_digest}")
    print(f"Report: {path}")
    print(f"Checks: {len(graded) - len(failed)}/{len(graded)} passed")
    for name in failed:
        print(f"FAIL: {name}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
