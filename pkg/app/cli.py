#!/usr/bin/env python3
"""
annulus-nls CLI - normalized NLS ground states on the annulus 1 < |x| < 2
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.config import settings
from app.data import PerturbationMode
from app.exceptions import ParameterError
from app.logging_config import setup_logging
from app.schemas import Command, RunConfig
from app.workflows import RunWorkflow, run_batch
from app.workflows.run_workflow import EXIT_PARAMETER_ERROR, RunOutcome

console = Console()
error_console = Console(stderr=True)

# CLI flag -> RunConfig key (by alias)
_CONFIG_KEYS = {
    "N": "N", "p": "p", "lam": "lambda", "lambda_min": "lambda_min",
    "lambda_max": "lambda_max", "points": "points", "mass": "mass", "eps": "eps",
    "T": "T", "dt": "dt", "seed": "seed", "mode": "mode", "out": "out", "tol": "tol",
    "nodes": "nodes",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to the invalid-parameter exit code."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--N", type=int, help="Space dimension (default: 2)")
    common.add_argument("--p", type=float, help="Nonlinearity exponent")
    common.add_argument("--lambda", dest="lam", type=float, help="Frequency lambda")
    common.add_argument("--lambda-min", dest="lambda_min", type=float)
    common.add_argument("--lambda-max", dest="lambda_max", type=float)
    common.add_argument("--points", type=int, help="Number of lambda samples")
    common.add_argument("--mass", type=float, help="Target mass c (solve)")
    common.add_argument("--eps", type=float, help="Perturbation size (evolve)")
    common.add_argument("--T", type=float, help="Time horizon (evolve)")
    common.add_argument("--dt", type=float, help="Time step (evolve)")
    common.add_argument("--seed", type=int, help="Random-smooth perturbation seed")
    common.add_argument("--mode", choices=[mode.value for mode in PerturbationMode])
    common.add_argument("--out", help=f"Output directory (default: {settings.output_dir})")
    common.add_argument("--tol", type=float, help="Relative mass tolerance (solve)")
    common.add_argument("--nodes", type=int, help="Uniform mesh override")
    common.add_argument("--svg", action="store_true", help="Also write SVG plots")
    common.add_argument(
        "--log-level",
        choices=["debug", "info", "warning", "error", "critical"],
        default=settings.log_level.lower(),
    )
    common.add_argument("--log-format", choices=["text", "json"], default=settings.log_format)

    parser = _Parser(
        prog="annulus-nls",
        description="Positive radial normalized NLS solutions on the annulus 1 < |x| < 2",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  annulus-nls eigen --N 3
  annulus-nls ground --N 2 --p 4 --lambda 10
  annulus-nls curve --N 2 --p 4 --lambda-min -5 --lambda-max 1000 --svg
  annulus-nls solve --N 2 --p 8 --mass 50
  annulus-nls asymptotics --N 2 --p 4
  annulus-nls evolve --N 2 --p 4 --lambda 10 --eps 1e-3 --T 20
  annulus-nls batch --config sweep.json
        """,
    )
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command in Command:
        commands.add_parser(command.value, parents=[common])
    batch = commands.add_parser("batch", help="Run a JSON array of configurations")
    batch.add_argument("--config", required=True, help="Batch file")
    batch.add_argument("--log-level", choices=["debug", "info", "warning", "error", "critical"],
                       default=settings.log_level.lower())
    batch.add_argument("--log-format", choices=["text", "json"], default=settings.log_format)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {"command": args.command, "svg": args.svg}
    for flag, key in _CONFIG_KEYS.items():
        value = getattr(args, flag)
        if value is not None:
            values[key] = value
    return RunConfig.model_validate(values)


def print_outcome(outcome: RunOutcome, command: Command) -> None:
    summary = outcome.summary
    if command is Command.EIGEN and "lambda_1" in summary:
        print(f"{summary['lambda_1']:.10g}")
        return

    table = Table(title=f"annulus-nls {command.value}")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value")
    for key, value in summary.items():
        if isinstance(value, float):
            value = f"{value:.10g}"
        table.add_row(key, str(value))
    table.add_row("exit code", str(outcome.exit_code))
    console.print(table)
    for path in outcome.files:
        console.print(f"  wrote {path}")


def main(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run the command, return the exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        error_console.print(f"[red]error:[/red] {exc}")
        return EXIT_PARAMETER_ERROR

    setup_logging(level=args.log_level.upper(), format_type=args.log_format,
                  log_file=settings.log_file)

    if args.command == "batch":
        try:
            return run_batch(args.config)
        except ParameterError as exc:
            error_console.print(f"[red]error:[/red] {exc}")
            return EXIT_PARAMETER_ERROR

    try:
        config = config_from_args(args)
    except (ValidationError, ParameterError) as exc:
        error_console.print(f"[red]invalid parameters:[/red] {exc}")
        return EXIT_PARAMETER_ERROR

    outcome = RunWorkflow(config).run()
    print_outcome(outcome, config.command)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
