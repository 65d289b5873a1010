"""``levy-drawdown`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence

import pandas as pd
from dotenv import load_dotenv
from pydantic import ValidationError

from levy_drawdown import __version__
from levy_drawdown.errors import LevyDrawdownError, ParameterError

from .models import RunConfig
from .presets import available_presets, load_config_file, load_preset
from .services.density_service import DensityService
from .services.output_service import OutputService
from .services.probability_service import ProbabilityService
from .services.simulation_service import SimulationService
from .services.transform_service import TransformService
from .settings import Settings, load_settings

logger = logging.getLogger(__name__)

PACKAGE_ROOT = Path(__file__).resolve().parents[3]

COMMANDS = ("prob", "joint-density", "exit", "tax", "dividend", "simulate")
EXIT_OK = 0
EXIT_INVALID = 2

Handler = Callable[[RunConfig, argparse.Namespace, int], tuple[pd.DataFrame, dict]]


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    source = parent.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="JSON run configuration file.")
    source.add_argument("--preset", help="Name of a packaged preset, e.g. fig1a.")
    parent.add_argument("--out", help="Output path (default: stdout).")
    parent.add_argument("--format", choices=["csv", "json"], dest="fmt", help="Output format (default: from config, else csv).")
    parent.add_argument("--with-mc", action="store_true", dest="with_mc", help="Add Monte Carlo estimates next to the analytic values.")
    parent.add_argument("--seed", type=int, help="Override sim.seed (unsigned 64-bit).")
    parent.add_argument("--threads", type=int, help="Worker processes for grid sweeps and simulation.")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-drawdown",
        description="Drawdown probabilities, joint densities and Monte Carlo checks for spectrally negative Levy risk models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--list-presets", action="store_true", help="Print the known preset names and exit.")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    parent = _common_options()
    helps = {
        "prob": "Sweep drawdown probabilities over a grid for each drawdown case.",
        "joint-density": "Invert the joint transform of (tau, ell) on a (t1, t2) grid.",
        "exit": "Probability of reaching level s before the drawdown, over an s grid.",
        "tax": "Running-max density at ruin of the surplus under loss-carry-forward tax.",
        "dividend": "Running-max profile at ruin of the surplus reflected at a dividend barrier.",
        "simulate": "Dump raw Monte Carlo records for one drawdown rule.",
    }
    for name in COMMANDS:
        commands.add_parser(name, parents=[parent], help=helps[name])
    return parser


def _load_run(args: argparse.Namespace, settings: Settings) -> RunConfig:
    run = load_preset(args.preset, settings.preset_dir) if args.preset else load_config_file(args.config)
    if run.command is not None and run.command != args.command:
        raise ParameterError(f"config is for command {run.command!r}, not {args.command!r}")
    sim = run.sim if args.seed is None else run.sim.model_copy(update={"seed": args.seed})
    return run.model_copy(update={"command": args.command, "sim": sim})


def _with_mc(run: RunConfig, args: argparse.Namespace, workers: int):
    return run.sim.to_config(workers=workers) if args.with_mc else None


def _prob(run, args, workers):
    return ProbabilityService(run.quadrature.to_config(), _with_mc(run, args, workers), workers=workers).sweep(run)


def _joint_density(run, args, workers):
    service = DensityService(
        run.quadrature.to_config(),
        run.inversion.to_config(),
        _with_mc(run, args, workers),
        workers=workers,
    )
    return service.grid(run)


def _exit(run, args, workers):
    return TransformService(run.quadrature.to_config()).exit(run)


def _tax(run, args, workers):
    return TransformService(run.quadrature.to_config(), _with_mc(run, args, workers)).tax(run)


def _dividend(run, args, workers):
    return TransformService(run.quadrature.to_config(), _with_mc(run, args, workers)).dividend(run)


def _simulate(run, args, workers):
    return SimulationService(run.sim.to_config(workers=workers)).simulate(run)


HANDLERS: dict[str, Handler] = {
    "prob": _prob,
    "joint-density": _joint_density,
    "exit": _exit,
    "tax": _tax,
    "dividend": _dividend,
    "simulate": _simulate,
}


def _describe(exc: ValidationError) -> str:
    parts = [f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()]
    return "; ".join(parts)


def run_command(args: argparse.Namespace, settings: Settings) -> int:
    run = _load_run(args, settings)
    workers = args.threads or settings.threads
    if workers < 1:
        raise ParameterError("--threads must be >= 1")
    logger.info("running %s with %d worker(s)", args.command, workers)
    frame, summary = HANDLERS[args.command](run, args, workers)
    fmt = args.fmt or run.output.format
    path = args.out or run.output.path
    OutputService(__version__).write(frame, command=args.command, run=run, seed=run.sim.seed, fmt=fmt, path=path, summary=summary)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    load_dotenv(PACKAGE_ROOT / ".env")
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_settings()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    settings.configure_logging()

    if args.list_presets:
        print("\n".join(available_presets(settings.preset_dir)))
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_INVALID

    try:
        return run_command(args, settings)
    except ValidationError as exc:
        print(f"error: invalid config: {_describe(exc)}", file=sys.stderr)
    except LevyDrawdownError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
