"""
AMP power allocation - command-line entry point.

    ampp theory      --config ratio.env
    ampp contour     --set rho_min=0.05 --set rho_max=1.0 --set delta_min=0.05 --set delta_max=0.95
    ampp sweep-ratio --config ratio.env --output results/ratio.csv
    ampp sweep-noise --config noise.env --set epsilon_ratio=5
    ampp run         --config ratio.env --set alloc_mode=uniform

Exit status: 0 on success, 2 for configuration errors, 3 for runtime or
numerical failures.
"""
import argparse
import logging
import sys
import time
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from app import __version__
from app.core.config import settings
from app.core.exceptions import AmpPowerError, ConfigurationError
from app.core.logging import log_exception, setup_logging
from app.models.run_config import RunConfig
from app.models.types import AllocMode, Command, OutputFormat
from app.services.experiment import (
    run_trials,
    summarize_trials,
    sweep_noise,
    sweep_ratio,
    theory_summary,
    theory_table,
)
from app.services.results_writer import contour_frame, emit_results
from app.services.run_config import parse_config
from app.services.state_evolution import contour_grid

logger = logging.getLogger(__name__)

Handler = Callable[[RunConfig], Tuple[pd.DataFrame, Dict[str, Any]]]


# ============================================================================
# Command Handlers
# ============================================================================

def _theory(config: RunConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    return theory_table(config.spec).table, {"summary": theory_summary(config.spec)}


def _contour(config: RunConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    p = config.contour
    grids = {
        mode: contour_grid(
            rho_range=(p.rho_min, p.rho_max),
            delta_range=(p.delta_min, p.delta_max),
            sparsity_ratio=p.epsilon_ratio,
            noise_var=p.noise_var,
            alloc_mode=mode,
            block_fractions=p.block_fractions,
            resolution=p.resolution,
        )
        for mode in AllocMode
    }
    uniform = grids[AllocMode.UNIFORM]
    extra = {
        "phase_transition": [
            {"delta": d, "rho": r} for d, r in zip(uniform.delta_values, uniform.phase_transition)
        ],
        "inadmissible_boundary": [
            {"delta": d, "rho": r} for d, r in zip(uniform.delta_values, uniform.inadmissible_boundary)
        ],
    }
    return contour_frame(uniform, grids[AllocMode.OPTIMAL]), extra


def _sweep_ratio(config: RunConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    result = sweep_ratio(config.spec, config.ratios)
    return result.table, {"inadmissible_ratios": result.inadmissible}


def _sweep_noise(config: RunConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    result = sweep_noise(config.spec, config.noise_vars)
    return result.table, {"fits": result.fits}


def _run(config: RunConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    results = run_trials(config.spec)
    table = pd.DataFrame(
        [
            {
                "trial": r.trial_index,
                "alloc_mode": r.alloc_mode,
                "mse": r.mse,
                "iterations": r.iterations,
                "converged": r.converged,
            }
            for r in results
        ]
    )
    return table, {"summary": summarize_trials(results)}


HANDLERS: Dict[str, Handler] = {
    Command.THEORY.value: _theory,
    Command.CONTOUR.value: _contour,
    Command.SWEEP_RATIO.value: _sweep_ratio,
    Command.SWEEP_NOISE.value: _sweep_noise,
    Command.RUN.value: _run,
}


# ============================================================================
# Argument Parsing
# ============================================================================

def _parse_overrides(items: Sequence[str]) -> Dict[str, str]:
    overrides = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"Expected key=value, got {item!r}", keys=[item])
        overrides[key.strip()] = value.strip()
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ampp",
        description="AMP.P reconstruction, state-evolution predictions and column power allocation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help=f"Logging level (default {settings.log_level})")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", default=None, help="key=value config file")
    common.add_argument("--set", "-s", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override one config key (repeatable)")
    common.add_argument("--output", "-o", default=None, help="Result file path")
    common.add_argument("--format", "-f", choices=[f.value for f in OutputFormat], default=None)

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        Command.THEORY: "Minimax MSE, thresholds, optimal allocation and predicted MSE",
        Command.CONTOUR: "Predicted MSE over a (rho, delta) grid for both allocations",
        Command.SWEEP_RATIO: "Monte Carlo MSE against the sparsity ratio",
        Command.SWEEP_NOISE: "Monte Carlo MSE against the noise variance, with linear fits",
        Command.RUN: "One batch of Monte Carlo trials",
    }
    for command, text in helps.items():
        sub.add_parser(command.value, parents=[common], help=text, description=text)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(log_level=args.log_level)

    try:
        overrides = _parse_overrides(args.overrides)
        if args.output:
            overrides["output_path"] = args.output
        if args.format:
            overrides["format"] = args.format
        config = parse_config(args.config, overrides, command=args.command)

        started = time.perf_counter()
        table, extra = HANDLERS[str(config.command)](config)
        written = emit_results(table, config, time.perf_counter() - started, extra)
    except AmpPowerError as exc:
        log_exception(logger, exc, context=exc.details)
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        log_exception(logger, exc, context={"command": args.command})
        print(f"error: {exc}", file=sys.stderr)
        return 3

    logger.info("%s finished: %s", args.command, ", ".join(str(p) for p in written))
    return 0


if __name__ == "__main__":
    sys.exit(main())
