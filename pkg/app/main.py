"""Sparse activity detection in multi-cell massive MIMO: analysis and Monte Carlo experiments.

Compares treating inter-cell interference as noise against cooperative detection with
interference recovery and LLR forwarding between base stations. Every command writes
versioned CSV tables named after the quantity they reproduce into --out.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path

import numpy as np
from dishka import make_async_container

from core import cli_errors
from core.providers import CoreProvider
from core.settings import settings
from experiments.models import ExperimentSpec
from experiments.providers import ExperimentProvider
from experiments.services import ExperimentService
from geometry.models import FULL_SCALE, NetworkConfig
from quantize.models import FronthaulQuantization
from state_evolution.models import Architecture

logger = logging.getLogger("main")

DEFAULT_SWEEPS = {
    "M": [1, 2, 4, 8, 16],
    "L": [20, 30, 40, 60, 80],
    "Q": [1, 2, 3, 4, 5],
    "zeta": [0.9, 0.95, 0.97, 0.99],
}


def parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="network key=value file (NET_* keys)")
    common.add_argument("--seed", type=int, default=settings.DEFAULT_SEED, help="master seed")
    common.add_argument("--trials", type=int, default=200, help="Monte Carlo realizations")
    common.add_argument("--out", type=Path, default=Path(settings.OUTPUT_DIR), help="directory for CSV tables")
    common.add_argument("--arch", choices=[Architecture.TIN, Architecture.COOP], default=Architecture.TIN)
    common.add_argument("--bbn", type=int, default=1, help="base stations forwarding LLRs per user")
    common.add_argument("--q-bits", type=int, default=None, help="fronthaul quantizer bits; omit for ideal LLRs")
    common.add_argument("--zeta", type=float, default=None, help="quantizer coverage probability")
    common.add_argument("--full-scale", action="store_true", help="19 cells, 2000 users per cell, L=400")
    common.add_argument("--engine", choices=["amp", "decoupled"], default="amp")
    common.add_argument("--detection-tiers", type=int, default=1, help="cell rings each BS recovers when cooperating")
    common.add_argument("--tau-source", choices=["analytic", "empirical"], default="analytic")

    parser = argparse.ArgumentParser(description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("predict", parents=[common], help="state evolution and analytic error profiles")
    simulate = commands.add_parser("simulate", parents=[common], help="Monte Carlo error profiles")
    simulate.add_argument("--amp-trace", action="store_true", help="also write the centre BS AMP trace")
    sweep = commands.add_parser("sweep", parents=[common], help="cell-edge error against one parameter")
    sweep.add_argument("--parameter", required=True, choices=["M", "L", "B_bn", "Q", "zeta", "detection_radius"])
    sweep.add_argument("--values", type=parse_values, default=None)
    sweep.add_argument("--simulate", action="store_true", help="add empirical cell-edge error per point")
    quantize = commands.add_parser("quantize-sweep", parents=[common], help="fronthaul bits against accuracy")
    quantize.add_argument("--values", type=parse_values, default=None, help="quantizer bit widths")
    quantize.add_argument("--simulate", action="store_true")
    commands.add_parser("validate", parents=[common], help="analytic against empirical cross-checks")
    return parser


def network_config(args: argparse.Namespace) -> NetworkConfig:
    cfg = NetworkConfig.from_file(args.config) if args.config is not None else NetworkConfig()
    if args.full_scale:
        cfg = NetworkConfig.full_scale(**{k: v for k, v in dict(cfg).items() if k not in FULL_SCALE})
    return cfg


def experiment_spec(args: argparse.Namespace) -> ExperimentSpec:
    quantizer = None
    if args.q_bits is not None:
        quantizer = FronthaulQuantization(q_bits=args.q_bits, zeta=args.zeta)
    return ExperimentSpec(
        network=network_config(args),
        architecture=Architecture(args.arch),
        bbn=args.bbn,
        quantizer=quantizer,
        trials=args.trials,
        seed=args.seed,
        engine=args.engine,
        detection_tiers=args.detection_tiers,
        tau_source=args.tau_source,
    )


def sweep_values(parameter: str, spec: ExperimentSpec, values: list[float] | None) -> list[float]:
    if values:
        return values
    cfg = spec.network
    match parameter:
        case "B_bn":
            return list(range(1, min(cfg.num_cells, 4) + 1))
        case "detection_radius":
            return list(np.linspace(cfg.cell_radius, cfg.network_radius, 8))
    return DEFAULT_SWEEPS[parameter]


async def run(args: argparse.Namespace) -> None:
    spec = experiment_spec(args)
    container = make_async_container(CoreProvider(settings), ExperimentProvider())
    try:
        service = await container.get(ExperimentService)
        match args.command:
            case "predict":
                service.write(await service.predict(spec), args.out)
            case "simulate":
                service.write(await service.run_experiment(spec), args.out)
                if args.amp_trace:
                    await service.amp_trace(spec, args.out)
            case "sweep":
                values = sweep_values(args.parameter, spec, args.values)
                rows = await service.sweep(spec, args.parameter, values, simulate=args.simulate)
                service.write_sweep(rows, args.parameter, args.out)
            case "quantize-sweep":
                q_bits = [int(v) for v in sweep_values("Q", spec, args.values)]
                rows = await service.quantize_sweep(spec, q_bits, simulate=args.simulate)
                service.write_sweep(rows, "Q", args.out)
            case "validate":
                rows = await service.validate(spec)
                service.write_validation(rows, args.out)
                if not all(row.passed for row in rows):
                    logger.warning("%d of %d checks failed", sum(not r.passed for r in rows), len(rows))
    finally:
        await container.close()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=settings.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    cli_errors.register_exception_handlers()
    try:
        asyncio.run(run(args))
    except Exception as e:
        return cli_errors.handle(e)
    return 0


if __name__ == "__main__":
    sys.exit(main())
