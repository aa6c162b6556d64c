"""
Command line entry point

Usage:
    python -m app.cli simulate --config run.yaml --out results/run
    python -m app.cli sweep --config alpha-beta-fast-review --jobs 8
    python -m app.cli calibrate --config ieee-tac --replications 4
    python -m app.cli curves --out results/curves
    python -m app.cli presets list
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app import __version__
from app.config import get_settings
from app.errors import (
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    ConfigError,
    OutputError,
    SimulatorError,
)
from app.models import RunKind, RunManifest
from app.services.artifacts import curves_for, emit_results
from app.services.engine import run_simulation
from app.services.manifests import list_presets, manifest_from_document, parse_config
from app.services.metrics import impact_factor_matrix, mean_average_if
from app.services.sweep import calibrate, run_sweep


logger = logging.getLogger(__name__)


def _load_manifest(args: argparse.Namespace, kind: RunKind) -> RunManifest:
    if args.config:
        manifest = parse_config(args.config)
        if manifest.kind != kind:
            raise ConfigError(
                f"manifest is a '{manifest.kind.value}' run, not '{kind.value}'",
                field="kind",
            )
    else:
        manifest = manifest_from_document({"kind": kind.value})
    if args.seed is not None:
        manifest = manifest.with_seed(args.seed)
    if getattr(args, "replications", None) is not None:
        manifest = manifest.with_replications(args.replications)
    return manifest


def _output_dir(args: argparse.Namespace, manifest: RunManifest) -> Path:
    return Path(args.out or manifest.output_dir or get_settings().output_dir)


def cmd_simulate(args: argparse.Namespace) -> int:
    manifest = _load_manifest(args, RunKind.SIMULATE)
    config = manifest.simulation
    logger.info(f"🚀 Simulating {config.total_articles} articles (seed {config.seed})")
    result = run_simulation(config)
    if config.years >= 3:
        logger.info(f"📈 Mean average IF: {mean_average_if(impact_factor_matrix(result)):.4f}")
    emit_results(result, manifest, _output_dir(args, manifest))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    manifest = _load_manifest(args, RunKind.SWEEP)
    result = run_sweep(manifest.sweep, parallelism=args.jobs)
    emit_results(result, manifest, _output_dir(args, manifest))
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    if not args.config:
        raise ConfigError("calibrate needs --config (a file or a preset name)", field="config")
    manifest = _load_manifest(args, RunKind.CALIBRATE)
    result = calibrate(manifest.calibration, budget=args.budget, parallelism=args.jobs)
    emit_results(result, manifest, _output_dir(args, manifest))
    logger.info(
        f"🎯 {result.preset}: IF {result.achieved_mean:.4f} ± {result.achieved_std:.4f} "
        f"(target {result.target}) with alpha={result.params.alpha:g}, "
        f"beta={result.params.beta:g}, gamma={result.params.gamma:g}"
    )
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_curves(args: argparse.Namespace) -> int:
    manifest = _load_manifest(args, RunKind.CURVES)
    emit_results(curves_for(manifest.curves), manifest, _output_dir(args, manifest))
    return EXIT_OK


def cmd_presets(args: argparse.Namespace) -> int:
    for preset in list_presets():
        print(f"{preset.name:<26} {preset.kind.value:<10} {preset.description or ''}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="jif-sim",
        description="Simulate journal publication and citation dynamics and their impact factors.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=settings.log_level, help="Logging level (default: %(default)s)")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_options(p: argparse.ArgumentParser, replications: bool = False, jobs: bool = False):
        p.add_argument("--config", help="YAML manifest path or preset name")
        p.add_argument("--seed", type=int, help="Override the manifest seed")
        p.add_argument("--out", help="Output directory (default: the manifest's output_dir)")
        if jobs:
            p.add_argument("--jobs", type=int, default=settings.default_jobs,
                           help="Worker processes (default: %(default)s)")
        if replications:
            p.add_argument("--replications", type=int, help="Override replications per cell")

    run_options(sub.add_parser("simulate", help="Run one simulation"))
    run_options(sub.add_parser("sweep", help="Run a replicated parameter grid"), replications=True, jobs=True)
    calib = sub.add_parser("calibrate", help="Search kernel parameters toward a target IF")
    run_options(calib, replications=True, jobs=True)
    calib.add_argument("--budget", type=int, help="Override the evaluation budget")
    run_options(sub.add_parser("curves", help="Tabulate the kernel curves"))

    presets = sub.add_parser("presets", help="Shipped manifests")
    presets.add_argument("action", choices=["list"])
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "curves": cmd_curves,
    "presets": cmd_presets,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        logger.error(f"Configuration error: {exc}")
        return exc.exit_code
    except OutputError as exc:
        logger.error(f"Output error: {exc}")
        return exc.exit_code
    except SimulatorError as exc:
        logger.error(str(exc))
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
