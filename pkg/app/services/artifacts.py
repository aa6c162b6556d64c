"""
Artifact Service
Serializes run results to CSV tables and a plain-text summary
"""
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from app import __version__
from app.config import get_settings
from app.errors import OutputError
from app.models import PUBLISHED_KERNELS, AgeBand, CurveSpec, KernelParams, RunManifest
from app.services.engine import SimResult
from app.services.kernel import age_factor_curve, count_factor_curve
from app.services.manifests import serialize_manifest
from app.services.metrics import (
    impact_factor_matrix,
    mean_average_if,
    reference_age_distribution,
)
from app.services.sweep import CalibrationResult, SweepResult


logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"

IF_MATRIX_CSV = "if_matrix.csv"
REF_AGE_HIST_CSV = "ref_age_hist.csv"
EDGES_CSV = "edges.csv"
SWEEP_CSV = "sweep.csv"
CALIBRATION_CSV = "calibration.csv"
COUNT_CURVE_CSV = "count_curve.csv"
AGE_CURVE_CSV = "age_curve.csv"
SUMMARY_TXT = "summary.txt"


class CurveTables:
    """Sampled kernel curves, long format with one block per parameter set"""

    def __init__(self, count: pd.DataFrame, age: pd.DataFrame):
        self.count = count
        self.age = age


def dump_kernel_curves(
    params: Optional[KernelParams] = None,
    n_max: int = 100,
    t_min: int = -240,
) -> CurveTables:
    """
    Tabulate citation_count_factor over n = 0..n_max and age_factor over
    t = t_min..0 at unit steps. Without params, every published parameter set
    is tabulated.
    """
    sets = {"custom": params} if params is not None else dict(PUBLISHED_KERNELS)
    count_blocks, age_blocks = [], []
    for name, kernel in sets.items():
        count_blocks.append(pd.DataFrame({
            "set": name,
            "n": np.arange(n_max + 1),
            "factor": count_factor_curve(kernel, n_max),
        }))
        age_blocks.append(pd.DataFrame({
            "set": name,
            "t": np.arange(t_min, 1),
            "factor": age_factor_curve(kernel, t_min),
        }))
    return CurveTables(
        count=pd.concat(count_blocks, ignore_index=True),
        age=pd.concat(age_blocks, ignore_index=True),
    )


def _csv_writer(frame: pd.DataFrame) -> Callable[[Path], None]:
    def write(path: Path) -> None:
        frame.to_csv(
            path,
            index=False,
            float_format=FLOAT_FORMAT,
            na_rep="NaN",
            lineterminator="\n",
            encoding="utf-8",
        )
    return write


def _text_writer(text: str) -> Callable[[Path], None]:
    def write(path: Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    return write


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _summary(manifest: RunManifest, diagnostics: Dict[str, object]) -> str:
    lines = [f"# Journal Impact Factor Simulator v{__version__}", "", "[manifest]"]
    lines.append(serialize_manifest(manifest).rstrip())
    lines += ["", "[diagnostics]"]
    lines += [f"{key}: {_format_value(value)}" for key, value in diagnostics.items()]
    return "\n".join(lines) + "\n"


def if_matrix_frame(result: SimResult) -> pd.DataFrame:
    return impact_factor_matrix(result).to_frame().reset_index()


def ref_age_frame(result: SimResult, bands: Sequence[AgeBand]) -> pd.DataFrame:
    rows = []
    journals: List[Optional[int]] = list(range(1, result.config.num_journals + 1)) + [None]
    for journal in journals:
        hist = reference_age_distribution(result.ledger, result.articles, journal, bands)
        for label, (low, high, pct), count in zip(hist.labels, hist.bands, hist.counts):
            rows.append({
                "journal": "all" if journal is None else str(journal),
                "band": label,
                "min_age_years": low,
                "max_age_years": "" if high is None else high,
                "references": count,
                "percentage": pct,
                "empty": hist.empty,
                "truncated": hist.truncated,
            })
    return pd.DataFrame(rows)


def edges_frame(result: SimResult) -> pd.DataFrame:
    months = np.array([a.pub_month for a in result.articles], dtype=np.int64)
    edges = np.array(result.ledger.edges, dtype=np.int64).reshape(-1, 2)
    return pd.DataFrame({
        "citing_id": edges[:, 0],
        "cited_id": edges[:, 1],
        "citing_month": months[edges[:, 0] - 1],
        "cited_month": months[edges[:, 1] - 1],
    })


def _simulation_files(result: SimResult, manifest: RunManifest) -> Dict[str, Callable[[Path], None]]:
    emit = manifest.emit
    files: Dict[str, Callable[[Path], None]] = {}
    if emit.if_matrix:
        files[IF_MATRIX_CSV] = _csv_writer(if_matrix_frame(result))
    if emit.ref_age_hist:
        files[REF_AGE_HIST_CSV] = _csv_writer(ref_age_frame(result, manifest.age_bands))
    if emit.edges:
        files[EDGES_CSV] = _csv_writer(edges_frame(result))
    if emit.summary:
        diagnostics = dict(result.diagnostics())
        if result.config.years >= 3:
            diagnostics["mean_average_if"] = mean_average_if(impact_factor_matrix(result))
        for i, warning in enumerate(result.warnings):
            diagnostics[f"warning_{i + 1}"] = warning
        files[SUMMARY_TXT] = _text_writer(_summary(manifest, diagnostics))
    return files


def _sweep_files(result: SweepResult, manifest: RunManifest) -> Dict[str, Callable[[Path], None]]:
    files: Dict[str, Callable[[Path], None]] = {}
    if manifest.emit.sweep:
        files[SWEEP_CSV] = _csv_writer(result.to_frame())
    if manifest.emit.summary:
        diagnostics = {
            "cells": len(result.cells),
            "replications": result.spec.replications,
            "abandoned_slots": sum(c.abandoned_slots for c in result.cells),
            "duplicate_refs": sum(c.duplicate_refs for c in result.cells),
            "runtime_seconds": result.runtime_seconds,
        }
        files[SUMMARY_TXT] = _text_writer(_summary(manifest, diagnostics))
    return files


def _calibration_files(result: CalibrationResult, manifest: RunManifest) -> Dict[str, Callable[[Path], None]]:
    files: Dict[str, Callable[[Path], None]] = {}
    if manifest.emit.calibration:
        files[CALIBRATION_CSV] = _csv_writer(result.to_frame())
    if manifest.emit.summary:
        diagnostics = {
            "preset": result.preset,
            "target_if": result.target,
            "achieved_mean_if": result.achieved_mean,
            "achieved_std_if": result.achieved_std,
            "relative_error": result.relative_error,
            "converged": result.converged,
            "evaluations": len(result.evaluations),
            "alpha": result.params.alpha,
            "beta": result.params.beta,
            "gamma": result.params.gamma,
            "delta": result.params.delta,
        }
        files[SUMMARY_TXT] = _text_writer(_summary(manifest, diagnostics))
    return files


def _curve_files(result: CurveTables, manifest: RunManifest) -> Dict[str, Callable[[Path], None]]:
    if not manifest.emit.curves:
        return {}
    return {
        COUNT_CURVE_CSV: _csv_writer(result.count),
        AGE_CURVE_CSV: _csv_writer(result.age),
    }


def curves_for(spec: CurveSpec) -> CurveTables:
    return dump_kernel_curves(spec.params, spec.n_max, spec.t_min)


def emit_results(
    result: Union[SimResult, SweepResult, CalibrationResult, CurveTables],
    manifest: RunManifest,
    output_dir: Optional[Union[str, Path]] = None,
) -> List[Path]:
    """
    Write the requested artifacts of a result.

    Every file is first written to a staging directory inside the output
    directory and moved into place only after all of them succeeded. If a
    move fails, files already moved are removed and any files they replaced
    are restored, so the directory holds the previous set or the new one.
    """
    if isinstance(result, SimResult):
        files = _simulation_files(result, manifest)
    elif isinstance(result, SweepResult):
        files = _sweep_files(result, manifest)
    elif isinstance(result, CalibrationResult):
        files = _calibration_files(result, manifest)
    elif isinstance(result, CurveTables):
        files = _curve_files(result, manifest)
    else:
        raise TypeError(f"cannot emit {type(result).__name__}")

    target = Path(output_dir or manifest.output_dir or get_settings().output_dir)
    try:
        target.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=target))
    except OSError as exc:
        raise OutputError(f"output directory {target} is not writable: {exc}") from exc

    written: List[Path] = []
    previous: Dict[Path, Path] = {}
    try:
        for name, write in files.items():
            write(staging / name)
        for name in files:
            destination = target / name
            if destination.exists():
                backup = staging / f"{name}.previous"
                os.replace(destination, backup)
                previous[destination] = backup
            os.replace(staging / name, destination)
            written.append(destination)
    except OSError as exc:
        _roll_back(written, previous)
        raise OutputError(f"failed to write results to {target}: {exc}") from exc
    finally:
        shutil.rmtree(staging, ignore_errors=True)

    logger.info(f"Wrote {len(written)} artifact(s) to {target}")
    return written


def _roll_back(written: List[Path], previous: Dict[Path, Path]) -> None:
    """Undo a partial move: drop new files, put displaced ones back"""
    for path in written:
        path.unlink(missing_ok=True)
    for destination, backup in previous.items():
        try:
            os.replace(backup, destination)
        except OSError as exc:
            logger.error(f"could not restore {destination}: {exc}")
