"""
Sweep Service
Replicated parameter-grid experiments, trend statistics and kernel calibration
"""
import itertools
import logging
import multiprocessing as mp
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy import stats

from app.errors import ConfigError, ContractViolation
from app.models import CalibrationPreset, KernelParams, SimConfig, SweepSpec
from app.services.engine import run_simulation
from app.services.metrics import impact_factor_matrix, mean_average_if


logger = logging.getLogger(__name__)


def derive_seed(seed_base: int, cell_index: int, replication: int) -> int:
    """Seed of one replication of one cell; a pure function of its three arguments"""
    seq = np.random.SeedSequence(seed_base, spawn_key=(cell_index, replication))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class ReplicationOutcome:
    """Score and diagnostics of one simulation inside a sweep"""
    cell: int
    replication: int
    seed: int
    score: float
    abandoned_slots: int
    duplicate_refs: int
    citation_edges: int


def run_replication(task: Tuple[int, int, SimConfig]) -> ReplicationOutcome:
    """Worker entry point; module level so worker processes can unpickle it"""
    cell, replication, config = task
    result = run_simulation(config)
    score = mean_average_if(impact_factor_matrix(result)) if config.years >= 3 else float("nan")
    return ReplicationOutcome(
        cell=cell,
        replication=replication,
        seed=config.seed,
        score=score,
        abandoned_slots=result.abandoned_slots,
        duplicate_refs=result.duplicate_refs,
        citation_edges=result.edge_count,
    )


@dataclass
class SweepCell:
    """Aggregated replications of one grid cell"""
    index: int
    steps: Tuple[int, ...]
    assignment: Dict[str, float]
    scores: List[float]
    seeds: List[int]
    abandoned_slots: int = 0
    duplicate_refs: int = 0

    @property
    def mean(self) -> float:
        return float(np.mean(self.scores))

    @property
    def std(self) -> float:
        if len(self.scores) < 2:
            return 0.0
        return float(np.std(self.scores, ddof=1))

    @property
    def min(self) -> float:
        return float(np.min(self.scores))

    @property
    def max(self) -> float:
        return float(np.max(self.scores))


@dataclass
class SweepResult:
    spec: SweepSpec
    cells: List[SweepCell]
    runtime_seconds: float = 0.0

    def axis_index(self, name: str) -> int:
        for i, axis in enumerate(self.spec.axes):
            if axis.name == name:
                return i
        raise ContractViolation(f"sweep has no axis named '{name}'")

    def cell_at(self, **steps: int) -> SweepCell:
        """Cell selected by axis step index, e.g. cell_at(avg_refs=0, review_cycle_months=3)"""
        wanted = {self.axis_index(name): step for name, step in steps.items()}
        for cell in self.cells:
            if all(cell.steps[i] == s for i, s in wanted.items()):
                return cell
        raise ContractViolation(f"no cell matches {steps}")

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for cell in self.cells:
            row = {"cell": cell.index}
            for axis, step in zip(self.spec.axes, cell.steps):
                row[axis.name] = axis.label(step)
            row.update({
                "replications": len(cell.scores),
                "mean_if": cell.mean,
                "std_if": cell.std,
                "min_if": cell.min,
                "max_if": cell.max,
                "abandoned_slots": cell.abandoned_slots,
                "duplicate_refs": cell.duplicate_refs,
            })
            rows.append(row)
        return pd.DataFrame(rows)


def _cell_configs(spec: SweepSpec) -> List[Tuple[Tuple[int, ...], Dict[str, float], SimConfig]]:
    cells = []
    for steps in spec.cell_steps():
        try:
            config = spec.cell_config(steps)
        except ValidationError as exc:
            raise ConfigError.from_validation_error(exc, root="sweep.base") from None
        cells.append((steps, spec.cell_assignment(steps), config))
    return cells


def run_sweep(spec: SweepSpec, parallelism: int = 1) -> SweepResult:
    """
    Run every cell x replication and aggregate the run scores per cell.

    Every config is built and validated before the first simulation starts.
    Results are merged by (cell, replication), so the outcome does not depend
    on the worker count or completion order.
    """
    if parallelism < 1:
        raise ContractViolation(f"parallelism must be >= 1, got {parallelism}")

    started = time.perf_counter()
    cells = _cell_configs(spec)
    tasks = []
    for index, (_, _, config) in enumerate(cells):
        for replication in range(spec.replications):
            seed = derive_seed(spec.seed_base, index, replication)
            tasks.append((index, replication, config.model_copy(update={"seed": seed})))

    if len({task[2].seed for task in tasks}) != len(tasks):
        raise ConfigError("derived replication seeds collide", field="sweep.seed_base")

    logger.info(
        f"Sweep: {len(cells)} cells x {spec.replications} replications, {parallelism} worker(s)"
    )

    if parallelism == 1 or len(tasks) == 1:
        outcomes = [run_replication(task) for task in tasks]
    else:
        with mp.Pool(processes=min(parallelism, len(tasks))) as pool:
            outcomes = list(pool.imap_unordered(run_replication, tasks))

    by_key = {(o.cell, o.replication): o for o in outcomes}
    merged: List[SweepCell] = []
    for index, (steps, assignment, _) in enumerate(cells):
        replicas = [by_key[(index, r)] for r in range(spec.replications)]
        merged.append(SweepCell(
            index=index,
            steps=steps,
            assignment=assignment,
            scores=[o.score for o in replicas],
            seeds=[o.seed for o in replicas],
            abandoned_slots=sum(o.abandoned_slots for o in replicas),
            duplicate_refs=sum(o.duplicate_refs for o in replicas),
        ))
        logger.debug(f"cell {index} {assignment}: mean IF {merged[-1].mean:.4f}")

    runtime = time.perf_counter() - started
    logger.info(f"Sweep complete in {runtime:.1f}s")
    return SweepResult(spec=spec, cells=merged, runtime_seconds=runtime)


@dataclass
class TrendReport:
    """Monotone-trend summary of cell means along one axis"""
    axis: str
    labels: List[str]
    means: List[float]
    rho: float
    increases: int
    decreases: int
    ties: int
    degenerate: bool = False

    @property
    def direction(self) -> str:
        if self.rho > 0:
            return "increasing"
        if self.rho < 0:
            return "decreasing"
        return "flat"

    @property
    def strictly_increasing(self) -> bool:
        return self.increases == len(self.means) - 1

    @property
    def strictly_decreasing(self) -> bool:
        return self.decreases == len(self.means) - 1


def trend_statistics(
    result: SweepResult,
    axis: str,
    fixed: Optional[Dict[str, int]] = None,
) -> TrendReport:
    """
    Spearman rank correlation between an axis and the cell-mean score.

    Other axes are held at the steps given in `fixed` and averaged over otherwise.
    A joint axis is ranked by its listed order.
    """
    position = result.axis_index(axis)
    grid_axis = result.spec.axes[position]
    if len(grid_axis.values) < 3:
        raise ContractViolation(f"axis '{axis}' needs at least 3 values for a trend")
    pinned = {result.axis_index(name): step for name, step in (fixed or {}).items()}

    means = []
    for step in range(len(grid_axis.values)):
        selected = [
            cell.mean for cell in result.cells
            if cell.steps[position] == step and all(cell.steps[i] == s for i, s in pinned.items())
        ]
        means.append(float(np.mean(selected)))

    if len(grid_axis.fields) == 1:
        x = [float(v[0]) for v in grid_axis.values]
    else:
        x = list(range(len(grid_axis.values)))

    diffs = np.diff(means)
    increases = int(np.sum(diffs > 0))
    decreases = int(np.sum(diffs < 0))
    ties = int(np.sum(diffs == 0))

    if np.ptp(means) == 0:
        logger.warning(f"Trend along '{axis}' is degenerate: all cell means are equal")
        return TrendReport(axis, [grid_axis.label(s) for s in range(len(means))], means,
                           0.0, increases, decreases, ties, degenerate=True)

    rho, _ = stats.spearmanr(x, means)
    return TrendReport(
        axis=axis,
        labels=[grid_axis.label(s) for s in range(len(means))],
        means=means,
        rho=float(rho),
        increases=increases,
        decreases=decreases,
        ties=ties,
    )


@dataclass
class CalibrationEvaluation:
    index: int
    phase: str
    params: KernelParams
    mean: float
    std: float
    error: float


@dataclass
class CalibrationResult:
    preset: str
    target: float
    params: KernelParams
    achieved_mean: float
    achieved_std: float
    converged: bool
    evaluations: List[CalibrationEvaluation] = field(default_factory=list)

    @property
    def error(self) -> float:
        return abs(self.achieved_mean - self.target)

    @property
    def relative_error(self) -> float:
        return self.error / self.target

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {
                "evaluation": e.index,
                "phase": e.phase,
                "alpha": e.params.alpha,
                "beta": e.params.beta,
                "gamma": e.params.gamma,
                "delta": e.params.delta,
                "mean_if": e.mean,
                "std_if": e.std,
                "abs_error": e.error,
            }
            for e in self.evaluations
        ])


class _BudgetExhausted(Exception):
    pass


class KernelCalibrator:
    """
    Derivative-free search for kernel parameters whose mean IF hits a target.

    A coarse grid is evaluated first; then the best point is moved by one step
    along each of alpha, beta and gamma in turn, and the steps are halved
    whenever a full pass brings no improvement. Every evaluation reuses the
    same replication seeds, so neighbouring points are compared on paired runs.
    """

    AXES = ("alpha", "beta", "gamma")

    def __init__(self, preset: CalibrationPreset, budget: Optional[int] = None, parallelism: int = 1):
        self.preset = preset
        self.budget = preset.budget if budget is None else budget
        if self.budget < 1:
            raise ContractViolation(f"calibration budget must be >= 1, got {self.budget}")
        self.parallelism = parallelism
        self.base = preset.base_config()
        self.evaluations: List[CalibrationEvaluation] = []
        self._cache: Dict[Tuple[float, float, float], CalibrationEvaluation] = {}

    @property
    def tolerance(self) -> float:
        return self.preset.tolerance * self.preset.target_if

    def evaluate(self, point: Tuple[float, float, float], phase: str) -> CalibrationEvaluation:
        point = tuple(round(v, 6) for v in point)
        if point in self._cache:
            return self._cache[point]
        if len(self.evaluations) >= self.budget:
            raise _BudgetExhausted()

        alpha, beta, gamma = point
        params = KernelParams(alpha=alpha, beta=beta, gamma=gamma, delta=self.preset.search.delta)
        spec = SweepSpec(
            base=self.base.model_copy(update={"kernel": params}),
            replications=self.preset.replications,
            seed_base=self.preset.seed_base,
        )
        cell = run_sweep(spec, self.parallelism).cells[0]
        evaluation = CalibrationEvaluation(
            index=len(self.evaluations),
            phase=phase,
            params=params,
            mean=cell.mean,
            std=cell.std,
            error=abs(cell.mean - self.preset.target_if),
        )
        self.evaluations.append(evaluation)
        self._cache[point] = evaluation
        logger.debug(
            f"calibration {evaluation.index}: alpha={alpha:g} beta={beta:g} gamma={gamma:g} "
            f"-> IF {cell.mean:.4f} (error {evaluation.error:.4f})"
        )
        return evaluation

    def _initial_steps(self) -> Dict[str, float]:
        steps = {}
        search = self.preset.search
        for name in self.AXES:
            values = sorted(set(getattr(search, name)))
            if len(values) > 1:
                steps[name] = float(np.median(np.diff(values))) / 2
            else:
                steps[name] = max(abs(values[0]) * 0.25, search.min_step)
        return steps

    def _best(self) -> Optional[CalibrationEvaluation]:
        if not self.evaluations:
            return None
        return min(self.evaluations, key=lambda e: (e.error, e.index))

    def _finish(self, converged: bool) -> CalibrationResult:
        best = self._best()
        if not converged:
            logger.warning(
                f"Calibration '{self.preset.name}' did not reach tolerance: best IF {best.mean:.4f} "
                f"vs target {self.preset.target_if}"
            )
        return CalibrationResult(
            preset=self.preset.name,
            target=self.preset.target_if,
            params=best.params,
            achieved_mean=best.mean,
            achieved_std=best.std,
            converged=converged,
            evaluations=list(self.evaluations),
        )

    def run(self) -> CalibrationResult:
        search = self.preset.search
        logger.info(
            f"Calibrating '{self.preset.name}' toward mean IF {self.preset.target_if} "
            f"(budget {self.budget} evaluations)"
        )
        try:
            for point in itertools.product(search.alpha, search.beta, search.gamma):
                if self.evaluate(point, "grid").error <= self.tolerance:
                    return self._finish(converged=True)

            steps = self._initial_steps()
            while any(step >= search.min_step for step in steps.values()):
                improved = False
                for position, name in enumerate(self.AXES):
                    for sign in (-1, 1):
                        best = self._best()
                        point = [best.params.alpha, best.params.beta, best.params.gamma]
                        point[position] += sign * steps[name]
                        if name != "alpha" and point[position] <= 0:
                            continue
                        evaluation = self.evaluate(tuple(point), "refine")
                        if evaluation.error <= self.tolerance:
                            return self._finish(converged=True)
                        if evaluation is self._best() and evaluation is not best:
                            improved = True
                if not improved:
                    steps = {name: step / 2 for name, step in steps.items()}
        except _BudgetExhausted:
            logger.info(f"Calibration budget of {self.budget} evaluations exhausted")

        return self._finish(converged=False)


def calibrate(
    preset: CalibrationPreset,
    budget: Optional[int] = None,
    parallelism: int = 1,
) -> CalibrationResult:
    """Search kernel parameters that bring the preset's mean IF to its target"""
    return KernelCalibrator(preset, budget=budget, parallelism=parallelism).run()
