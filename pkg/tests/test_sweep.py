"""
Tests for replicated sweeps, trend statistics and calibration
"""
import pytest
from pandas.testing import assert_frame_equal
from pydantic import ValidationError

from app.errors import ContractViolation
from app.models import CalibrationPreset, CalibrationSearch, SweepAxis, SweepSpec
from app.services.engine import run_simulation
from app.services.manifests import parse_config
from app.services.metrics import impact_factor_matrix, mean_average_if
from app.services.sweep import (
    KernelCalibrator,
    SweepCell,
    SweepResult,
    calibrate,
    derive_seed,
    run_sweep,
    trend_statistics,
)


def run_score(config):
    return mean_average_if(impact_factor_matrix(run_simulation(config)))


class TestDeriveSeed:
    def test_pure(self):
        assert derive_seed(5, 3, 7) == derive_seed(5, 3, 7)

    def test_distinct(self):
        seeds = {derive_seed(5, cell, rep) for cell in range(30) for rep in range(30)}
        assert len(seeds) == 900
        assert derive_seed(5, 0, 0) != derive_seed(6, 0, 0)

    def test_fits_uint64(self):
        assert 0 <= derive_seed(2**64 - 1, 10, 10) < 2**64


class TestRunSweep:
    def test_single_cell_matches_direct_run(self, small_config):
        spec = SweepSpec(base=small_config, replications=1, seed_base=11)
        result = run_sweep(spec)
        seed = derive_seed(11, 0, 0)
        assert result.cells[0].seeds == [seed]
        assert result.cells[0].scores == [run_score(small_config.with_overrides({"seed": seed}))]

    def test_grid_order_and_frame(self, small_config):
        spec = SweepSpec(
            base=small_config,
            axes=[
                SweepAxis(name="avg_refs", values=[8, 12]),
                SweepAxis(name="review_cycle_months", values=[2, 4, 6]),
            ],
            replications=2,
            seed_base=4,
        )
        result = run_sweep(spec)
        frame = result.to_frame()
        assert len(frame) == 6
        assert list(frame.columns) == [
            "cell", "avg_refs", "review_cycle_months", "replications",
            "mean_if", "std_if", "min_if", "max_if", "abandoned_slots", "duplicate_refs",
        ]
        assert list(frame["avg_refs"]) == ["8", "8", "8", "12", "12", "12"]
        assert list(frame["review_cycle_months"]) == ["2", "4", "6", "2", "4", "6"]
        cell = result.cell_at(avg_refs=1, review_cycle_months=2)
        assert cell.assignment == {"avg_refs": 12, "review_cycle_months": 6}
        assert min(cell.scores) <= cell.mean <= max(cell.scores)

    def test_worker_count_does_not_change_results(self, small_config):
        spec = SweepSpec(
            base=small_config,
            axes=[SweepAxis(name="review_cycle_months", values=[2, 6])],
            replications=3,
            seed_base=21,
        )
        serial = run_sweep(spec, parallelism=1)
        parallel = run_sweep(spec, parallelism=2)
        assert_frame_equal(serial.to_frame(), parallel.to_frame())
        assert [c.scores for c in serial.cells] == [c.scores for c in parallel.cells]

    def test_invalid_cell_rejected_before_running(self, small_config):
        with pytest.raises(ValidationError):
            SweepSpec(base=small_config, axes=[SweepAxis(name="kernel.beta", values=[10, 0])])

    def test_unknown_axis_field(self, small_config):
        with pytest.raises(ValidationError):
            SweepSpec(base=small_config, axes=[SweepAxis(name="flux", values=[1, 2])])

    def test_field_on_two_axes(self, small_config):
        with pytest.raises(ValidationError):
            SweepSpec(
                base=small_config,
                axes=[
                    SweepAxis(name="a", fields=["avg_refs"], values=[10, 20]),
                    SweepAxis(name="b", fields=["avg_refs"], values=[30]),
                ],
            )

    def test_parallelism_must_be_positive(self, small_config):
        with pytest.raises(ContractViolation):
            run_sweep(SweepSpec(base=small_config, replications=1), parallelism=0)


def synthetic_result(means, small_config, second_axis=None):
    """A SweepResult whose cells carry the given constant scores"""
    axes = [SweepAxis(name="review_cycle_months", values=list(range(2, 2 + 2 * len(means), 2)))]
    if second_axis:
        axes.append(SweepAxis(name="avg_refs", values=second_axis))
    spec = SweepSpec(base=small_config, axes=axes, replications=2)
    cells = []
    for index, steps in enumerate(spec.cell_steps()):
        score = means[steps[0]] + (10 * steps[1] if second_axis else 0)
        cells.append(SweepCell(index, steps, spec.cell_assignment(steps), [score, score], [1, 2]))
    return SweepResult(spec=spec, cells=cells)


class TestTrendStatistics:
    def test_increasing(self, small_config):
        report = trend_statistics(synthetic_result([1.0, 2.0, 3.0, 4.0], small_config), "review_cycle_months")
        assert report.rho == pytest.approx(1.0)
        assert report.direction == "increasing"
        assert report.strictly_increasing

    def test_decreasing(self, small_config):
        report = trend_statistics(synthetic_result([4.0, 3.0, 2.5, 1.0], small_config), "review_cycle_months")
        assert report.rho == pytest.approx(-1.0)
        assert report.strictly_decreasing
        assert report.decreases == 3

    def test_constant_means_are_degenerate(self, small_config):
        report = trend_statistics(synthetic_result([2.0, 2.0, 2.0], small_config), "review_cycle_months")
        assert report.degenerate
        assert report.rho == 0.0
        assert report.direction == "flat"

    def test_needs_three_values(self, small_config):
        with pytest.raises(ContractViolation):
            trend_statistics(synthetic_result([1.0, 2.0], small_config), "review_cycle_months")

    def test_other_axes_pinned_or_averaged(self, small_config):
        result = synthetic_result([3.0, 2.0, 1.0], small_config, second_axis=[10, 20])
        averaged = trend_statistics(result, "review_cycle_months")
        pinned = trend_statistics(result, "review_cycle_months", fixed={"avg_refs": 1})
        assert averaged.means == [8.0, 7.0, 6.0]
        assert pinned.means == [13.0, 12.0, 11.0]
        assert averaged.rho == pinned.rho == pytest.approx(-1.0)

    def test_joint_axis_ranked_by_position(self, small_config):
        spec = SweepSpec(
            base=small_config,
            axes=[SweepAxis(
                name="alpha_beta",
                fields=["kernel.alpha", "kernel.beta"],
                values=[[90, 40], [50, 20], [20, 15]],
            )],
            replications=1,
        )
        cells = [
            SweepCell(i, steps, spec.cell_assignment(steps), [float(i)], [0])
            for i, steps in enumerate(spec.cell_steps())
        ]
        report = trend_statistics(SweepResult(spec=spec, cells=cells), "alpha_beta")
        assert report.labels == ["90,40", "50,20", "20,15"]
        assert report.rho == pytest.approx(1.0)

    def test_unknown_axis(self, small_config):
        with pytest.raises(ContractViolation):
            trend_statistics(synthetic_result([1.0, 2.0, 3.0], small_config), "years")


def calibration_preset(small_config, target, alphas, tolerance=1e-9, budget=50):
    return CalibrationPreset(
        name="toy",
        review_cycle_months=small_config.review_cycle_months,
        avg_refs=small_config.avg_refs,
        target_if=target,
        base=small_config,
        search=CalibrationSearch(alpha=alphas, beta=[30], gamma=[10], delta=10),
        budget=budget,
        replications=2,
        tolerance=tolerance,
        seed_base=77,
    )


class TestCalibration:
    def known_target(self, small_config, alpha):
        config = small_config.with_overrides({"kernel.alpha": alpha, "kernel.beta": 30, "kernel.gamma": 10})
        scores = [run_score(config.with_overrides({"seed": derive_seed(77, 0, r)})) for r in range(2)]
        return sum(scores) / 2

    def test_recovers_known_parameters(self, small_config):
        target = self.known_target(small_config, 60)
        result = calibrate(calibration_preset(small_config, target, alphas=[20, 40, 60]))
        assert result.converged
        assert result.params.alpha == 60
        assert result.achieved_mean == pytest.approx(target, abs=1e-12)
        assert [e.phase for e in result.evaluations] == ["grid"] * len(result.evaluations)

    def test_budget_exhaustion_is_not_an_error(self, small_config):
        preset = calibration_preset(small_config, target=1000.0, alphas=[20, 40, 60], budget=2)
        result = calibrate(preset)
        assert not result.converged
        assert len(result.evaluations) == 2
        assert result.params.alpha in (20, 40)
        assert list(result.to_frame()["evaluation"]) == [0, 1]

    def test_refinement_follows_the_grid(self, small_config):
        preset = calibration_preset(small_config, target=1000.0, alphas=[40], budget=6)
        result = calibrate(preset)
        assert not result.converged
        phases = [e.phase for e in result.evaluations]
        assert phases[0] == "grid"
        assert set(phases[1:]) == {"refine"}

    def test_budget_override_must_be_positive(self, small_config):
        with pytest.raises(ContractViolation):
            KernelCalibrator(calibration_preset(small_config, 1.0, alphas=[20]), budget=0)


@pytest.mark.slow
@pytest.mark.parametrize("preset", ["alpha-beta-fast-review", "alpha-beta-slow-review"])
def test_alpha_beta_rows_raise_the_mean_if(preset):
    manifest = parse_config(preset)
    result = run_sweep(manifest.sweep, parallelism=8)
    report = trend_statistics(result, "alpha_beta")
    assert report.strictly_increasing


@pytest.mark.slow
@pytest.mark.parametrize("preset", ["cycle-refs-long-life", "cycle-refs-short-life"])
def test_review_cycle_and_reference_trends(preset):
    result = run_sweep(parse_config(preset).sweep, parallelism=8)
    refs_axis = result.spec.axes[result.axis_index("avg_refs")].values
    refs_step = {refs: step for step, (refs,) in enumerate(refs_axis)}
    assert set(refs_step) == {10, 20, 30, 40}

    report = trend_statistics(result, "review_cycle_months", fixed={"avg_refs": refs_step[30]})
    assert report.rho <= -0.8
    for refs in (10, 20, 40):
        report = trend_statistics(result, "review_cycle_months", fixed={"avg_refs": refs_step[refs]})
        assert report.rho <= -0.8

    cycles = result.spec.axes[result.axis_index("review_cycle_months")].values
    for step, (cycle,) in enumerate(cycles):
        if cycle > 12:
            continue
        mean = {
            refs: result.cell_at(avg_refs=refs_step[refs], review_cycle_months=step).mean
            for refs in (10, 20, 40)
        }
        assert mean[40] > mean[20] > mean[10]


@pytest.mark.slow
@pytest.mark.parametrize("preset", ["ieee-tac", "laa"])
def test_journal_presets_calibrate(preset):
    result = calibrate(parse_config(preset).calibration, parallelism=8)
    assert result.relative_error <= 0.15


@pytest.mark.slow
def test_many_workers_match_serial():
    spec = parse_config("cycle-refs-short-life").sweep.model_copy(update={"replications": 2})
    assert_frame_equal(run_sweep(spec, parallelism=1).to_frame(), run_sweep(spec, parallelism=8).to_frame())
