"""
Pydantic models for simulation configuration, run manifests and API payloads
"""
import itertools
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator


UINT64_MAX = 2**64 - 1

Scalar = Union[int, float]


class KernelParams(BaseModel):
    """Shape parameters of the citation-probability kernels"""
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    alpha: float = Field(default=80.0, description="Horizontal shift of the age curve (months)")
    beta: float = Field(default=60.0, gt=0, description="Slope scale of the age curve (months)")
    gamma: float = Field(default=36.0, gt=0, description="Citation-count scale")
    delta: float = Field(default=10.0, ge=0, description="Citation-count offset")


LONG_LIFE_KERNEL = KernelParams(alpha=100, beta=30, gamma=10)
SHORT_LIFE_KERNEL = KernelParams(alpha=15, beta=10, gamma=3)
DEFAULT_KERNEL = KernelParams()

PUBLISHED_KERNELS: Dict[str, KernelParams] = {
    "long-life": LONG_LIFE_KERNEL,
    "short-life": SHORT_LIFE_KERNEL,
    "default": DEFAULT_KERNEL,
}


class QualityDistribution(BaseModel):
    """Gamma distribution of intrinsic article quality, floored and clamped to integer levels"""
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    shape: float = Field(default=10.0, gt=0)
    scale: float = Field(default=0.45, gt=0)
    min_level: int = Field(default=1, ge=1)
    max_level: int = Field(default=10, le=10)

    @model_validator(mode="after")
    def check_levels(self) -> "QualityDistribution":
        if self.min_level > self.max_level:
            raise ValueError("min_level must not exceed max_level")
        return self

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale ** 2


class SimConfig(BaseModel):
    """Full description of one simulation run"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    num_journals: int = Field(default=10, ge=1)
    issues_per_year: int = Field(default=12, ge=1)
    articles_per_issue: int = Field(default=10, ge=1)
    years: int = Field(default=13, ge=1)
    review_cycle_months: int = Field(default=4, ge=0)
    avg_refs: int = Field(default=30, ge=1)
    warmup_months: int = Field(default=24, ge=0)
    max_attempts: int = Field(default=10000, ge=1)
    kernel: KernelParams = Field(default_factory=KernelParams)
    quality: QualityDistribution = Field(default_factory=QualityDistribution)
    seed: int = Field(default=0, ge=0, le=UINT64_MAX)

    @property
    def total_months(self) -> int:
        return self.years * 12

    @property
    def articles_per_journal_year(self) -> int:
        return self.issues_per_year * self.articles_per_issue

    @property
    def total_articles(self) -> int:
        return self.num_journals * self.articles_per_journal_year * self.years

    @property
    def review_gate_unsatisfiable(self) -> bool:
        """
        True when no article published after the warm-up can ever see a candidate
        old enough to pass the gate. Warm-up articles are themselves citable, so
        the oldest possible candidate is always the month-1 issue.
        """
        last_month = self.issue_month(self.years, self.issues_per_year)
        return last_month <= self.warmup_months or last_month - 1 <= self.review_cycle_months

    def issue_month(self, year: int, issue: int) -> int:
        """Publication month (1-based) of a 1-based issue within a 1-based year"""
        return (year - 1) * 12 + (issue - 1) * 12 // self.issues_per_year + 1

    def with_overrides(self, overrides: Dict[str, Any]) -> "SimConfig":
        """
        Return a validated copy with dotted-path fields replaced,
        e.g. {"kernel.alpha": 40, "review_cycle_months": 6}.
        """
        data = self.model_dump()
        for path, value in overrides.items():
            target = data
            *parents, leaf = path.split(".")
            for part in parents:
                target = target[part]
            target[leaf] = value
        return SimConfig.model_validate(data)


def _sweepable_fields() -> Tuple[str, ...]:
    names = [
        name for name in SimConfig.model_fields
        if name not in ("kernel", "quality", "seed")
    ]
    names += [f"kernel.{name}" for name in KernelParams.model_fields]
    names += [f"quality.{name}" for name in QualityDistribution.model_fields]
    return tuple(names)


SWEEPABLE_FIELDS = _sweepable_fields()


class AgeBand(BaseModel):
    """Inclusive band of reference ages in whole years; open-ended when max_age_years is None"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    min_age_years: int = Field(ge=0)
    max_age_years: Optional[int] = Field(default=None, ge=0)

    @property
    def label(self) -> str:
        if self.max_age_years is None:
            return f">{self.min_age_years - 1}" if self.min_age_years > 0 else ">=0"
        return f"{self.min_age_years}-{self.max_age_years}"

    def contains(self, age: int) -> bool:
        if age < self.min_age_years:
            return False
        return self.max_age_years is None or age <= self.max_age_years


DEFAULT_AGE_BANDS: Tuple[AgeBand, ...] = (
    AgeBand(min_age_years=0, max_age_years=5),
    AgeBand(min_age_years=6, max_age_years=15),
    AgeBand(min_age_years=16),
)


def age_band_partition_problem(bands) -> Optional[str]:
    """Describe why bands fail to partition [0, inf) without overlap, or None if they do"""
    if not bands:
        return "at least one age band is required"
    expected = 0
    for i, band in enumerate(bands):
        if band.min_age_years != expected:
            return f"band {i} starts at {band.min_age_years}, expected {expected}"
        if band.max_age_years is None:
            if i != len(bands) - 1:
                return "only the last band may be open-ended"
            return None
        if band.max_age_years < band.min_age_years:
            return f"band {i} ends before it starts"
        expected = band.max_age_years + 1
    return "the last band must be open-ended"


class SweepAxis(BaseModel):
    """
    One grid axis. A single-field axis may list plain values; a joint axis
    (e.g. alpha and beta moving together) lists one tuple per step.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    fields: Tuple[str, ...] = ()
    values: List[Tuple[Scalar, ...]]

    @model_validator(mode="before")
    @classmethod
    def normalize(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if not data.get("fields"):
            data["fields"] = [data.get("name")]
        values = data.get("values") or []
        data["values"] = [v if isinstance(v, (list, tuple)) else [v] for v in values]
        return data

    @model_validator(mode="after")
    def check_axis(self) -> "SweepAxis":
        if not self.values:
            raise ValueError(f"axis '{self.name}' has no values")
        for field in self.fields:
            if field not in SWEEPABLE_FIELDS:
                raise ValueError(f"axis '{self.name}' names unknown field '{field}'")
        for value in self.values:
            if len(value) != len(self.fields):
                raise ValueError(
                    f"axis '{self.name}' value {list(value)} does not match fields {list(self.fields)}"
                )
        return self

    def assignment(self, step: int) -> Dict[str, Scalar]:
        return dict(zip(self.fields, self.values[step]))

    def label(self, step: int) -> str:
        value = self.values[step]
        return ",".join(f"{v:g}" for v in value)


class SweepSpec(BaseModel):
    """A grid of simulation configs with replications"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    base: SimConfig = Field(default_factory=SimConfig)
    axes: List[SweepAxis] = Field(default_factory=list)
    replications: int = Field(default=20, ge=1)
    seed_base: int = Field(default=0, ge=0, le=UINT64_MAX)

    @model_validator(mode="after")
    def check_cells(self) -> "SweepSpec":
        names = [axis.name for axis in self.axes]
        if len(set(names)) != len(names):
            raise ValueError("axis names must be unique")
        fields = [f for axis in self.axes for f in axis.fields]
        if len(set(fields)) != len(fields):
            raise ValueError("a field may appear on only one axis")
        # every cell must be a valid SimConfig before anything runs
        for steps in self.cell_steps():
            try:
                self.cell_config(steps)
            except ValidationError as exc:
                first = exc.errors()[0]
                field = ".".join(str(p) for p in first.get("loc", ()))
                raise ValueError(
                    f"cell {self.cell_assignment(steps)} is invalid at {field}: {first.get('msg')}"
                ) from None
        return self

    @property
    def cell_count(self) -> int:
        count = 1
        for axis in self.axes:
            count *= len(axis.values)
        return count

    def cell_steps(self) -> List[Tuple[int, ...]]:
        """Axis step indices of every cell, in row-major grid order"""
        return list(itertools.product(*(range(len(axis.values)) for axis in self.axes)))

    def cell_assignment(self, steps: Tuple[int, ...]) -> Dict[str, Scalar]:
        assignment: Dict[str, Scalar] = {}
        for axis, step in zip(self.axes, steps):
            assignment.update(axis.assignment(step))
        return assignment

    def cell_config(self, steps: Tuple[int, ...]) -> SimConfig:
        return self.base.with_overrides(self.cell_assignment(steps))


class CalibrationSearch(BaseModel):
    """Coarse grid over kernel parameters; refinement moves around its best point"""
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    alpha: List[float] = Field(default_factory=lambda: [20.0, 40.0, 60.0, 80.0, 100.0, 150.0])
    beta: List[float] = Field(default_factory=lambda: [10.0, 20.0, 40.0, 60.0])
    gamma: List[float] = Field(default_factory=lambda: [3.0, 10.0, 36.0, 100.0])
    delta: float = Field(default=10.0, ge=0)
    min_step: float = Field(default=0.5, gt=0)

    @field_validator("alpha", "beta", "gamma")
    @classmethod
    def check_nonempty(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("search axis must list at least one value")
        return values

    @field_validator("beta", "gamma")
    @classmethod
    def check_positive(cls, values: List[float]) -> List[float]:
        if any(v <= 0 for v in values):
            raise ValueError("values must be > 0")
        return values


class CalibrationPreset(BaseModel):
    """Target journal: review cycle, reference count and the mean IF to reach"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    journal_title: Optional[str] = None
    real_if: Optional[float] = None
    review_cycle_months: int = Field(ge=0)
    avg_refs: int = Field(ge=1)
    target_if: float = Field(gt=0)
    base: SimConfig = Field(default_factory=SimConfig)
    search: CalibrationSearch = Field(default_factory=CalibrationSearch)
    budget: int = Field(default=200, ge=1)
    replications: int = Field(default=3, ge=1)
    tolerance: float = Field(default=0.05, gt=0)
    seed_base: int = Field(default=0, ge=0, le=UINT64_MAX)

    def base_config(self) -> SimConfig:
        return self.base.with_overrides({
            "review_cycle_months": self.review_cycle_months,
            "avg_refs": self.avg_refs,
        })


class CurveSpec(BaseModel):
    """Sample ranges for kernel-curve tabulation"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    params: Optional[KernelParams] = None  # None tabulates every published set
    n_max: int = Field(default=100, ge=0, le=100000)
    t_min: int = Field(default=-240, le=0, ge=-100000)


class EmitFlags(BaseModel):
    """Which artifacts a run writes"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    if_matrix: bool = True
    edges: bool = False
    ref_age_hist: bool = True
    summary: bool = True
    curves: bool = True
    sweep: bool = True
    calibration: bool = True


class RunKind(str, Enum):
    SIMULATE = "simulate"
    SWEEP = "sweep"
    CALIBRATE = "calibrate"
    CURVES = "curves"


_SEED_TARGETS = {
    RunKind.SIMULATE: ("simulation", "seed"),
    RunKind.SWEEP: ("sweep", "seed_base"),
    RunKind.CALIBRATE: ("calibration", "seed_base"),
}


class RunManifest(BaseModel):
    """A parsed, fully validated run description"""
    model_config = ConfigDict(extra="forbid")

    kind: RunKind = RunKind.SIMULATE
    description: Optional[str] = None
    output_dir: Optional[str] = None  # falls back to the output_dir setting
    emit: EmitFlags = Field(default_factory=EmitFlags)
    age_bands: List[AgeBand] = Field(default_factory=lambda: list(DEFAULT_AGE_BANDS))
    simulation: Optional[SimConfig] = None
    sweep: Optional[SweepSpec] = None
    calibration: Optional[CalibrationPreset] = None
    curves: Optional[CurveSpec] = None

    @model_validator(mode="before")
    @classmethod
    def fold_seed(cls, data: Any) -> Any:
        """A top-level `seed` lands on the seed field of the active section"""
        if not isinstance(data, dict) or "seed" not in data:
            return data
        data = dict(data)
        seed = data.pop("seed")
        kind = RunKind(data.get("kind", RunKind.SIMULATE))
        if kind in _SEED_TARGETS:
            section, field = _SEED_TARGETS[kind]
            block = dict(data.get(section) or {})
            block[field] = seed
            data[section] = block
        return data

    @model_validator(mode="after")
    def fill_active_section(self) -> "RunManifest":
        problem = age_band_partition_problem(self.age_bands)
        if problem:
            raise ValueError(f"age_bands: {problem}")
        if self.kind == RunKind.SIMULATE and self.simulation is None:
            self.simulation = SimConfig()
        elif self.kind == RunKind.SWEEP and self.sweep is None:
            self.sweep = SweepSpec()
        elif self.kind == RunKind.CURVES and self.curves is None:
            self.curves = CurveSpec()
        elif self.kind == RunKind.CALIBRATE and self.calibration is None:
            raise ValueError("a calibrate manifest needs a calibration section")
        return self

    def to_document(self) -> Dict[str, Any]:
        """Plain-data form suitable for YAML serialization"""
        return self.model_dump(mode="json", exclude_none=True)

    def with_seed(self, seed: int) -> "RunManifest":
        document = self.to_document()
        document["seed"] = seed
        return RunManifest.model_validate(document)

    def with_replications(self, replications: int) -> "RunManifest":
        document = self.to_document()
        for section in ("sweep", "calibration"):
            if section in document:
                document[section]["replications"] = replications
        return RunManifest.model_validate(document)


# ---------------------------------------------------------------------------
# HTTP payloads
# ---------------------------------------------------------------------------

class CurveRequest(BaseModel):
    """Request model for kernel-curve sampling"""
    params: KernelParams = Field(default_factory=KernelParams)
    n_max: int = Field(default=100, ge=0, le=10000)
    t_min: int = Field(default=-240, le=0, ge=-10000)


class CurveResponse(BaseModel):
    """Sampled kernel curves"""
    status: Literal["success"] = "success"
    params: KernelParams
    count_curve: List[Tuple[int, float]] = Field(..., description="(n, citation-count factor) pairs")
    age_curve: List[Tuple[int, float]] = Field(..., description="(t, age factor) pairs")


class SimulationResponse(BaseModel):
    """Summary of a completed simulation"""
    status: Literal["success"] = "success"
    total_articles: int
    citation_edges: int
    abandoned_slots: int
    duplicate_refs: int
    mean_average_if: Optional[float] = Field(
        None, description="Mean over journals of the average IF from year 3 to the last year"
    )
    impact_factors: Dict[str, List[Optional[float]]] = Field(
        ..., description="Per-journal IF series indexed by year, years 1-2 fixed at 1.0"
    )
    warnings: List[str] = Field(default_factory=list)
    runtime_seconds: float

    model_config = {
        "json_schema_extra": {
            "example": {
                "status": "success",
                "total_articles": 480,
                "citation_edges": 3120,
                "abandoned_slots": 0,
                "duplicate_refs": 4,
                "mean_average_if": 2.41,
                "impact_factors": {"1": [1.0, 1.0, 2.3, 2.5]},
                "warnings": [],
                "runtime_seconds": 0.12,
            }
        }
    }


class ErrorResponse(BaseModel):
    """Error response model"""
    status: Literal["error"] = "error"
    message: str = Field(..., description="Error message describing the issue")


class PresetSummary(BaseModel):
    """One shipped run manifest"""

    name: str
    kind: RunKind
    description: Optional[str] = None


class HealthCheckResponse(BaseModel):
    """Health check response model"""
    status: str = "healthy"
    version: str
    presets: List[str]
