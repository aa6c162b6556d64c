"""
Metrics Service
Impact factors, their averages and reference-age distributions of a completed run
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.errors import ContractViolation
from app.models import DEFAULT_AGE_BANDS, AgeBand, age_band_partition_problem
from app.services.engine import ArticleRecord, CitationLedger, SimResult

CONVENTION_YEARS = (1, 2)
CONVENTION_VALUE = 1.0


def publication_counts(articles: Sequence[ArticleRecord], num_journals: int, years: int) -> np.ndarray:
    """pubs[j - 1, y - 1] = articles journal j published in year y"""
    pubs = np.zeros((num_journals, years), dtype=np.int64)
    for article in articles:
        pubs[article.journal_id - 1, article.pub_year - 1] += 1
    return pubs


def impact_factor_terms(
    ledger: CitationLedger,
    articles: Sequence[ArticleRecord],
    journal: int,
    year: int,
) -> Tuple[int, int]:
    """Integer numerator and denominator of the two-year impact factor"""
    if year < 3:
        raise ContractViolation(f"impact factor needs two prior years, got year {year}")
    if year > ledger.years:
        raise ContractViolation(f"year {year} is past the end of the run ({ledger.years} years)")
    if not 1 <= journal <= ledger.num_journals:
        raise ContractViolation(f"unknown journal {journal}")
    cites = int(ledger.window_cites[journal - 1, year - 1])
    pubs = sum(
        1 for a in articles
        if a.journal_id == journal and a.pub_year in (year - 1, year - 2)
    )
    return cites, pubs


def impact_factor(
    ledger: CitationLedger,
    articles: Sequence[ArticleRecord],
    journal: int,
    year: int,
) -> float:
    """
    Citations made during `year` to the journal's articles of the two previous
    years, divided by the number of those articles. NaN when the window holds
    no publications.
    """
    cites, pubs = impact_factor_terms(ledger, articles, journal, year)
    if pubs == 0:
        return float("nan")
    return cites / pubs


@dataclass
class ImpactFactorMatrix:
    """Per-journal, per-year IF values; values[j - 1, y - 1]"""
    values: np.ndarray
    convention_years: Tuple[int, ...] = CONVENTION_YEARS

    @property
    def num_journals(self) -> int:
        return self.values.shape[0]

    @property
    def years(self) -> int:
        return self.values.shape[1]

    def value(self, journal: int, year: int) -> float:
        return float(self.values[journal - 1, year - 1])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            self.values,
            index=pd.Index(range(1, self.num_journals + 1), name="journal"),
            columns=[str(y) for y in range(1, self.years + 1)],
        )
        return frame

    def series(self) -> Dict[str, List[Optional[float]]]:
        return {
            str(j + 1): [None if np.isnan(v) else float(v) for v in row]
            for j, row in enumerate(self.values)
        }


def impact_factor_matrix(result: SimResult) -> ImpactFactorMatrix:
    """Every journal's IF for every year; years 1-2 carry the convention value"""
    config = result.config
    pubs = publication_counts(result.articles, config.num_journals, config.years)
    window_pubs = np.zeros_like(pubs)
    window_pubs[:, 2:] = pubs[:, 1:-1] + pubs[:, :-2]
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(
            window_pubs > 0,
            result.ledger.window_cites / np.maximum(window_pubs, 1),
            np.nan,
        )
    values = values.astype(float)
    years_with_convention = [y for y in CONVENTION_YEARS if y <= config.years]
    for year in years_with_convention:
        values[:, year - 1] = CONVENTION_VALUE
    return ImpactFactorMatrix(values=values, convention_years=tuple(years_with_convention))


def average_if(matrix: ImpactFactorMatrix, journal: int, year_from: int, year_to: int) -> float:
    """Mean of computed IF values over an inclusive window of years"""
    if not 1 <= journal <= matrix.num_journals:
        raise ContractViolation(f"unknown journal {journal}")
    if matrix.convention_years and year_from <= max(matrix.convention_years):
        raise ContractViolation(
            f"averaging window {year_from}-{year_to} touches convention years {matrix.convention_years}"
        )
    if not year_from <= year_to <= matrix.years:
        raise ContractViolation(f"invalid averaging window {year_from}-{year_to}")
    return float(np.mean(matrix.values[journal - 1, year_from - 1:year_to]))


def mean_average_if(matrix: ImpactFactorMatrix, year_from: int = 3, year_to: Optional[int] = None) -> float:
    """Run score: average_if from year_from to the last year, averaged over journals"""
    year_to = matrix.years if year_to is None else year_to
    per_journal = [
        average_if(matrix, journal, year_from, year_to)
        for journal in range(1, matrix.num_journals + 1)
    ]
    return float(np.mean(per_journal))


@dataclass
class ReferenceAgeHistogram:
    """Share of references per age band, ages in whole years relative to the citing year"""
    journal: Optional[int]
    bands: List[Tuple[int, Optional[int], float]]
    counts: List[int]
    total: int
    empty: bool = False
    truncated: bool = False
    labels: List[str] = field(default_factory=list)

    def share(self, index: int) -> float:
        return self.bands[index][2]


def reference_age_distribution(
    ledger: CitationLedger,
    articles: Sequence[ArticleRecord],
    journal: Optional[int] = None,
    bands: Sequence[AgeBand] = DEFAULT_AGE_BANDS,
) -> ReferenceAgeHistogram:
    """
    Percentage of a journal's outgoing references falling in each age band.
    journal=None pools every journal. `truncated` marks bands the run is too
    short to fill completely.
    """
    problem = age_band_partition_problem(bands)
    if problem:
        raise ContractViolation(f"age bands do not partition [0, inf): {problem}")

    counts = [0] * len(bands)
    for citing_id, cited_id in ledger.edges:
        citing = articles[citing_id - 1]
        if journal is not None and citing.journal_id != journal:
            continue
        age = citing.pub_year - articles[cited_id - 1].pub_year
        for i, band in enumerate(bands):
            if band.contains(age):
                counts[i] += 1
                break

    total = sum(counts)
    max_age = ledger.years - 1
    truncated = (
        any(b.max_age_years is not None and b.max_age_years > max_age for b in bands)
        or bands[-1].min_age_years > max_age
    )
    if total == 0:
        percentages = [0.0] * len(bands)
    else:
        percentages = [100.0 * c / total for c in counts]

    return ReferenceAgeHistogram(
        journal=journal,
        bands=[(b.min_age_years, b.max_age_years, pct) for b, pct in zip(bands, percentages)],
        counts=counts,
        total=total,
        empty=total == 0,
        truncated=truncated,
        labels=[b.label for b in bands],
    )
