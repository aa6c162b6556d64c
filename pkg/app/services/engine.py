"""
Simulation Engine Service
Publishes articles month by month and fills their reference lists by rejection sampling
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from app.models import SimConfig
from app.services.kernel import CitationKernel, sample_quality


logger = logging.getLogger(__name__)

# attempts evaluated per unfilled slot in one block
ATTEMPTS_PER_SLOT = 16


def month_year(month: int) -> int:
    """Calendar year (1-based) of a 1-based month"""
    return (month - 1) // 12 + 1


@dataclass(slots=True)
class ArticleRecord:
    """One published article"""
    id: int
    journal_id: int
    pub_month: int
    quality: int
    ref_target: int
    times_cited: int = 0
    out_refs: List[int] = field(default_factory=list)

    @property
    def pub_year(self) -> int:
        return month_year(self.pub_month)


@dataclass
class CitationLedger:
    """
    Citation edges in creation order, plus the impact-factor numerators:
    window_cites[j - 1, y - 1] counts citations made during year y to
    journal j's articles published in years y - 1 and y - 2.
    """
    num_journals: int
    years: int
    edges: List[Tuple[int, int]] = field(default_factory=list)
    window_cites: np.ndarray = None

    def __post_init__(self):
        if self.window_cites is None:
            self.window_cites = np.zeros((self.num_journals, self.years), dtype=np.int64)

    def record(self, citing: ArticleRecord, cited: ArticleRecord) -> None:
        self.edges.append((citing.id, cited.id))
        year = citing.pub_year
        if 1 <= year - cited.pub_year <= 2:
            self.window_cites[cited.journal_id - 1, year - 1] += 1


class AttemptStream:
    """
    Uniform pairs for citation attempts.

    Attempt i of a run takes doubles 2i (candidate) and 2i + 1 (accept) of one
    generator. Attempts are handed out in blocks, but the pairing does not
    depend on the block size or on how many attempts each caller looks at.
    """

    def __init__(self, rng: np.random.Generator, block: int = 1 << 15):
        self._rng = rng
        self._block = block
        self._pairs = np.empty((0, 2))
        self._pos = 0

    def peek(self, count: int) -> np.ndarray:
        """The next `count` attempts as a (count, 2) array, without consuming them"""
        available = len(self._pairs) - self._pos
        if available < count:
            fresh = self._rng.random(2 * max(self._block, count - available)).reshape(-1, 2)
            self._pairs = np.concatenate([self._pairs[self._pos:], fresh])
            self._pos = 0
        return self._pairs[self._pos:self._pos + count]

    def advance(self, count: int) -> None:
        self._pos += count


class SimulationStreams:
    """
    Random streams of one run. A SeedSequence built from the run seed spawns
    three PCG64 generators: quality draws, reference-count draws, and the
    citation attempts (candidate draw, then accept draw, per attempt).
    """

    def __init__(self, seed: int):
        quality_seq, refs_seq, citation_seq = np.random.SeedSequence(seed).spawn(3)
        self.quality = np.random.Generator(np.random.PCG64(quality_seq))
        self.references = np.random.Generator(np.random.PCG64(refs_seq))
        self.citation = AttemptStream(np.random.Generator(np.random.PCG64(citation_seq)))


def draw_reference_count(rng: np.random.Generator, avg_refs: int) -> int:
    """
    Target number of references for a new article: floor of a uniform
    draw on [0, 2 * avg_refs), raised to at least 10.
    """
    count = math.floor(rng.random() * avg_refs * 2)
    return max(count, 10)


@dataclass
class SimResult:
    """A completed run"""
    config: SimConfig
    articles: List[ArticleRecord]
    ledger: CitationLedger
    requested_slots: int = 0
    abandoned_slots: int = 0
    duplicate_refs: int = 0
    candidate_draws: int = 0
    runtime_seconds: float = 0.0
    warnings: List[str] = field(default_factory=list)

    @property
    def edge_count(self) -> int:
        return len(self.ledger.edges)

    @property
    def abandoned_fraction(self) -> float:
        if self.requested_slots == 0:
            return 0.0
        return self.abandoned_slots / self.requested_slots

    @property
    def duplicate_rate(self) -> float:
        if not self.ledger.edges:
            return 0.0
        return self.duplicate_refs / len(self.ledger.edges)

    def diagnostics(self) -> Dict[str, float]:
        return {
            "total_articles": len(self.articles),
            "citation_edges": self.edge_count,
            "requested_slots": self.requested_slots,
            "abandoned_slots": self.abandoned_slots,
            "abandoned_fraction": self.abandoned_fraction,
            "duplicate_refs": self.duplicate_refs,
            "duplicate_rate": self.duplicate_rate,
            "candidate_draws": self.candidate_draws,
            "runtime_seconds": self.runtime_seconds,
        }


class CitationSimulator:
    """
    Month-by-month generative loop.

    Articles are created year -> issue -> journal -> slot. Once the current
    month is past the warm-up, every new article fills its reference slots by
    drawing uniform candidates among all earlier articles; a candidate older
    than the review cycle is accepted with probability cite_probability, and
    its citation count is bumped at once so later draws see it.

    Attempts are decided a block at a time. Inside a block only a candidate
    drawn for the second time can have gained citations since the block was
    evaluated, so those attempts are re-decided one by one and the outcome
    equals a strictly sequential walk over the same attempts.
    """

    def __init__(self, config: SimConfig):
        self.config = config
        self.kernel = CitationKernel(config.kernel, config.total_months)
        self._months = np.zeros(0, dtype=np.int64)
        self._quality = np.zeros(0, dtype=np.int64)
        self._cited = np.zeros(0, dtype=np.int64)

    def run(self) -> SimResult:
        config = self.config
        started = time.perf_counter()
        streams = SimulationStreams(config.seed)
        articles: List[ArticleRecord] = []
        ledger = CitationLedger(config.num_journals, config.years)
        result = SimResult(config=config, articles=articles, ledger=ledger)

        self._months = np.zeros(config.total_articles, dtype=np.int64)
        self._quality = np.zeros(config.total_articles, dtype=np.int64)
        self._cited = np.zeros(config.total_articles, dtype=np.int64)

        # articles published up to and including each month
        published_by_month = [0] * (config.total_months + 1)
        last_month = 0

        for year in range(1, config.years + 1):
            for issue in range(1, config.issues_per_year + 1):
                month = config.issue_month(year, issue)
                for m in range(last_month + 1, month):
                    published_by_month[m] = len(articles)
                last_month = max(last_month, month - 1)
                for journal in range(1, config.num_journals + 1):
                    for _ in range(config.articles_per_issue):
                        article = ArticleRecord(
                            id=len(articles) + 1,
                            journal_id=journal,
                            pub_month=month,
                            quality=sample_quality(streams.quality, config.quality),
                            ref_target=draw_reference_count(streams.references, config.avg_refs),
                        )
                        if month > config.warmup_months:
                            eligible_month = month - config.review_cycle_months - 1
                            eligible = published_by_month[eligible_month] if eligible_month > 0 else 0
                            self._fill_references(article, articles, eligible, ledger, streams, result)
                        self._months[article.id - 1] = month
                        self._quality[article.id - 1] = article.quality
                        articles.append(article)
                published_by_month[month] = len(articles)

        result.duplicate_refs = sum(len(a.out_refs) - len(set(a.out_refs)) for a in articles)
        result.runtime_seconds = time.perf_counter() - started

        if config.review_gate_unsatisfiable:
            result.warnings.append(
                "review cycle leaves no citable candidates after the warm-up; no citations were made"
            )
        if result.abandoned_slots:
            result.warnings.append(
                f"{result.abandoned_slots} reference slots abandoned after {config.max_attempts} attempts"
            )
        for warning in result.warnings:
            logger.warning(warning)

        logger.info(
            f"Simulation complete: {len(articles)} articles, {result.edge_count} citations, "
            f"time: {result.runtime_seconds:.2f}s"
        )
        return result

    def _fill_references(
        self,
        article: ArticleRecord,
        articles: List[ArticleRecord],
        eligible: int,
        ledger: CitationLedger,
        streams: SimulationStreams,
        result: SimResult,
    ) -> None:
        config = self.config
        result.requested_slots += article.ref_target
        if eligible == 0:
            # nothing passes the review gate yet
            result.abandoned_slots += article.ref_target
            return

        kernel = self.kernel
        attempts = streams.citation
        pool = article.id - 1
        month = article.pub_month
        cycle = config.review_cycle_months
        max_attempts = config.max_attempts
        slots_left = article.ref_target
        used_in_slot = 0

        while slots_left:
            size = min(slots_left * ATTEMPTS_PER_SLOT, slots_left * max_attempts - used_in_slot)
            pairs = attempts.peek(size)
            candidates = (pairs[:, 0] * pool).astype(np.int64)
            ages = month - self._months[candidates]
            gate = ages > cycle
            p = kernel.probabilities(self._quality[candidates], self._cited[candidates], ages)
            accepted = gate & (pairs[:, 1] < p)
            repeated = np.ones(size, dtype=bool)
            repeated[np.unique(candidates, return_index=True)[1]] = False
            events = np.flatnonzero(accepted | repeated)

            # block position where the current slot's attempts began
            slot_start = -used_in_slot
            for pos, index, age, passes, u, again in zip(
                events.tolist(),
                candidates[events].tolist(),
                ages[events].tolist(),
                gate[events].tolist(),
                pairs[events, 1].tolist(),
                repeated[events].tolist(),
            ):
                while slots_left and pos >= slot_start + max_attempts:
                    slots_left -= 1
                    result.abandoned_slots += 1
                    slot_start += max_attempts
                if not slots_left:
                    break
                candidate = articles[index]
                if again and not (
                    passes and u < kernel.probability(candidate.quality, candidate.times_cited, age)
                ):
                    continue
                article.out_refs.append(candidate.id)
                candidate.times_cited += 1
                self._cited[index] += 1
                ledger.record(article, candidate)
                slots_left -= 1
                slot_start = pos + 1
                if not slots_left:
                    break

            while slots_left and size >= slot_start + max_attempts:
                slots_left -= 1
                result.abandoned_slots += 1
                slot_start += max_attempts

            consumed = slot_start if not slots_left else size
            used_in_slot = size - slot_start if slots_left else 0
            attempts.advance(consumed)
            result.candidate_draws += consumed


def run_simulation(config: SimConfig) -> SimResult:
    """Run one simulation to completion"""
    return CitationSimulator(config).run()
