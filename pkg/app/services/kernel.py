"""
Citation Kernel Service
Evaluates the citation-probability factors and samples article quality
"""
import math
from typing import List

import numpy as np

from app.errors import ContractViolation
from app.models import KernelParams, QualityDistribution


def citation_count_factor(n: int, params: KernelParams) -> float:
    """
    Effect of the citations an article already has on its chance of being cited.

    Args:
        n: Number of times the article has been cited (>= 0)
        params: Kernel parameters; gamma scales the curve, delta offsets it

    Returns:
        tanh((n + delta) / gamma)
    """
    if n < 0:
        raise ContractViolation(f"citation count must be >= 0, got {n}")
    return math.tanh((n + params.delta) / params.gamma)


def age_factor(t: int, params: KernelParams) -> float:
    """
    Effect of article age on its chance of being cited.

    Args:
        t: Cited publication month minus current month (<= 0)
        params: Kernel parameters; alpha shifts the curve, beta sets its slope

    Returns:
        0.5 * tanh((t + alpha) / beta) + 0.5
    """
    if t > 0:
        raise ContractViolation(f"article age must be <= 0 months, got {t}")
    return 0.5 * math.tanh((t + params.alpha) / params.beta) + 0.5


def cite_probability(quality: int, n: int, t: int, params: KernelParams) -> float:
    """
    Probability that one encounter with a candidate article ends in a citation:
    (Q / 10) * citation_count_factor(n) * age_factor(t).
    """
    if not 1 <= quality <= 10:
        raise ContractViolation(f"quality must be within [1, 10], got {quality}")
    return (quality / 10) * citation_count_factor(n, params) * age_factor(t, params)


def quantize_quality(draw: float, dist: QualityDistribution) -> int:
    """Floor a continuous draw, then clamp it into [min_level, max_level]"""
    level = math.floor(draw)
    return int(min(max(level, dist.min_level), dist.max_level))


def sample_quality(rng: np.random.Generator, dist: QualityDistribution) -> int:
    """Draw one integer quality level"""
    return quantize_quality(rng.gamma(dist.shape, dist.scale), dist)


def sample_quality_draws(rng: np.random.Generator, dist: QualityDistribution, size: int) -> np.ndarray:
    """Continuous (pre-floor) quality draws, for distribution checks"""
    return rng.gamma(dist.shape, dist.scale, size=size)


def count_factor_curve(params: KernelParams, n_max: int) -> np.ndarray:
    """citation_count_factor sampled at n = 0..n_max"""
    n = np.arange(n_max + 1)
    return np.tanh((n + params.delta) / params.gamma)


def age_factor_curve(params: KernelParams, t_min: int) -> np.ndarray:
    """age_factor sampled at t = t_min..0"""
    t = np.arange(t_min, 1)
    return 0.5 * np.tanh((t + params.alpha) / params.beta) + 0.5


class CitationKernel:
    """
    Table-backed evaluation of cite_probability for the simulation loop.

    Age factors are precomputed for every possible month gap and citation-count
    factors are extended on demand. Each lookup, scalar or vectorized, yields
    exactly the same double as the corresponding function call.
    """

    def __init__(self, params: KernelParams, max_age_months: int):
        self.params = params
        self.quality_factor: List[float] = [q / 10 for q in range(11)]
        self.age_table: List[float] = [age_factor(-age, params) for age in range(max_age_months + 1)]
        self.count_table: List[float] = []
        self._quality_array = np.array(self.quality_factor)
        self._age_array = np.array(self.age_table)
        self._count_array = np.empty(0)
        self._extend_counts(64)

    def _extend_counts(self, upto: int) -> None:
        start = len(self.count_table)
        self.count_table.extend(
            citation_count_factor(n, self.params) for n in range(start, upto + 1)
        )
        self._count_array = np.array(self.count_table)

    def count(self, n: int) -> float:
        if n >= len(self.count_table):
            self._extend_counts(2 * n)
        return self.count_table[n]

    def probability(self, quality: int, n: int, age_months: int) -> float:
        """cite_probability for a candidate `age_months` older than the citing article"""
        return self.quality_factor[quality] * self.count(n) * self.age_table[age_months]

    def probabilities(self, quality: np.ndarray, n: np.ndarray, age_months: np.ndarray) -> np.ndarray:
        """Element-wise probability() over integer arrays"""
        if len(n):
            self.count(int(n.max()))
        return self._quality_array[quality] * self._count_array[n] * self._age_array[age_months]
