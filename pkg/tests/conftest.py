"""
Shared fixtures for the simulator test suite
"""
from collections import Counter

import pytest

from app.models import KernelParams, SimConfig
from app.services.engine import month_year


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow reproductions")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_config() -> SimConfig:
    """Three journals over five years; runs in well under a second"""
    return SimConfig(
        num_journals=3,
        issues_per_year=12,
        articles_per_issue=3,
        years=5,
        review_cycle_months=4,
        avg_refs=12,
        warmup_months=12,
        kernel=KernelParams(alpha=100, beta=30, gamma=10, delta=10),
        seed=7,
    )


def assert_engine_invariants(result):
    """Temporal sanity, conservation, budget, warm-up and ledger consistency"""
    config = result.config
    articles = result.articles
    by_id = {a.id: a for a in articles}

    assert [a.id for a in articles] == list(range(1, len(articles) + 1))

    received = Counter()
    for article in articles:
        assert len(article.out_refs) <= article.ref_target
        if article.pub_month <= config.warmup_months:
            assert article.out_refs == []
        for cited_id in article.out_refs:
            assert cited_id < article.id
            cited = by_id[cited_id]
            assert article.pub_month - cited.pub_month > config.review_cycle_months
            received[cited_id] += 1

    for article in articles:
        assert article.times_cited == received[article.id]

    total_refs = sum(len(a.out_refs) for a in articles)
    assert sum(a.times_cited for a in articles) == len(result.ledger.edges) == total_refs

    # window numerators recomputed from the raw edges
    expected = Counter()
    for citing_id, cited_id in result.ledger.edges:
        citing, cited = by_id[citing_id], by_id[cited_id]
        if month_year(citing.pub_month) - month_year(cited.pub_month) in (1, 2):
            expected[(cited.journal_id, month_year(citing.pub_month))] += 1
    for journal in range(1, config.num_journals + 1):
        for year in range(1, config.years + 1):
            assert result.ledger.window_cites[journal - 1, year - 1] == expected[(journal, year)]
