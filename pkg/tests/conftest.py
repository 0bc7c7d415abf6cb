"""Shared fixtures and random-corpus builders for the test suite."""

from pathlib import Path

import numpy as np
import pytest

from risingstars.corpus import Corpus, PaperRecord

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def three_papers_path() -> Path:
    return DATA_DIR / "three_papers.jsonl"


def make_random_corpus(
    rng: np.random.Generator,
    n_papers: int = 60,
    n_authors: int = 20,
    n_venues: int = 5,
    year_lo: int = 2000,
    year_hi: int = 2010,
) -> Corpus:
    """Random corpus for property tests: refs always point to earlier years."""
    papers: dict[int, PaperRecord] = {}
    by_year: list[tuple[int, int]] = []  # (paper_id, year), generation order
    for pid in range(n_papers):
        year = int(rng.integers(year_lo, year_hi + 1))
        k = int(rng.integers(1, 4))
        authors = tuple(
            int(a) for a in rng.choice(n_authors, size=min(k, n_authors), replace=False)
        )
        earlier = [p for p, y in by_year if y < year]
        n_refs = int(rng.integers(0, min(len(earlier), 5) + 1)) if earlier else 0
        refs = frozenset(
            int(r) for r in rng.choice(earlier, size=n_refs, replace=False)
        ) if n_refs else frozenset()
        venue = int(rng.integers(0, n_venues)) if rng.random() > 0.15 else None
        papers[pid] = PaperRecord(
            paper_id=pid,
            title=f"paper {pid}",
            abstract=f"abstract {pid}",
            year=year,
            venue=venue,
            authors=authors,
            refs=refs,
        )
        by_year.append((pid, year))
    return Corpus(papers=papers)
