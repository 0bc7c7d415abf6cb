"""Citation corpus: JSON-lines ingest, yearly snapshots, cohort selection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

_REQUIRED_KEYS = ("id", "title", "abstract", "year", "venue", "authors", "refs")


@dataclass(frozen=True, slots=True)
class PaperRecord:
    """One paper. ``authors`` keeps input order; index 0 is the first author."""

    paper_id: int
    title: str
    abstract: str
    year: int
    venue: int | None
    authors: tuple[int, ...]
    refs: frozenset[int]


@dataclass(slots=True)
class Corpus:
    """All loaded papers keyed by id, in file order."""

    papers: dict[int, PaperRecord]

    def __len__(self) -> int:
        return len(self.papers)

    def snapshot(self, cutoff_year: int) -> "CorpusSnapshot":
        return snapshot(self, cutoff_year)


@dataclass(slots=True)
class CorpusSnapshot:
    """Papers strictly before ``cutoff_year`` plus a citation index.

    ``citations`` counts, per included paper, the included papers citing it.
    Dangling references (targets outside the snapshot) never count.
    """

    cutoff_year: int
    papers: dict[int, PaperRecord]
    citations: dict[int, int]
    author_papers: dict[int, list[int]]

    def paper_count(self, author_id: int) -> int:
        return len(self.author_papers.get(author_id, ()))

    def citation_count(self, author_id: int) -> int:
        """Total citations to the author's snapshot papers (self-citations included)."""
        return sum(self.citations[p] for p in self.author_papers.get(author_id, ()))


def _is_int(value: object) -> bool:
    return type(value) is int


def _parse_paper(obj: object, lineno: int) -> PaperRecord:
    if not isinstance(obj, dict):
        raise ValueError(f"line {lineno}: paper record must be a JSON object")
    missing = [k for k in _REQUIRED_KEYS if k not in obj]
    if missing:
        raise ValueError(f"line {lineno}: missing key {missing[0]!r}")
    if not _is_int(obj["id"]):
        raise ValueError(f"line {lineno}: 'id' must be an integer")
    if not isinstance(obj["title"], str) or not isinstance(obj["abstract"], str):
        raise ValueError(f"line {lineno}: 'title' and 'abstract' must be strings")
    if not _is_int(obj["year"]):
        raise ValueError(f"line {lineno}: 'year' must be an integer")
    venue = obj["venue"]
    if venue is not None and not _is_int(venue):
        raise ValueError(f"line {lineno}: 'venue' must be an integer or null")
    authors = obj["authors"]
    if (
        not isinstance(authors, list)
        or not authors
        or not all(_is_int(a) for a in authors)
    ):
        raise ValueError(f"line {lineno}: 'authors' must be a non-empty integer array")
    refs = obj["refs"]
    if not isinstance(refs, list) or not all(_is_int(r) for r in refs):
        raise ValueError(f"line {lineno}: 'refs' must be an integer array")

    # Dirty-data guards: author list deduped preserving order (position 0 must
    # stay the first author), reference list treated as a set, self-references dropped.
    seen: set[int] = set()
    unique_authors = tuple(a for a in authors if not (a in seen or seen.add(a)))
    return PaperRecord(
        paper_id=obj["id"],
        title=obj["title"],
        abstract=obj["abstract"],
        year=obj["year"],
        venue=venue,
        authors=unique_authors,
        refs=frozenset(r for r in refs if r != obj["id"]),
    )


def load_corpus(path: str | Path) -> Corpus:
    """Read a UTF-8 JSON-lines corpus, one paper object per line.

    Raises ValueError naming the offending line for malformed input and the
    offending id for duplicate papers.
    """
    papers: dict[int, PaperRecord] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            record = _parse_paper(obj, lineno)
            if record.paper_id in papers:
                raise ValueError(f"duplicate paper id {record.paper_id}")
            papers[record.paper_id] = record
    return Corpus(papers=papers)


def snapshot(corpus: Corpus, cutoff_year: int) -> CorpusSnapshot:
    """Restrict the corpus to papers with year < cutoff_year and index citations."""
    included = {
        pid: rec for pid, rec in corpus.papers.items() if rec.year < cutoff_year
    }
    citations = dict.fromkeys(included, 0)
    author_papers: dict[int, list[int]] = {}
    for pid, rec in included.items():
        for author in rec.authors:
            author_papers.setdefault(author, []).append(pid)
        for ref in rec.refs:
            if ref in citations:
                citations[ref] += 1
    return CorpusSnapshot(
        cutoff_year=cutoff_year,
        papers=included,
        citations=citations,
        author_papers=author_papers,
    )


def identify_cohort(corpus: Corpus, first_author_year: int) -> list[int]:
    """Authors whose earliest first-author paper appeared in exactly that year."""
    earliest: dict[int, int] = {}
    for rec in corpus.papers.values():
        lead = rec.authors[0]
        if lead not in earliest or rec.year < earliest[lead]:
            earliest[lead] = rec.year
    return sorted(a for a, y in earliest.items() if y == first_author_year)


def citation_increments(
    corpus: Corpus, author_ids: list[int], t: int, delta_t: int
) -> dict[int, int]:
    """Citations gained between the snapshot at t and the end of year t + delta_t.

    Counts citations over papers with year <= t + delta_t minus citations over
    papers with year < t, so the gain can never be negative. Both snapshots
    are built once and shared across all requested authors.
    """
    now = snapshot(corpus, t)
    later = snapshot(corpus, t + delta_t + 1)
    return {a: later.citation_count(a) - now.citation_count(a) for a in author_ids}


def citation_increment(corpus: Corpus, author_id: int, t: int, delta_t: int) -> int:
    """Single-author convenience wrapper over citation_increments."""
    return citation_increments(corpus, [author_id], t, delta_t)[author_id]
