"""Per-author feature extraction: 18 columns in five blocks.

Blocks (column indices are 0-based):

* author   F1-F3   paper count, citation count, citations per paper
* social   F4-F9   co-author counts/citations and rank scores on ACN/ACCN
* venue    F10-F12 venue citation means and venue rank scores
* content  F13-F14 topic diversity and spread citation mass
* temporal F15-F18 one- and two-year citation and paper velocities

Empty aggregates (no co-authors, no venues, no papers in a window) are 0.
Rank scores are multiplied by 1e6 here, at extraction time, nowhere else.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, CorpusSnapshot, snapshot
from .graphs import PageRankScores
from .topics import TopicModel, authority, doc_entropy

FEATURE_NAMES = tuple(f"F{i}" for i in range(1, 19))

FEATURE_GROUPS: dict[str, tuple[int, ...]] = {
    "author": (0, 1, 2),
    "social": (3, 4, 5, 6, 7, 8),
    "venue": (9, 10, 11),
    "content": (12, 13),
    "temporal": (14, 15, 16, 17),
}


@dataclass(slots=True)
class FeatureMatrix:
    author_ids: list[int]
    values: np.ndarray  # (n_authors, 18) float64
    transformed: bool = False
    provenance: dict = field(default_factory=dict)

    def row(self, author_id: int) -> np.ndarray:
        return self.values[self.author_ids.index(author_id)]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, FEATURE_NAMES.index(name)]


def _mean(values: list[float]) -> float:
    return float(sum(values) / len(values)) if values else 0.0


def author_features(snap: CorpusSnapshot, author_id: int) -> tuple[float, float, float]:
    papers = snap.paper_count(author_id)
    cites = snap.citation_count(author_id)
    ratio = cites / papers if papers else 0.0
    return float(papers), float(cites), float(ratio)


def coauthors(snap: CorpusSnapshot, author_id: int) -> set[int]:
    others: set[int] = set()
    for pid in snap.author_papers.get(author_id, ()):
        others.update(snap.papers[pid].authors)
    others.discard(author_id)
    return others


def social_features(
    snap: CorpusSnapshot,
    author_id: int,
    acn_scores: PageRankScores,
    accn_scores: PageRankScores,
) -> tuple[float, ...]:
    """F4-F9. Expects already-rescaled rank scores; absent nodes score 0."""
    partners = sorted(coauthors(snap, author_id))
    f4 = float(len(partners))
    f5 = _mean([float(snap.citation_count(c)) for c in partners])
    f6 = acn_scores.get(author_id)
    f7 = accn_scores.get(author_id)
    f8 = _mean([acn_scores.get(c) for c in partners])
    f9 = _mean([accn_scores.get(c) for c in partners])
    return f4, f5, f6, f7, f8, f9


def venue_citation_means(snap: CorpusSnapshot) -> dict[int, float]:
    """Mean snapshot citation count of each venue's papers."""
    totals: dict[int, list[int]] = {}
    for pid, rec in snap.papers.items():
        if rec.venue is not None:
            totals.setdefault(rec.venue, []).append(snap.citations[pid])
    return {v: sum(counts) / len(counts) for v, counts in totals.items()}


def venue_features(
    snap: CorpusSnapshot,
    author_id: int,
    venue_means: dict[int, float],
    vccn_scores: PageRankScores,
    t: int,
) -> tuple[float, float, float]:
    """F10-F12, averaged per paper (venues count once per paper); venueless skipped."""
    all_quality: list[float] = []
    recent_quality: list[float] = []
    rank: list[float] = []
    for pid in snap.author_papers.get(author_id, ()):
        rec = snap.papers[pid]
        if rec.venue is None:
            continue
        quality = venue_means.get(rec.venue, 0.0)
        all_quality.append(quality)
        if rec.year in (t - 2, t - 1):
            recent_quality.append(quality)
        rank.append(vccn_scores.get(rec.venue))
    return _mean(all_quality), _mean(recent_quality), _mean(rank)


def content_features(
    model: TopicModel, snap: CorpusSnapshot, author_id: int
) -> tuple[float, float]:
    """F13 mean topic entropy of the author's modeled papers, F14 spread citation mass."""
    index = model.doc_index()
    modeled = [pid for pid in snap.author_papers.get(author_id, ()) if pid in index]
    f13 = _mean([doc_entropy(model, pid) for pid in modeled])
    f14 = authority(model, snap.citations, modeled) if modeled else 0.0
    return f13, f14


def temporal_features(
    snap_t: CorpusSnapshot,
    snap_t1: CorpusSnapshot,
    snap_t2: CorpusSnapshot,
    author_id: int,
) -> tuple[float, float, float, float]:
    c_t = snap_t.citation_count(author_id)
    c_t1 = snap_t1.citation_count(author_id)
    c_t2 = snap_t2.citation_count(author_id)
    n_t = snap_t.paper_count(author_id)
    n_t1 = snap_t1.paper_count(author_id)
    n_t2 = snap_t2.paper_count(author_id)
    return (
        float(c_t - c_t1),
        (c_t - c_t2) / 2.0,
        float(n_t - n_t1),
        (n_t - n_t2) / 2.0,
    )


def extract_features(
    corpus: Corpus,
    cohort: list[int],
    t: int,
    acn_pr: PageRankScores,
    accn_pr: PageRankScores,
    vccn_pr: PageRankScores,
    model: TopicModel,
    provenance: dict | None = None,
) -> FeatureMatrix:
    """Assemble the full matrix for the cohort at snapshot year t."""
    snap_t = snapshot(corpus, t)
    snap_t1 = snapshot(corpus, t - 1)
    snap_t2 = snapshot(corpus, t - 2)
    acn_scaled = acn_pr.rescale() if not acn_pr.rescaled else acn_pr
    accn_scaled = accn_pr.rescale() if not accn_pr.rescaled else accn_pr
    vccn_scaled = vccn_pr.rescale() if not vccn_pr.rescaled else vccn_pr
    venue_means = venue_citation_means(snap_t)

    values = np.zeros((len(cohort), 18), dtype=np.float64)
    for i, author in enumerate(cohort):
        values[i, 0:3] = author_features(snap_t, author)
        values[i, 3:9] = social_features(snap_t, author, acn_scaled, accn_scaled)
        values[i, 9:12] = venue_features(snap_t, author, venue_means, vccn_scaled, t)
        values[i, 12:14] = content_features(model, snap_t, author)
        values[i, 14:18] = temporal_features(snap_t, snap_t1, snap_t2, author)
    meta = dict(provenance or {})
    meta.setdefault("snapshot_year", t)
    return FeatureMatrix(author_ids=list(cohort), values=values, provenance=meta)


def log_transform(matrix: FeatureMatrix) -> FeatureMatrix:
    """Apply ln(1 + f) to every cell. A matrix can only be transformed once."""
    if matrix.transformed:
        raise ValueError("feature matrix already log-transformed")
    return FeatureMatrix(
        author_ids=list(matrix.author_ids),
        values=np.log1p(matrix.values),
        transformed=True,
        provenance=dict(matrix.provenance),
    )


def save_features(matrix: FeatureMatrix, path: str | Path) -> None:
    """CSV with 6-significant-digit cells plus a JSON sidecar for provenance."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("author_id," + ",".join(FEATURE_NAMES) + ",transformed\n")
        flag = "1" if matrix.transformed else "0"
        for author, row in zip(matrix.author_ids, matrix.values):
            cells = ",".join(f"{x:.6g}" for x in row)
            fh.write(f"{author},{cells},{flag}\n")
    sidecar = path.with_name(path.name + ".meta.json")
    payload = {"transformed": matrix.transformed, "provenance": matrix.provenance}
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_features(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = ["author_id", *FEATURE_NAMES, "transformed"]
        if header != expected:
            raise ValueError(f"unexpected feature CSV header: {header}")
        author_ids: list[int] = []
        rows: list[list[float]] = []
        flags: set[str] = set()
        for row in reader:
            author_ids.append(int(row[0]))
            rows.append([float(x) for x in row[1:19]])
            flags.add(row[19])
    transformed = flags == {"1"}
    provenance: dict = {}
    sidecar = path.with_name(path.name + ".meta.json")
    if sidecar.exists():
        with open(sidecar, encoding="utf-8") as fh:
            payload = json.load(fh)
        provenance = payload.get("provenance", {})
        transformed = payload.get("transformed", transformed)
    return FeatureMatrix(
        author_ids=author_ids,
        values=np.asarray(rows, dtype=np.float64).reshape(len(author_ids), 18),
        transformed=transformed,
        provenance=provenance,
    )
