"""Synthetic bibliometric corpus with planted author quality.

The generator plants a per-author fitness drawn lognormal(0, 1) and a topic
assignment, then grows a citation network year by year. Papers choose
references in proportion to (indegree + 1) ** attachment_exponent times the
cited paper's fitness ** signal_strength, where a paper's fitness is the
geometric mean over its authors; the sampling weights are frozen at the start
of each year, and references always point to strictly earlier years.

Authors split into veterans, who debut in the first year, and a young cohort
whose first first-authored paper lands exactly in cohort_year. Young authors
may co-author papers up to three years before that, so their early citation
history is nonzero without changing their cohort membership.

The output directory receives corpus.jsonl, truth.csv (the planted fitness
and topic per author), and manifest.json carrying SHA-256 hashes of both
files. Identical configs produce byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

VENUELESS_RATE = 0.03
MAX_COAUTHORS = 2
SAME_TOPIC_WEIGHT = 4.0
TITLE_WORDS = 6
ABSTRACT_WORDS = 40
OWN_TOPIC_RATE = 0.8
COAUTHOR_LEAD_YEARS = 3


@dataclass(frozen=True, slots=True)
class SynthConfig:
    n_authors: int = 300
    n_venues: int = 8
    first_year: int = 2000
    last_year: int = 2012
    papers_per_author_year: float = 1.2
    refs_per_paper: int = 8
    attachment_exponent: float = 1.0
    n_topics: int = 4
    vocab_size: int = 120
    signal_strength: float = 0.8
    cohort_year: int = 2006
    seed: int = 0


@dataclass(frozen=True, slots=True)
class SynthResult:
    corpus_path: Path
    truth_path: Path
    manifest_path: Path
    n_papers: int
    n_authors: int
    veteran_ids: tuple[int, ...]
    young_ids: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class PlantedAuthor:
    fitness: float
    topic: int  # 1-based, as written in truth.csv


def _validate(config: SynthConfig) -> None:
    problems = []
    if config.n_authors < 10:
        problems.append("n_authors must be at least 10")
    if config.n_venues < 2:
        problems.append("n_venues must be at least 2")
    if config.n_topics < 1:
        problems.append("n_topics must be at least 1")
    if config.vocab_size < 3 * config.n_topics:
        problems.append("vocab_size must be at least 3 per topic")
    if not config.first_year < config.cohort_year <= config.last_year:
        problems.append("cohort_year must lie strictly after first_year and within the span")
    if config.refs_per_paper < 1:
        problems.append("refs_per_paper must be at least 1")
    if config.papers_per_author_year <= 0:
        problems.append("papers_per_author_year must be positive")
    if not 0.0 <= config.signal_strength <= 1.0:
        problems.append("signal_strength must lie in [0, 1]")
    if config.attachment_exponent < 0:
        problems.append("attachment_exponent must be non-negative")
    if problems:
        raise ValueError("infeasible synthetic configuration: " + "; ".join(problems))


def _topic_vocab(config: SynthConfig) -> list[list[str]]:
    per_topic = config.vocab_size // config.n_topics
    return [
        [f"topic{r + 1:02d}term{i:03d}" for i in range(per_topic)]
        for r in range(config.n_topics)
    ]


def generate_corpus(config: SynthConfig, out_dir: str | Path) -> SynthResult:
    """Grow the corpus and write corpus.jsonl, truth.csv, and manifest.json."""
    _validate(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)

    n = config.n_authors
    author_ids = np.arange(1, n + 1)
    n_veterans = max(2, n // 5)
    veteran_ids = tuple(int(a) for a in author_ids[:n_veterans])
    young_ids = tuple(int(a) for a in author_ids[n_veterans:])

    fitness = rng.lognormal(0.0, 1.0, size=n)
    topic_of = rng.integers(0, config.n_topics, size=n)
    beta = config.signal_strength
    # E[fitness ** beta] = exp(beta^2 / 2) for lognormal(0, 1)
    rate = config.papers_per_author_year * fitness**beta / math.exp(beta * beta / 2.0)

    vocab = _topic_vocab(config)
    word_weights = 1.0 / np.arange(1, len(vocab[0]) + 1)
    word_cum = np.cumsum(word_weights)

    coauthor_start = max(config.first_year, config.cohort_year - COAUTHOR_LEAD_YEARS)

    papers: list[dict] = []
    indegree: dict[int, int] = {}
    ref_weight_of: dict[int, float] = {}

    def draw_words(count: int, own_topic: int) -> list[str]:
        topics = np.full(count, own_topic)
        if config.n_topics > 1:
            mixed = rng.random(count) >= OWN_TOPIC_RATE
            n_mixed = int(mixed.sum())
            if n_mixed:
                topics[mixed] = rng.integers(0, config.n_topics, size=n_mixed)
        picks = np.searchsorted(
            word_cum, rng.random(count) * word_cum[-1], side="right"
        )
        return [vocab[int(r)][int(i)] for r, i in zip(topics, picks)]

    for year in range(config.first_year, config.last_year + 1):
        # reference weights are frozen for the whole year
        prior_ids = np.array([p["id"] for p in papers], dtype=np.int64)
        if len(prior_ids):
            ref_cum = np.cumsum([ref_weight_of[int(pid)] for pid in prior_ids])
        else:
            ref_cum = None

        # co-author candidates and per-topic weights, also frozen per year
        eligible = list(veteran_ids)
        if year >= coauthor_start:
            eligible.extend(young_ids)
        eligible_arr = np.array(eligible, dtype=np.int64)
        topic_cums = []
        for r in range(config.n_topics):
            weights = np.where(
                topic_of[eligible_arr - 1] == r, SAME_TOPIC_WEIGHT, 1.0
            )
            topic_cums.append(np.cumsum(weights))

        if year >= config.cohort_year:
            first_authors = [int(a) for a in author_ids]
        else:
            first_authors = list(veteran_ids)

        year_citations: list[int] = []
        for author in first_authors:
            n_new = int(rng.poisson(rate[author - 1]))
            is_veteran = author <= n_veterans
            if is_veteran and year == config.first_year:
                n_new = max(1, n_new)
            if not is_veteran and year == config.cohort_year:
                n_new = max(1, n_new)
            own_topic = int(topic_of[author - 1])
            for _ in range(n_new):
                pid = len(papers) + 1
                n_co = int(rng.integers(0, MAX_COAUTHORS + 1))
                authors = [author]
                if n_co:
                    cum = topic_cums[own_topic]
                    picks = np.searchsorted(
                        cum, rng.random(n_co) * cum[-1], side="right"
                    )
                    for pick in eligible_arr[picks]:
                        pick = int(pick)
                        if pick != author and pick not in authors:
                            authors.append(pick)
                refs: list[int] = []
                if year > config.first_year:
                    if len(prior_ids) < config.refs_per_paper:
                        raise ValueError(
                            "infeasible synthetic configuration: more references "
                            f"than available earlier papers in year {year} "
                            f"({config.refs_per_paper} needed, {len(prior_ids)} exist)"
                        )
                    picks = np.searchsorted(
                        ref_cum,
                        rng.random(config.refs_per_paper) * ref_cum[-1],
                        side="right",
                    )
                    refs = sorted({int(prior_ids[i]) for i in picks})
                    year_citations.extend(refs)
                venue = None
                if rng.random() >= VENUELESS_RATE:
                    venue = int(rng.integers(1, config.n_venues + 1))
                papers.append(
                    {
                        "id": pid,
                        "title": " ".join(draw_words(TITLE_WORDS, own_topic)),
                        "abstract": " ".join(draw_words(ABSTRACT_WORDS, own_topic)),
                        "year": year,
                        "venue": venue,
                        "authors": authors,
                        "refs": refs,
                    }
                )
                indegree[pid] = 0
        for cited in year_citations:
            indegree[cited] += 1
        for p in papers:
            pid = p["id"]
            fits = fitness[[a - 1 for a in p["authors"]]]
            paper_fit = float(np.exp(np.log(fits).mean()))
            ref_weight_of[pid] = (
                indegree[pid] + 1.0
            ) ** config.attachment_exponent * paper_fit**beta

    corpus_path = out / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8", newline="") as fh:
        for p in papers:
            fh.write(json.dumps(p, separators=(",", ":")) + "\n")

    truth_path = out / "truth.csv"
    with open(truth_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("author_id,fitness,topic\n")
        for a in author_ids:
            fh.write(f"{int(a)},{float(fitness[a - 1])!r},{int(topic_of[a - 1]) + 1}\n")

    manifest_path = out / "manifest.json"
    manifest = {
        "config": asdict(config),
        "corpus_sha256": _sha256(corpus_path),
        "truth_sha256": _sha256(truth_path),
        "n_papers": len(papers),
        "n_authors": n,
    }
    with open(manifest_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")

    return SynthResult(
        corpus_path=corpus_path,
        truth_path=truth_path,
        manifest_path=manifest_path,
        n_papers=len(papers),
        n_authors=n,
        veteran_ids=veteran_ids,
        young_ids=young_ids,
    )


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def planted_truth(out_dir: str | Path) -> dict[int, PlantedAuthor]:
    """Load truth.csv after checking its provenance hash in manifest.json."""
    out = Path(out_dir)
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        raise ValueError("missing provenance hash for planted truth")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    expected = manifest.get("truth_sha256")
    if not expected:
        raise ValueError("missing provenance hash for planted truth")
    truth_path = out / "truth.csv"
    if _sha256(truth_path) != expected:
        raise ValueError("provenance hash mismatch for truth.csv")
    truth: dict[int, PlantedAuthor] = {}
    with open(truth_path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "author_id,fitness,topic":
            raise ValueError(f"unexpected truth.csv header: {header!r}")
        for line in fh:
            author, fit, topic = line.strip().split(",")
            truth[int(author)] = PlantedAuthor(fitness=float(fit), topic=int(topic))
    return truth
