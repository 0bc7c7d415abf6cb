"""Topic modeling over paper text: tokenizer, collapsed-Gibbs LDA, author profiles.

The sampler is a plain collapsed Gibbs loop compiled with numba. It is
single-threaded and seeded inside the kernel, so a given (documents, config,
seed) triple always yields a bitwise-identical model.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .corpus import CorpusSnapshot

STOPWORDS_VERSION = "1"

# Versioned English function-word list. Changing it changes every downstream
# artifact, so additions must bump STOPWORDS_VERSION.
STOPWORDS = frozenset("""
about above after again against all almost also although always among and any
are around because been before being below between both but can cannot could
did does doing down during each either few for from further had has have having
her here hers herself him himself his how however into its itself just let may
might more most much must myself neither nor not now off once only other ought
our ours ourselves out over own per rather same she should since some such than
that the their theirs them themselves then there these they this those through
thus too under until upon very was were what when where whether which while who
whom why will with within without would yet you your yours yourself yourselves
""".split())

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(title: str, abstract: str) -> list[str]:
    """Lowercase alphanumeric tokens of length >= 3, stopwords removed, order kept."""
    tokens = []
    for text in (title, abstract):
        for tok in _TOKEN_RE.findall(text.lower()):
            if len(tok) >= 3 and tok not in STOPWORDS:
                tokens.append(tok)
    return tokens


def build_documents(snap: CorpusSnapshot, paper_ids: list[int]) -> dict[int, list[str]]:
    """Tokenized title+abstract per paper, in ascending paper-id order."""
    docs: dict[int, list[str]] = {}
    for pid in sorted(paper_ids):
        rec = snap.papers[pid]
        docs[pid] = tokenize(rec.title, rec.abstract)
    return docs


@dataclass(slots=True)
class TopicModel:
    """Point estimate from the final Gibbs state."""

    n_topics: int
    alpha: float
    beta: float
    iterations: int
    seed: int
    vocabulary: list[str]
    doc_ids: list[int]
    doc_topic: np.ndarray  # (n_docs, R); p(topic | doc), rows sum to 1
    topic_word: np.ndarray  # (R, V); p(word | topic), rows sum to 1
    _doc_index: dict[int, int] | None = None  # built lazily

    def doc_index(self) -> dict[int, int]:
        if self._doc_index is None:
            self._doc_index = {pid: i for i, pid in enumerate(self.doc_ids)}
        return self._doc_index

    def doc_distribution(self, paper_id: int) -> np.ndarray:
        return self.doc_topic[self.doc_index()[paper_id]]

    def top_words(self, k: int = 5) -> list[list[str]]:
        """Per topic, the k most probable words (ties broken alphabetically)."""
        table = []
        for r in range(self.n_topics):
            order = sorted(
                range(len(self.vocabulary)),
                key=lambda w: (-self.topic_word[r, w], self.vocabulary[w]),
            )
            table.append([self.vocabulary[w] for w in order[:k]])
        return table


@njit(cache=True)
def _gibbs_kernel(tokens, doc_of, n_docs, n_topics, vocab_size, alpha, beta, iterations, seed):
    np.random.seed(seed)
    n_tokens = tokens.shape[0]
    z = np.empty(n_tokens, dtype=np.int64)
    n_dr = np.zeros((n_docs, n_topics), dtype=np.float64)
    n_rw = np.zeros((n_topics, vocab_size), dtype=np.float64)
    n_r = np.zeros(n_topics, dtype=np.float64)

    for i in range(n_tokens):
        k = int(np.random.random() * n_topics)
        z[i] = k
        n_dr[doc_of[i], k] += 1.0
        n_rw[k, tokens[i]] += 1.0
        n_r[k] += 1.0

    cum = np.empty(n_topics, dtype=np.float64)
    for _ in range(iterations):
        for i in range(n_tokens):
            d = doc_of[i]
            w = tokens[i]
            k = z[i]
            n_dr[d, k] -= 1.0
            n_rw[k, w] -= 1.0
            n_r[k] -= 1.0

            total = 0.0
            for r in range(n_topics):
                p = (n_rw[r, w] + beta) / (n_r[r] + vocab_size * beta) * (n_dr[d, r] + alpha)
                total += p
                cum[r] = total
            u = np.random.random() * total
            k = 0
            while k < n_topics - 1 and cum[k] <= u:
                k += 1

            z[i] = k
            n_dr[d, k] += 1.0
            n_rw[k, w] += 1.0
            n_r[k] += 1.0

    return n_dr, n_rw, n_r


def fit_lda(
    documents: dict[int, list[str]],
    n_topics: int,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 200,
    seed: int = 0,
) -> TopicModel:
    """Fit LDA by collapsed Gibbs sampling.

    The vocabulary keeps tokens appearing in at least 2 documents, sorted
    lexicographically. Documents left empty after filtering are permitted and
    end up with the uniform prior row; an entirely empty corpus is an error.
    """
    if n_topics < 1:
        raise ValueError("n_topics must be >= 1")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if alpha is None:
        alpha = 50.0 / n_topics

    df: dict[str, int] = {}
    for toks in documents.values():
        for tok in set(toks):
            df[tok] = df.get(tok, 0) + 1
    vocabulary = sorted(tok for tok, n in df.items() if n >= 2)
    word_id = {tok: i for i, tok in enumerate(vocabulary)}

    doc_ids = list(documents)
    token_list: list[int] = []
    doc_of_list: list[int] = []
    for d, pid in enumerate(doc_ids):
        for tok in documents[pid]:
            w = word_id.get(tok)
            if w is not None:
                token_list.append(w)
                doc_of_list.append(d)
    if not token_list:
        raise ValueError("empty corpus for topic model")

    tokens = np.asarray(token_list, dtype=np.int64)
    doc_of = np.asarray(doc_of_list, dtype=np.int64)
    n_dr, n_rw, n_r = _gibbs_kernel(
        tokens, doc_of, len(doc_ids), n_topics, len(vocabulary),
        float(alpha), float(beta), int(iterations), int(seed),
    )

    doc_len = n_dr.sum(axis=1, keepdims=True)
    doc_topic = (n_dr + alpha) / (doc_len + n_topics * alpha)
    topic_word = (n_rw + beta) / (n_r[:, None] + len(vocabulary) * beta)
    return TopicModel(
        n_topics=n_topics,
        alpha=float(alpha),
        beta=float(beta),
        iterations=int(iterations),
        seed=int(seed),
        vocabulary=vocabulary,
        doc_ids=doc_ids,
        doc_topic=doc_topic,
        topic_word=topic_word,
    )


def author_topic_profile(
    model: TopicModel, author_paper_ids: list[int], author_id: int | None = None
) -> np.ndarray:
    """Unnormalized topic interest: sum of p(topic | doc) over the author's papers."""
    index = model.doc_index()
    rows = [index[pid] for pid in author_paper_ids if pid in index]
    if not rows:
        who = f"author {author_id}" if author_id is not None else "author"
        raise ValueError(f"{who} has no papers in the topic model")
    return model.doc_topic[rows].sum(axis=0)


def divide_researchers(
    profiles: dict[int, np.ndarray], n_topics: int, top_m: int = 3
) -> dict[int, list[int]]:
    """Assign each author to their top_m topics (ties broken by lower topic index).

    Every author lands in exactly top_m groups, so group sizes add up to
    top_m * n_authors.
    """
    if top_m > n_topics:
        raise ValueError(f"top_m ({top_m}) exceeds n_topics ({n_topics})")
    groups: dict[int, list[int]] = {r: [] for r in range(n_topics)}
    for author in sorted(profiles):
        mass = profiles[author]
        order = sorted(range(n_topics), key=lambda r: (-mass[r], r))
        for r in order[:top_m]:
            groups[r].append(author)
    return groups


def doc_entropy(model: TopicModel, paper_id: int) -> float:
    """Shannon entropy (natural log) of one document's topic distribution."""
    p = model.doc_distribution(paper_id)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def authority(model: TopicModel, citations: dict[int, int], paper_ids: list[int]) -> float:
    """Citation mass spread over topics: sum_r sum_l p(r|l) * c_l, divided by R."""
    index = model.doc_index()
    total = 0.0
    for r in range(model.n_topics):
        for pid in paper_ids:
            if pid in index:
                total += float(model.doc_topic[index[pid], r]) * citations.get(pid, 0)
    return total / model.n_topics


def save_topic_model(model: TopicModel, path: str | Path) -> None:
    payload = {
        "n_topics": model.n_topics,
        "alpha": model.alpha,
        "beta": model.beta,
        "iterations": model.iterations,
        "seed": model.seed,
        "stopwords_version": STOPWORDS_VERSION,
        "vocabulary": model.vocabulary,
        "doc_ids": model.doc_ids,
        "doc_topic": [[float(x) for x in row] for row in model.doc_topic],
        "topic_word": [[float(x) for x in row] for row in model.topic_word],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, separators=(",", ":"))
        fh.write("\n")


def load_topic_model(path: str | Path) -> TopicModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return TopicModel(
        n_topics=payload["n_topics"],
        alpha=payload["alpha"],
        beta=payload["beta"],
        iterations=payload["iterations"],
        seed=payload["seed"],
        vocabulary=list(payload["vocabulary"]),
        doc_ids=list(payload["doc_ids"]),
        doc_topic=np.asarray(payload["doc_topic"], dtype=np.float64),
        topic_word=np.asarray(payload["topic_word"], dtype=np.float64),
    )


def top_words_table(model: TopicModel, k: int = 5) -> str:
    """Aligned text table of the top-k words per topic (topics numbered from 1)."""
    rows = model.top_words(k)
    width = max((len(w) for row in rows for w in row), default=4)
    lines = []
    for r, row in enumerate(rows, start=1):
        words = "  ".join(w.ljust(width) for w in row).rstrip()
        lines.append(f"topic {r:>2}  {words}")
    return "\n".join(lines) + "\n"
