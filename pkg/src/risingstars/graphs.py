"""Collaboration and citation graphs plus weighted PageRank.

Three graphs are built from one snapshot:

* ACN   - undirected author collaboration network, edge weight = joint papers
* ACCN  - directed author citation network, weight = citing-author x cited-author
          pairs accumulated over citation links (self pairs dropped)
* VCCN  - directed venue citation network, weight = cross-venue citation count
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .corpus import CorpusSnapshot


@dataclass(slots=True)
class WeightedGraph:
    """Weighted graph without self-loops; undirected edges stored once, canonically."""

    directed: bool
    nodes: set[int] = field(default_factory=set)
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def add_node(self, v: int) -> None:
        self.nodes.add(v)

    def add_edge(self, u: int, v: int, weight: float = 1.0) -> None:
        if u == v:
            raise ValueError(f"self-loop on node {u}")
        if weight <= 0:
            raise ValueError("edge weight must be positive")
        key = (u, v) if self.directed else (min(u, v), max(u, v))
        self.nodes.add(u)
        self.nodes.add(v)
        self.edges[key] = self.edges.get(key, 0.0) + weight

    def weight(self, u: int, v: int) -> float:
        key = (u, v) if self.directed else (min(u, v), max(u, v))
        return self.edges.get(key, 0.0)

    def n_edges(self) -> int:
        return len(self.edges)

    def total_weight(self) -> float:
        return sum(self.edges.values())


@dataclass(slots=True)
class PageRankScores:
    """Stationary scores per node; un-rescaled scores sum to 1."""

    scores: dict[int, float]
    rescaled: bool = False
    iterations: int = 0

    def get(self, node: int) -> float:
        return self.scores.get(node, 0.0)

    def rescale(self, factor: float = 1e6) -> "PageRankScores":
        if self.rescaled:
            raise ValueError("scores already rescaled")
        return PageRankScores(
            scores={k: v * factor for k, v in self.scores.items()},
            rescaled=True,
            iterations=self.iterations,
        )


def build_acn(snap: CorpusSnapshot) -> WeightedGraph:
    """Author collaboration network over one snapshot.

    Every author with at least one snapshot paper becomes a node, so solo
    authors are kept as isolated (dangling) nodes and still earn rank mass.
    """
    graph = WeightedGraph(directed=False)
    for author in snap.author_papers:
        graph.add_node(author)
    for rec in snap.papers.values():
        for a, b in combinations(rec.authors, 2):
            graph.add_edge(a, b)
    return graph


def build_accn(snap: CorpusSnapshot) -> WeightedGraph:
    """Author citation network: one unit per (citing author, cited author) pair."""
    graph = WeightedGraph(directed=True)
    for rec in snap.papers.values():
        for ref in rec.refs:
            target = snap.papers.get(ref)
            if target is None:
                continue
            for a in rec.authors:
                for b in target.authors:
                    if a != b:
                        graph.add_edge(a, b)
    return graph


def build_vccn(snap: CorpusSnapshot) -> WeightedGraph:
    """Venue citation network; venueless papers and same-venue links are skipped."""
    graph = WeightedGraph(directed=True)
    for rec in snap.papers.values():
        if rec.venue is None:
            continue
        for ref in rec.refs:
            target = snap.papers.get(ref)
            if target is None or target.venue is None:
                continue
            if rec.venue != target.venue:
                graph.add_edge(rec.venue, target.venue)
    return graph


def pagerank(
    graph: WeightedGraph,
    damping: float = 0.85,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> PageRankScores:
    """Weighted PageRank by power iteration.

    Transition probability from u to v is w(u, v) / sum_x w(u, x); undirected
    edges count in both directions. Nodes without out-edges spread their mass
    uniformly over all nodes. Iteration starts uniform and stops once the L1
    change drops below ``tol`` or after ``max_iter`` sweeps.
    """
    nodes = sorted(graph.nodes)
    n = len(nodes)
    if n == 0:
        return PageRankScores(scores={}, iterations=0)
    index = {v: i for i, v in enumerate(nodes)}

    src_list: list[int] = []
    dst_list: list[int] = []
    wgt_list: list[float] = []
    for (u, v), w in sorted(graph.edges.items()):
        src_list.append(index[u])
        dst_list.append(index[v])
        wgt_list.append(w)
        if not graph.directed:
            src_list.append(index[v])
            dst_list.append(index[u])
            wgt_list.append(w)

    src = np.asarray(src_list, dtype=np.int64)
    dst = np.asarray(dst_list, dtype=np.int64)
    wgt = np.asarray(wgt_list, dtype=np.float64)

    out_weight = np.zeros(n)
    if len(src):
        np.add.at(out_weight, src, wgt)
    dangling = out_weight == 0.0
    norm_w = wgt / out_weight[src] if len(src) else wgt

    x = np.full(n, 1.0 / n)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        flow = np.bincount(dst, weights=x[src] * norm_w, minlength=n) if len(src) else np.zeros(n)
        x_new = (1.0 - damping) / n + damping * (flow + x[dangling].sum() / n)
        delta = np.abs(x_new - x).sum()
        x = x_new
        if delta < tol:
            break
    return PageRankScores(
        scores={node: float(x[i]) for i, node in enumerate(nodes)},
        iterations=iterations,
    )


def export_edges(graph: WeightedGraph, path: str | Path) -> None:
    """Write the edge list as ``src,dst,weight`` CSV, sorted for reproducibility."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("src,dst,weight\n")
        for (u, v), w in sorted(graph.edges.items()):
            fh.write(f"{u},{v},{w!r}\n")
