"""Acceptance gate: nine criteria, each with a pinned tolerance and a runtime budget.

Every test prints exactly one line:

    [ACCEPT] C<n> <what it checks>: PASS|FAIL (<detail>)

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines. The
budgets time the algorithms, not the JIT: a session-scoped warmup fixture
triggers the two numba kernels once so first-call compilation is paid before
any criterion's clock starts.
"""

import json
import shutil
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.special import expit

from risingstars.config import parse_config
from risingstars.corpus import citation_increments, identify_cohort, load_corpus, snapshot
from risingstars.evaluation import (
    ablation,
    evaluate_method,
    make_method,
    precision_at_k,
    split,
    top_k_set,
    transfer_experiment,
)
from risingstars.features import (
    FeatureMatrix,
    author_features,
    content_features,
    extract_features,
    temporal_features,
)
from risingstars.graphs import WeightedGraph, build_accn, build_acn, build_vccn, pagerank
from risingstars.pipeline import build_report, run_pipeline, run_synth
from risingstars.ranker import TrainConfig, build_pairs, pair_objective, train_iirl
from risingstars.synth import SynthConfig, generate_corpus
from risingstars.topics import (
    author_topic_profile,
    build_documents,
    divide_researchers,
    fit_lda,
)

from test_features import velocity_corpus

SMOKE = Path(__file__).resolve().parent.parent / "configs" / "smoke.yaml"


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"\n[ACCEPT] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module", autouse=True)
def warm_jit_kernels():
    # one-time numba compilation must not count against any criterion budget
    fit_lda({0: ["alpha", "beta"], 1: ["beta", "gamma"]}, 2, iterations=2, seed=0)
    y = np.array([1.0, 0.0, 2.0, 3.0])
    X = np.eye(4, 18)
    train_iirl(X, build_pairs(y, 100, 0), TrainConfig(max_epochs=2))


# --------------------------------------------------------------- criterion 1

TRUE_TOP22 = {
    423267, 717380, 202883, 1569100, 913009, 1559671, 661842, 902157,
    404148, 770521, 353968, 1438956, 446108, 405996, 870598, 210049,
    730385, 802868, 576483, 1342815, 475987, 793285,
}
IIRL_TOP22 = {
    842488, 1488277, 202883, 913009, 210049, 503366, 404148, 423267,
    1535014, 852180, 770521, 405641, 1694381, 1097519, 903059, 417190,
    1173298, 446108, 1488661, 353968, 12304, 76302,
}
BASE2_TOP22 = {
    842488, 388726, 210049, 1488661, 423267, 1165827, 1488277, 770521,
    1660245, 1327670, 793285, 404148, 647788, 417190, 942512, 969548,
    913009, 324600, 1535014, 1375805, 12304, 503366,
}


def test_c1_ranking_overlap_anchors():
    started = time.perf_counter()
    p_iirl = precision_at_k(IIRL_TOP22, TRUE_TOP22)
    p_base2 = precision_at_k(BASE2_TOP22, TRUE_TOP22)
    ok = abs(p_iirl - 8 / 22) < 1e-12 and abs(p_base2 - 6 / 22) < 1e-12
    elapsed = time.perf_counter() - started
    ok = ok and elapsed < 1.0
    _report(
        "C1 ranking-overlap anchors",
        ok,
        f"iirl {p_iirl:.6f} vs 8/22, base2 {p_base2:.6f} vs 6/22, {elapsed:.3f}s < 1s",
    )


# --------------------------------------------------------------- criterion 2

def test_c2_citation_ratio_and_velocity_anchors():
    started = time.perf_counter()
    corpus = velocity_corpus()
    snap = snapshot(corpus, 2008)
    snaps = [snapshot(corpus, y) for y in (2008, 2007, 2006)]
    _, _, ratio1 = author_features(snap, 1)
    _, _, ratio2 = author_features(snap, 2)
    f15, f16, _, _ = temporal_features(*snaps, author_id=1)
    checks = (
        abs(round(ratio1, 1) - 11.2) < 1e-12,
        abs(round(ratio2, 1) - 53.2) < 1e-12,
        abs(f15 - 35.0) < 1e-12,
        abs(f16 - 39.0) < 1e-12,
    )
    elapsed = time.perf_counter() - started
    ok = all(checks) and elapsed < 1.0
    _report(
        "C2 citation-ratio and velocity anchors",
        ok,
        f"ratios ({round(ratio1, 1)}, {round(ratio2, 1)}), "
        f"velocities ({f15}, {f16}), {elapsed:.3f}s < 1s",
    )


# --------------------------------------------------------------- criterion 3

def test_c3_pair_gradient_vs_finite_differences():
    started = time.perf_counter()
    rng = np.random.default_rng(3)
    lam = 0.01
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        w = rng.normal(size=18)
        f_i = rng.normal(size=18)
        f_j = rng.normal(size=18)
        d = float(np.dot(w, f_i - f_j))
        analytic = expit(-d) * (f_i - f_j) - lam * w
        numeric = np.empty(18)
        for k in range(18):
            e = np.zeros(18)
            e[k] = h
            numeric[k] = (
                pair_objective(w + e, f_i, f_j, lam)
                - pair_objective(w - e, f_i, f_j, lam)
            ) / (2 * h)
        rel = np.linalg.norm(numeric - analytic) / max(np.linalg.norm(analytic), 1e-12)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - started
    ok = worst < 1e-5 and elapsed < 5.0
    _report(
        "C3 pair gradient matches central differences",
        ok,
        f"worst rel err {worst:.2e} < 1e-5 over 100 states, {elapsed:.2f}s < 5s",
    )


# --------------------------------------------------------------- criterion 4

class OracleMethod:
    """Scores every author by the exact future increment."""

    name = "oracle"

    def fit(self, matrix, labels, train_ids):
        self._labels = labels

    def scores(self, matrix, ids):
        return {a: float(self._labels[a]) for a in ids}


def _smoke_config(root: Path):
    env = {
        "RISINGSTARS_PATHS__CORPUS": str(root / "corpus.jsonl"),
        "RISINGSTARS_PATHS__WORKDIR": str(root / "workdir"),
    }
    return parse_config(SMOKE, env=env)


def test_c4_oracle_scorer_is_perfect_on_bundled_config(tmp_path):
    started = time.perf_counter()
    config = _smoke_config(tmp_path)
    run_synth(config)
    run_pipeline(config, ["graphs", "topics"])
    corpus = load_corpus(config.paths.corpus)
    cohort = identify_cohort(corpus, config.cohort.t_1st)
    labels = citation_increments(corpus, cohort, config.cohort.t, config.cohort.delta_t)
    raw = json.loads(
        (Path(config.paths.workdir) / "topics" / "groups.json").read_text()
    )
    groups = {int(r) - 1: members for r, members in raw.items()}
    matrix = FeatureMatrix(
        author_ids=list(cohort),
        values=np.zeros((len(cohort), 18)),
    )
    result = evaluate_method(
        OracleMethod(),
        groups,
        labels,
        matrix,
        config.eval.ratio,
        config.eval.seed,
        ks=config.eval.k,
    )
    cells = [
        result.per_topic[topic][k]
        for topic in result.per_topic
        for k in config.eval.k
    ]
    elapsed = time.perf_counter() - started
    ok = bool(cells) and all(c == 1.0 for c in cells) and elapsed < 5.0
    _report(
        "C4 oracle scorer perfect on bundled config",
        ok,
        f"{len(cells)} topic/k cells all 1.0, {elapsed:.2f}s < 5s",
    )


# ------------------------------------------------- criteria 5 and 8 corpora

PLANTED_SEEDS = (300, 301, 302, 303, 304)
_PLANTED: dict = {}


def planted_corpora():
    """Five independently seeded 2000-author corpora with a 0.8 planted signal.

    Built lazily inside the first criterion that needs them, so the build cost
    lands inside that criterion's measured time.
    """
    if _PLANTED:
        return _PLANTED
    t, t_1st, delta_t, n_topics, top_m = 2008, 2006, 4, 10, 3
    per_seed = []
    for seed in PLANTED_SEEDS:
        cfg = SynthConfig(
            n_authors=2000,
            n_venues=12,
            first_year=2000,
            last_year=2012,
            papers_per_author_year=1.2,
            refs_per_paper=8,
            attachment_exponent=1.0,
            n_topics=8,
            vocab_size=400,
            signal_strength=0.8,
            cohort_year=2006,
            seed=seed,
        )
        with tempfile.TemporaryDirectory() as tmp:
            generate_corpus(cfg, tmp)
            corpus = load_corpus(Path(tmp) / "corpus.jsonl")
        snap = snapshot(corpus, t)
        cohort = identify_cohort(corpus, t_1st)
        pr_acn = pagerank(build_acn(snap))
        pr_accn = pagerank(build_accn(snap))
        pr_vccn = pagerank(build_vccn(snap))
        cohort_set = set(cohort)
        pids = [
            pid
            for pid, rec in snap.papers.items()
            if cohort_set.intersection(rec.authors)
        ]
        model = fit_lda(build_documents(snap, pids), n_topics, iterations=200, seed=0)
        matrix = extract_features(
            corpus, cohort, t, pr_acn, pr_accn, pr_vccn, model
        )
        labels = citation_increments(corpus, cohort, t, delta_t)
        profiles = {
            a: author_topic_profile(model, snap.author_papers.get(a, []), a)
            for a in cohort
        }
        groups = divide_researchers(profiles, n_topics, top_m)
        per_seed.append({"matrix": matrix, "labels": labels, "groups": groups})
    _PLANTED["per_seed"] = per_seed
    return _PLANTED


# --------------------------------------------------------------- criterion 5

def test_c5_ranking_margins_on_planted_corpora():
    started = time.perf_counter()
    data = planted_corpora()["per_seed"]
    tc = TrainConfig()
    macro = {"iirl": [], "base1": [], "base2": []}
    keep = {"venue": [], "temporal": []}
    for bundle in data:
        for name in macro:
            method = make_method(name, tc)
            result = evaluate_method(
                method,
                bundle["groups"],
                bundle["labels"],
                bundle["matrix"],
                0.5,
                0,
                ks=(10.0,),
            )
            macro[name].append(result.macro[10.0])
        rows = ablation(
            bundle["groups"],
            bundle["labels"],
            bundle["matrix"],
            tc,
            0.5,
            0,
            k=10.0,
            modes=("keep",),
            feature_groups=("venue", "temporal"),
        )
        for group in keep:
            vals = [r["precision"] for r in rows if r["mode"] == "keep" and r["group"] == group]
            keep[group].append(float(np.mean(vals)))
    means = {name: float(np.mean(vals)) for name, vals in macro.items()}
    keep_means = {g: float(np.mean(v)) for g, v in keep.items()}
    margin1 = means["iirl"] - means["base1"]
    margin2 = means["iirl"] - means["base2"]
    elapsed = time.perf_counter() - started
    ok = (
        margin1 >= 0.05
        and margin2 >= 0.05
        and keep_means["temporal"] >= keep_means["venue"]
        and elapsed < 180.0
    )
    _report(
        "C5 ranking margins on planted corpora",
        ok,
        f"iirl {means['iirl']:.3f} vs base1 {means['base1']:.3f} "
        f"(+{margin1:.3f}) and base2 {means['base2']:.3f} (+{margin2:.3f}), "
        f"keep-temporal {keep_means['temporal']:.3f} >= keep-venue "
        f"{keep_means['venue']:.3f}, {elapsed:.1f}s < 180s",
    )


# --------------------------------------------------------------- criterion 6

def test_c6_pagerank_oracles():
    started = time.perf_counter()
    checks = []

    cycle = WeightedGraph(directed=True)
    for u, v in ((1, 2), (2, 3), (3, 1)):
        cycle.add_edge(u, v)
    pr = pagerank(cycle)
    checks.append(all(abs(pr.get(v) - 1 / 3) < 1e-12 for v in (1, 2, 3)))

    chain = WeightedGraph(directed=True)
    chain.add_edge(1, 2)  # node 2 dangles; closed form is (20/57, 37/57)
    pr = pagerank(chain)
    checks.append(abs(pr.get(1) - 20 / 57) < 1e-12)
    checks.append(abs(pr.get(2) - 37 / 57) < 1e-12)

    pair = WeightedGraph(directed=False)
    pair.add_edge(7, 9, weight=3.5)
    pr = pagerank(pair)
    checks.append(abs(pr.get(7) - 0.5) < 1e-12 and abs(pr.get(9) - 0.5) < 1e-12)

    rng = np.random.default_rng(6)
    random_graph = WeightedGraph(directed=True)
    for node in range(60):
        random_graph.add_node(node)
    for _ in range(400):
        u, v = rng.integers(0, 60, size=2)
        if u != v and u % 7 != 0:  # every 7th node stays dangling
            random_graph.add_edge(int(u), int(v), weight=float(rng.uniform(0.5, 4.0)))
    pr = pagerank(random_graph)
    x = np.array([pr.get(v) for v in range(60)])
    checks.append(abs(x.sum() - 1.0) < 1e-12)
    out_weight = np.zeros(60)
    for (u, v), w in random_graph.edges.items():
        out_weight[u] += w
    flow = np.zeros(60)
    for (u, v), w in random_graph.edges.items():
        flow[v] += x[u] * w / out_weight[u]
    dangling = sum(x[v] for v in range(60) if out_weight[v] == 0.0)
    step = 0.15 / 60 + 0.85 * (flow + dangling / 60)
    checks.append(float(np.abs(step - x).sum()) < 1e-10)

    elapsed = time.perf_counter() - started
    ok = all(checks) and elapsed < 5.0
    _report(
        "C6 weighted PageRank oracles",
        ok,
        f"cycle/closed-form/uniform/fixed-point all hold, {elapsed:.2f}s < 5s",
    )


# --------------------------------------------------------------- criterion 7

def test_c7_diversity_bounds_and_authority_identity(tmp_path):
    started = time.perf_counter()
    cfg = SynthConfig(
        n_authors=60,
        n_venues=4,
        first_year=2000,
        last_year=2007,
        refs_per_paper=3,
        n_topics=3,
        vocab_size=60,
        cohort_year=2003,
        seed=7,
    )
    generate_corpus(cfg, tmp_path)
    corpus = load_corpus(tmp_path / "corpus.jsonl")
    snap = snapshot(corpus, 2006)
    cohort = identify_cohort(corpus, 2003)
    pids = sorted({p for a in cohort for p in snap.author_papers.get(a, ())})
    n_topics = 7
    model = fit_lda(build_documents(snap, pids), n_topics, iterations=80, seed=0)
    bound = float(np.log(n_topics))
    checked = 0
    ok = True
    for author in cohort:
        modeled = [
            pid for pid in snap.author_papers.get(author, ()) if pid in model.doc_index()
        ]
        if not modeled:
            continue
        f13, f14 = content_features(model, snap, author)
        c_total = sum(snap.citations.get(pid, 0) for pid in modeled)
        ok = ok and -1e-12 <= f13 <= bound + 1e-12
        ok = ok and abs(f14 - c_total / n_topics) < 1e-9
        checked += 1
    elapsed = time.perf_counter() - started
    ok = ok and checked >= 10 and elapsed < 1.0
    _report(
        "C7 diversity bounds and authority identity",
        ok,
        f"{checked} authors within [0, ln {n_topics}] and c_total/R at 1e-9, "
        f"{elapsed:.2f}s < 1s",
    )


# --------------------------------------------------------------- criterion 8

def test_c8_transfer_exactness_and_gap():
    started = time.perf_counter()
    data = planted_corpora()["per_seed"]
    tc = TrainConfig()
    ks = (10.0, 20.0)
    exact = True
    gaps: dict[int, dict[float, list[float]]] = {}
    for bundle in data:
        rows = transfer_experiment(
            bundle["groups"], bundle["labels"], bundle["matrix"], tc, 0, 0.5, 0, ks
        )
        for row in rows:
            if row["topic"] == 0:
                exact = exact and all(
                    row["own"][k] == row["transfer"][k] for k in ks
                )
            for k in ks:
                gaps.setdefault(row["topic"], {}).setdefault(k, []).append(
                    abs(row["own"][k] - row["transfer"][k])
                )
    mean_gaps = {
        topic: {k: float(np.mean(v)) for k, v in per_k.items()}
        for topic, per_k in gaps.items()
    }
    worst = max(g for per_k in mean_gaps.values() for g in per_k.values())
    elapsed = time.perf_counter() - started
    ok = exact and worst <= 0.1 and elapsed < 120.0
    _report(
        "C8 transfer source exactness and per-topic gap",
        ok,
        f"source rows exact, worst per-topic mean gap {worst:.3f} <= 0.1 "
        f"over {len(PLANTED_SEEDS)} seeds, {elapsed:.1f}s < 120s",
    )


# --------------------------------------------------------------- criterion 9

def test_c9_full_pipeline_reruns_byte_identical(tmp_path):
    started = time.perf_counter()
    config = _smoke_config(tmp_path)
    run_synth(config)
    workdir = Path(config.paths.workdir)

    def one_run() -> dict[str, bytes]:
        run_pipeline(config)
        build_report(workdir)
        return {
            str(p.relative_to(workdir)): p.read_bytes()
            for p in sorted(workdir.rglob("*"))
            if p.is_file() and p.name != "manifest.jsonl"
        }

    first = one_run()
    shutil.rmtree(workdir)
    second = one_run()
    same_names = set(first) == set(second)
    same_bytes = same_names and all(first[k] == second[k] for k in first)
    elapsed = time.perf_counter() - started
    ok = same_bytes and len(first) >= 20 and elapsed < 120.0
    _report(
        "C9 full pipeline reruns byte-identical",
        ok,
        f"{len(first)} artifacts identical across independent runs, "
        f"{elapsed:.1f}s < 120s",
    )
