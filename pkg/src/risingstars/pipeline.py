"""Batch pipeline: run stages in dependency order inside a working directory.

Stage order is graphs, topics, features, train, evaluate, ablate, transfer,
correlate. Each stage reads its prerequisites from disk and writes its
artifacts under the workdir, so any suffix of the chain can be rerun alone.
Every stage appends a manifest line (input/output hashes, seed, duration) to
manifest.jsonl; wall-clock durations live only there, never inside reports,
so identical configs produce byte-identical artifacts.

provenance.json pins the semantic config hash of the workdir. A run whose
config hashes differently is refused outright rather than silently mixing
artifacts from two configs.
"""

from __future__ import annotations

import hashlib
import json
import time
from pathlib import Path

import numpy as np

from .config import (
    PipelineConfig,
    config_hash,
    resolved_dict,
    synth_config,
    train_config,
)
from .corpus import Corpus, citation_increments, identify_cohort, load_corpus, snapshot
from .evaluation import (
    ablation,
    ablation_grid_csv,
    correlation_report,
    evaluate_method,
    format_precision_table,
    make_method,
    method_eval_payload,
    transfer_experiment,
)
from .features import (
    FEATURE_NAMES,
    extract_features,
    load_features,
    log_transform,
    save_features,
)
from .graphs import PageRankScores, build_acn, build_accn, build_vccn, export_edges, pagerank
from .ranker import build_pairs, save_rank_model, save_scores, train_iirl, train_pointwise
from .synth import generate_corpus
from .topics import (
    author_topic_profile,
    build_documents,
    divide_researchers,
    fit_lda,
    load_topic_model,
    save_topic_model,
    top_words_table,
)

STAGES = (
    "graphs",
    "topics",
    "features",
    "train",
    "evaluate",
    "ablate",
    "transfer",
    "correlate",
)

POINTWISE_RIDGE = 1e-6


class PipelineError(RuntimeError):
    """Raised when a stage cannot run; the CLI maps it to a nonzero exit."""


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


class _Run:
    """Shared state for one run_pipeline invocation."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.hash = config_hash(config)
        self.workdir = Path(config.paths.workdir)
        self.corpus_path = Path(config.paths.corpus)
        self._corpus: Corpus | None = None

    def dir(self, name: str) -> Path:
        sub = self.workdir / name
        sub.mkdir(parents=True, exist_ok=True)
        return sub

    def corpus(self) -> Corpus:
        if self._corpus is None:
            if not self.corpus_path.exists():
                raise PipelineError(
                    f"corpus file {self.corpus_path} not found; "
                    "generate one with the synth command or point paths.corpus at it"
                )
            self._corpus = load_corpus(self.corpus_path)
        return self._corpus

    def require(self, path: Path, producer: str) -> Path:
        if not path.exists():
            raise PipelineError(
                f"missing prerequisite artifact {path.name}; run stage: {producer}"
            )
        return path

    def check_provenance(self) -> None:
        self.workdir.mkdir(parents=True, exist_ok=True)
        marker = self.workdir / "provenance.json"
        if marker.exists():
            with open(marker, encoding="utf-8") as fh:
                existing = json.load(fh)
            if existing.get("config_hash") != self.hash:
                raise PipelineError(
                    f"config hash mismatch: workdir {self.workdir} holds artifacts "
                    "from a different config; use a fresh workdir"
                )
            return
        payload = {"config_hash": self.hash, "config": resolved_dict(self.config)}
        with open(marker, "w", encoding="utf-8", newline="") as fh:
            fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")

    def manifest_line(self, stage: str, seed, inputs: list[Path], outputs: list[Path], duration: float) -> None:
        entry = {
            "stage": stage,
            "config_hash": self.hash,
            "seed": seed,
            "inputs": {p.name: _sha256(p) for p in sorted(inputs)},
            "outputs": {p.name: _sha256(p) for p in sorted(outputs)},
            "duration_s": round(duration, 6),
        }
        with open(self.workdir / "manifest.jsonl", "a", encoding="utf-8", newline="") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")


def _write_pagerank_csv(scores: PageRankScores, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("node,score\n")
        for node in sorted(scores.scores):
            fh.write(f"{node},{scores.scores[node]!r}\n")


def _read_pagerank_csv(path: Path) -> PageRankScores:
    scores: dict[int, float] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "node,score":
            raise PipelineError(f"unexpected header in {path.name}: {header!r}")
        for line in fh:
            node, score = line.strip().split(",")
            scores[int(node)] = float(score)
    return PageRankScores(scores=scores, rescaled=False)


def _write_labels(labels: dict[int, int], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("author_id,increment\n")
        for author in sorted(labels):
            fh.write(f"{author},{labels[author]}\n")


def _read_labels(path: Path) -> dict[int, float]:
    labels: dict[int, float] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "author_id,increment":
            raise PipelineError(f"unexpected header in {path.name}: {header!r}")
        for line in fh:
            author, inc = line.strip().split(",")
            labels[int(author)] = float(inc)
    return labels


def _read_groups(path: Path) -> dict[int, list[int]]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return {int(topic) - 1: list(members) for topic, members in raw.items()}


# -------------------------------------------------------------------- stages

def _stage_graphs(run: _Run):
    corpus = run.corpus()
    snap = snapshot(corpus, run.config.cohort.t)
    out = run.dir("graphs")
    outputs = []
    for name, graph in (
        ("acn", build_acn(snap)),
        ("accn", build_accn(snap)),
        ("vccn", build_vccn(snap)),
    ):
        edges = out / f"{name}_edges.csv"
        export_edges(graph, edges)
        ranks = out / f"{name}_pagerank.csv"
        _write_pagerank_csv(pagerank(graph), ranks)
        outputs.extend([edges, ranks])
    return None, [run.corpus_path], outputs


def _stage_topics(run: _Run):
    cfg = run.config
    corpus = run.corpus()
    snap = snapshot(corpus, cfg.cohort.t)
    cohort = identify_cohort(corpus, cfg.cohort.t_1st)
    if not cohort:
        raise PipelineError(
            f"no cohort authors debut in year {cfg.cohort.t_1st}; check cohort.t_1st"
        )
    cohort_set = set(cohort)
    pids = [
        pid for pid, rec in snap.papers.items() if cohort_set.intersection(rec.authors)
    ]
    docs = build_documents(snap, pids)
    model = fit_lda(
        docs,
        cfg.topics.n_topics,
        alpha=cfg.topics.alpha,
        beta=cfg.topics.beta,
        iterations=cfg.topics.iterations,
        seed=cfg.topics.seed,
    )
    out = run.dir("topics")
    model_path = out / "model.json"
    save_topic_model(model, model_path)

    profiles = {
        a: author_topic_profile(model, snap.author_papers.get(a, []), a)
        for a in cohort
    }
    groups = divide_researchers(profiles, cfg.topics.n_topics, cfg.topics.top_m)
    groups_path = out / "groups.json"
    with open(groups_path, "w", encoding="utf-8", newline="") as fh:
        payload = {str(r + 1): groups[r] for r in sorted(groups)}
        fh.write(json.dumps(payload, sort_keys=False, indent=2) + "\n")

    words_path = out / "top_words.txt"
    with open(words_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(top_words_table(model))
    return cfg.topics.seed, [run.corpus_path], [model_path, groups_path, words_path]


def _stage_features(run: _Run):
    cfg = run.config
    graphs_dir = run.workdir / "graphs"
    pr = {}
    for name in ("acn", "accn", "vccn"):
        pr[name] = _read_pagerank_csv(
            run.require(graphs_dir / f"{name}_pagerank.csv", "graphs")
        )
    model_path = run.require(run.workdir / "topics" / "model.json", "topics")
    corpus = run.corpus()
    cohort = identify_cohort(corpus, cfg.cohort.t_1st)
    model = load_topic_model(model_path)
    matrix = extract_features(
        corpus,
        cohort,
        cfg.cohort.t,
        pr["acn"],
        pr["accn"],
        pr["vccn"],
        model,
        provenance={"config_hash": run.hash, "corpus_sha256": _sha256(run.corpus_path)},
    )
    out = run.dir("features")
    features_path = out / "features.csv"
    save_features(matrix, features_path)
    labels = citation_increments(corpus, cohort, cfg.cohort.t, cfg.cohort.delta_t)
    labels_path = out / "labels.csv"
    _write_labels(labels, labels_path)
    inputs = [run.corpus_path, model_path] + [
        graphs_dir / f"{n}_pagerank.csv" for n in ("acn", "accn", "vccn")
    ]
    sidecar = features_path.with_name(features_path.name + ".meta.json")
    return None, inputs, [features_path, sidecar, labels_path]


def _load_eval_inputs(run: _Run):
    features_path = run.require(run.workdir / "features" / "features.csv", "features")
    labels_path = run.require(run.workdir / "features" / "labels.csv", "features")
    matrix = load_features(features_path)
    labels = _read_labels(labels_path)
    return features_path, labels_path, matrix, labels


def _stage_train(run: _Run):
    cfg = run.config
    features_path, labels_path, matrix, labels = _load_eval_inputs(run)
    logged = log_transform(matrix)
    y = np.array([labels[a] for a in logged.author_ids], dtype=np.float64)
    tc = train_config(cfg)
    pairs = build_pairs(y, tc.pair_cap, tc.seed)
    model = train_iirl(logged.values, pairs, tc)
    model.train_ids = list(logged.author_ids)

    out = run.dir("models")
    iirl_path = out / "iirl.json"
    save_rank_model(model, iirl_path, method="iirl")

    pw = train_pointwise(logged.values, y, ridge=POINTWISE_RIDGE)
    pw_path = out / "pointwise.json"
    with open(pw_path, "w", encoding="utf-8", newline="") as fh:
        payload = {
            "method": "pointwise",
            "feature_order": list(FEATURE_NAMES),
            "weights": [float(w) for w in pw],
            "ridge": POINTWISE_RIDGE,
        }
        fh.write(json.dumps(payload, sort_keys=True) + "\n")

    rows = []
    for method, scores in (
        ("iirl", logged.values @ model.weights),
        ("base1", matrix.values[:, 1]),
        ("base2", matrix.values[:, 15]),
        ("pointwise", logged.values @ pw),
    ):
        order = sorted(
            zip(matrix.author_ids, scores), key=lambda kv: (-kv[1], kv[0])
        )
        rows.extend((a, float(s), method) for a, s in order)
    scores_path = out / "scores.csv"
    save_scores(rows, scores_path)
    return tc.seed, [features_path, labels_path], [iirl_path, pw_path, scores_path]


def _stage_evaluate(run: _Run):
    cfg = run.config
    features_path, labels_path, matrix, labels = _load_eval_inputs(run)
    groups_path = run.require(run.workdir / "topics" / "groups.json", "topics")
    groups = _read_groups(groups_path)
    tc = train_config(cfg)
    ks = cfg.eval.k
    results = []
    for name in ("iirl", "base1", "base2", "pointwise"):
        method = make_method(name, tc, ridge=POINTWISE_RIDGE)
        results.append(
            evaluate_method(
                method, groups, labels, matrix, cfg.eval.ratio, cfg.eval.seed, ks=ks
            )
        )
    out = run.dir("reports")
    eval_path = out / "evaluation.json"
    payload = {
        "config_hash": run.hash,
        "config": resolved_dict(run.config),
        "methods": [method_eval_payload(r) for r in results],
    }
    with open(eval_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    table_path = out / "precision.txt"
    with open(table_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_precision_table(results))
    return cfg.eval.seed, [features_path, labels_path, groups_path], [eval_path, table_path]


def _stage_ablate(run: _Run):
    cfg = run.config
    features_path, labels_path, matrix, labels = _load_eval_inputs(run)
    groups_path = run.require(run.workdir / "topics" / "groups.json", "topics")
    groups = _read_groups(groups_path)
    rows = ablation(
        groups,
        labels,
        matrix,
        train_config(cfg),
        cfg.eval.ratio,
        cfg.eval.seed,
        k=10.0,
    )
    out = run.dir("reports")
    grid_path = out / "ablation.csv"
    ablation_grid_csv(rows, grid_path)
    return cfg.eval.seed, [features_path, labels_path, groups_path], [grid_path]


def _stage_transfer(run: _Run):
    cfg = run.config
    features_path, labels_path, matrix, labels = _load_eval_inputs(run)
    groups_path = run.require(run.workdir / "topics" / "groups.json", "topics")
    groups = _read_groups(groups_path)
    rows = transfer_experiment(
        groups,
        labels,
        matrix,
        train_config(cfg),
        r_hat=cfg.eval.r_hat - 1,
        ratio=cfg.eval.ratio,
        seed=cfg.eval.seed,
        ks=cfg.eval.k,
    )
    out = run.dir("reports")
    transfer_path = out / "transfer.json"
    payload = {
        "r_hat": cfg.eval.r_hat,
        "rows": [
            {
                "topic": row["topic"] + 1,
                "own": {f"{k:g}": v for k, v in row["own"].items()},
                "transfer": {f"{k:g}": v for k, v in row["transfer"].items()},
            }
            for row in rows
        ],
    }
    with open(transfer_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return cfg.eval.seed, [features_path, labels_path, groups_path], [transfer_path]


def _stage_correlate(run: _Run):
    cfg = run.config
    features_path, labels_path, matrix, labels = _load_eval_inputs(run)
    increments = np.array([labels[a] for a in matrix.author_ids], dtype=np.float64)
    out = run.dir("reports")
    corr_path = out / "correlations.csv"
    with open(corr_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("feature,value,count,mean_increment\n")
        for idx, name in enumerate(FEATURE_NAMES):
            rows = correlation_report(
                matrix.values[:, idx], increments, min_group=cfg.eval.min_group
            )
            for value, count, mean in rows:
                fh.write(f"{name},{value:.6g},{count},{mean:.6g}\n")
    return None, [features_path, labels_path], [corr_path]


_STAGE_FNS = {
    "graphs": _stage_graphs,
    "topics": _stage_topics,
    "features": _stage_features,
    "train": _stage_train,
    "evaluate": _stage_evaluate,
    "ablate": _stage_ablate,
    "transfer": _stage_transfer,
    "correlate": _stage_correlate,
}


def run_pipeline(config: PipelineConfig, stages: list[str] | None = None) -> list[str]:
    """Execute the requested stages in canonical order; returns the stages run."""
    requested = list(STAGES) if stages is None else list(stages)
    unknown = [s for s in requested if s not in STAGES]
    if unknown:
        raise PipelineError(
            f"unknown stage(s): {', '.join(unknown)}; valid stages are {', '.join(STAGES)}"
        )
    ordered = [s for s in STAGES if s in requested]
    run = _Run(config)
    run.check_provenance()
    for stage in ordered:
        started = time.perf_counter()
        seed, inputs, outputs = _STAGE_FNS[stage](run)
        run.manifest_line(stage, seed, inputs, outputs, time.perf_counter() - started)
    return ordered


def run_synth(config: PipelineConfig) -> Path:
    """Generate the synthetic corpus at paths.corpus (plus truth and manifest)."""
    corpus_path = Path(config.paths.corpus)
    out_dir = corpus_path.parent if corpus_path.parent != Path("") else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    result = generate_corpus(synth_config(config), out_dir)
    if result.corpus_path != corpus_path:
        result.corpus_path.replace(corpus_path)
    return corpus_path


# ------------------------------------------------------------------- reports

def _render_ablation_table(csv_path: Path) -> str:
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    rows = [line.split(",") for line in lines]
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    out = []
    for r in rows:
        out.append("  ".join(cell.rjust(w) for cell, w in zip(r, widths)))
    return "\n".join(out) + "\n"


def _render_transfer_table(payload: dict) -> str:
    ks = sorted({k for row in payload["rows"] for k in row["own"]}, key=float)
    header = "topic  " + "".join(
        f"{'own@' + k:>12}{'transfer@' + k:>14}" for k in ks
    )
    lines = [f"source topic (1-based): {payload['r_hat']}", header]
    for row in payload["rows"]:
        cells = "".join(
            f"{row['own'][k]:>12.4f}{row['transfer'][k]:>14.4f}" for k in ks
        )
        lines.append(f"{row['topic']:>5}  {cells}")
    return "\n".join(lines) + "\n"


def build_report(workdir: str | Path) -> str:
    """Consolidate evaluation, ablation, transfer, and correlation artifacts.

    Writes reports/report.txt and reports/report.json, returning the text.
    """
    workdir = Path(workdir)
    reports = workdir / "reports"
    eval_path = reports / "evaluation.json"
    if not eval_path.exists():
        raise PipelineError(
            f"no evaluation artifacts in {workdir}; run stage: evaluate"
        )
    with open(eval_path, encoding="utf-8") as fh:
        evaluation = json.load(fh)

    sections = ["rising stars pipeline report", "============================", ""]
    sections.append(f"config hash: {evaluation['config_hash']}")
    sections.append("")
    sections.append("per-topic precision (rows: topic, k%; columns: methods)")
    sections.append("-------------------------------------------------------")
    sections.append((reports / "precision.txt").read_text(encoding="utf-8"))

    report_json = {
        "config": evaluation["config"],
        "config_hash": evaluation["config_hash"],
        "methods": evaluation["methods"],
    }

    ablation_path = reports / "ablation.csv"
    if ablation_path.exists():
        sections.append("ablation grid (Pre@10%, keep/drop by feature group)")
        sections.append("---------------------------------------------------")
        sections.append(_render_ablation_table(ablation_path))
        report_json["ablation_csv"] = ablation_path.read_text(encoding="utf-8")

    transfer_path = reports / "transfer.json"
    if transfer_path.exists():
        with open(transfer_path, encoding="utf-8") as fh:
            transfer = json.load(fh)
        sections.append("transfer: own-topic model vs source-topic model")
        sections.append("-----------------------------------------------")
        sections.append(_render_transfer_table(transfer))
        report_json["transfer"] = transfer

    corr_path = reports / "correlations.csv"
    if corr_path.exists():
        sections.append("feature-value groups vs mean citation increment")
        sections.append("-----------------------------------------------")
        sections.append(corr_path.read_text(encoding="utf-8"))
        report_json["correlations_csv"] = corr_path.read_text(encoding="utf-8")

    text = "\n".join(sections)
    if not text.endswith("\n"):
        text += "\n"
    with open(reports / "report.txt", "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    with open(reports / "report.json", "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(report_json, sort_keys=True, indent=2) + "\n")
    return text
