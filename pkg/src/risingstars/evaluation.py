"""Evaluation: shared splits, precision at k percent, transfer and ablation studies.

Topic ids are 0-based internally; reports print them 1-based. Every method
evaluated on a topic sees the same (topic, seed) split, so comparisons never
mix partitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_GROUPS, FEATURE_NAMES, FeatureMatrix, log_transform
from .ranker import TrainConfig, build_pairs, train_iirl, train_pointwise


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(
    group: list[int], ratio: float, seed: int, salt: int = 0
) -> tuple[list[int], list[int]]:
    """Seeded uniform partition; |train| = round-half-up(ratio * n)."""
    if len(group) < 2:
        raise ValueError("cannot split a group of fewer than 2 authors")
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must be strictly between 0 and 1")
    members = sorted(group)
    n_train = round_half_up(ratio * len(members))
    if n_train == 0 or n_train == len(members):
        raise ValueError("split leaves an empty side; adjust ratio")
    rng = np.random.default_rng((seed, salt))
    perm = rng.permutation(len(members))
    train = sorted(members[i] for i in perm[:n_train])
    test = sorted(members[i] for i in perm[n_train:])
    return train, test


def top_k_set(scores: dict[int, float], k_percent: float) -> set[int]:
    """Top k% of authors by score; size max(1, round-half-up); ties to lower ids."""
    if not scores:
        raise ValueError("cannot take top-k of an empty score map")
    m = max(1, round_half_up(k_percent / 100.0 * len(scores)))
    order = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return {author for author, _ in order[:m]}


def precision_at_k(predicted: set[int], true: set[int]) -> float:
    if not true:
        raise ValueError("true top-k set is empty")
    return len(predicted & true) / len(true)


# ------------------------------------------------------------------- methods

class IirlMethod:
    """Pairwise increment ranker behind the shared method interface."""

    name = "iirl"

    def __init__(self, config: TrainConfig):
        self.config = config
        self.model = None

    def fit(self, matrix: FeatureMatrix, labels: dict[int, float], train_ids: list[int]) -> None:
        logged = matrix if matrix.transformed else log_transform(matrix)
        index = {a: i for i, a in enumerate(logged.author_ids)}
        X = logged.values[[index[a] for a in train_ids]]
        y = np.array([labels[a] for a in train_ids], dtype=np.float64)
        pairs = build_pairs(y, self.config.pair_cap, self.config.seed)
        self.model = train_iirl(X, pairs, self.config)
        self.model.train_ids = list(train_ids)

    def scores(self, matrix: FeatureMatrix, ids: list[int]) -> dict[int, float]:
        logged = matrix if matrix.transformed else log_transform(matrix)
        index = {a: i for i, a in enumerate(logged.author_ids)}
        values = logged.values[[index[a] for a in ids]] @ self.model.weights
        return {a: float(v) for a, v in zip(ids, values)}


class PointwiseMethod:
    """Ridge least-squares on the transformed features; scores are predictions."""

    name = "pointwise"

    def __init__(self, ridge: float = 1e-6):
        self.ridge = ridge
        self.weights = None

    def fit(self, matrix: FeatureMatrix, labels: dict[int, float], train_ids: list[int]) -> None:
        logged = matrix if matrix.transformed else log_transform(matrix)
        index = {a: i for i, a in enumerate(logged.author_ids)}
        X = logged.values[[index[a] for a in train_ids]]
        y = np.array([labels[a] for a in train_ids], dtype=np.float64)
        self.weights = train_pointwise(X, y, ridge=self.ridge)

    def scores(self, matrix: FeatureMatrix, ids: list[int]) -> dict[int, float]:
        logged = matrix if matrix.transformed else log_transform(matrix)
        index = {a: i for i, a in enumerate(logged.author_ids)}
        values = logged.values[[index[a] for a in ids]] @ self.weights
        return {a: float(v) for a, v in zip(ids, values)}


class _RawColumnMethod:
    """Training-free baseline reading one raw feature column."""

    column = ""

    def fit(self, matrix: FeatureMatrix, labels: dict[int, float], train_ids: list[int]) -> None:
        if matrix.transformed:
            raise ValueError(f"{self.name} baseline needs raw, untransformed features")

    def scores(self, matrix: FeatureMatrix, ids: list[int]) -> dict[int, float]:
        if matrix.transformed:
            raise ValueError(f"{self.name} baseline needs raw, untransformed features")
        index = {a: i for i, a in enumerate(matrix.author_ids)}
        col = matrix.column(self.column)
        return {a: float(col[index[a]]) for a in ids}


class Base1Method(_RawColumnMethod):
    """Rank by current citation count."""

    name = "base1"
    column = "F2"


class Base2Method(_RawColumnMethod):
    """Rank by mean citation increment over the two previous years."""

    name = "base2"
    column = "F16"


def make_method(name: str, train_config: TrainConfig, ridge: float = 1e-6):
    if name == "iirl":
        return IirlMethod(train_config)
    if name == "base1":
        return Base1Method()
    if name == "base2":
        return Base2Method()
    if name == "pointwise":
        return PointwiseMethod(ridge)
    raise ValueError(f"unknown method {name!r}")


# ---------------------------------------------------------------- evaluation

@dataclass(slots=True)
class MethodEval:
    method: str
    k_values: tuple[float, ...]
    per_topic: dict[int, dict[float, float]]  # topic -> k -> precision
    macro: dict[float, float]
    n_test: dict[int, int]
    skipped: list[int]
    seed: int


def evaluate_method(
    method,
    groups: dict[int, list[int]],
    labels: dict[int, float],
    matrix: FeatureMatrix,
    ratio: float,
    seed: int,
    ks: tuple[float, ...] = (10.0, 20.0),
) -> MethodEval:
    """Split each topic group, fit on the train half, measure Pre@k on the test half.

    The split depends only on (topic, seed), so every method shares partitions.
    Topics with fewer than 4 members are skipped and excluded from the macro
    average.
    """
    per_topic: dict[int, dict[float, float]] = {}
    n_test: dict[int, int] = {}
    skipped: list[int] = []
    for topic in sorted(groups):
        members = groups[topic]
        if len(members) < 4:
            skipped.append(topic)
            continue
        train_ids, test_ids = split(members, ratio, seed, salt=topic)
        method.fit(matrix, labels, train_ids)
        predicted_scores = method.scores(matrix, test_ids)
        true_scores = {a: labels[a] for a in test_ids}
        per_topic[topic] = {}
        for k in ks:
            predicted = top_k_set(predicted_scores, k)
            true = top_k_set(true_scores, k)
            per_topic[topic][k] = precision_at_k(predicted, true)
        n_test[topic] = len(test_ids)
    macro = {
        k: (sum(per_topic[t][k] for t in per_topic) / len(per_topic)) if per_topic else 0.0
        for k in ks
    }
    return MethodEval(
        method=method.name,
        k_values=tuple(ks),
        per_topic=per_topic,
        macro=macro,
        n_test=n_test,
        skipped=skipped,
        seed=seed,
    )


def transfer_experiment(
    groups: dict[int, list[int]],
    labels: dict[int, float],
    matrix: FeatureMatrix,
    train_config: TrainConfig,
    r_hat: int,
    ratio: float,
    seed: int,
    ks: tuple[float, ...] = (10.0, 20.0),
) -> list[dict]:
    """Score each topic's test half with its own model and with topic r_hat's model.

    ``r_hat`` is the 0-based internal topic index. For topic r_hat itself the
    two rows are identical by construction.
    """
    if r_hat not in groups:
        raise ValueError(f"transfer source topic {r_hat} does not exist")
    if len(groups[r_hat]) < 4:
        raise ValueError(f"transfer source topic {r_hat} is too small to split")
    source_train, _ = split(groups[r_hat], ratio, seed, salt=r_hat)
    source_method = IirlMethod(train_config)
    source_method.fit(matrix, labels, source_train)

    rows: list[dict] = []
    for topic in sorted(groups):
        members = groups[topic]
        if len(members) < 4:
            continue
        train_ids, test_ids = split(members, ratio, seed, salt=topic)
        own = IirlMethod(train_config)
        own.fit(matrix, labels, train_ids)
        own_scores = own.scores(matrix, test_ids)
        transfer_scores = source_method.scores(matrix, test_ids)
        true_scores = {a: labels[a] for a in test_ids}
        row = {"topic": topic, "own": {}, "transfer": {}}
        for k in ks:
            true = top_k_set(true_scores, k)
            row["own"][k] = precision_at_k(top_k_set(own_scores, k), true)
            row["transfer"][k] = precision_at_k(top_k_set(transfer_scores, k), true)
        rows.append(row)
    return rows


# ------------------------------------------------------------------ ablation

def mask_features(matrix: FeatureMatrix, zero_columns: tuple[int, ...]) -> FeatureMatrix:
    """Copy of the matrix with the given 0-based columns zeroed out."""
    values = matrix.values.copy()
    for col in zero_columns:
        values[:, col] = 0.0
    return FeatureMatrix(
        author_ids=list(matrix.author_ids),
        values=values,
        transformed=matrix.transformed,
        provenance=dict(matrix.provenance),
    )


def ablation(
    groups: dict[int, list[int]],
    labels: dict[int, float],
    matrix: FeatureMatrix,
    train_config: TrainConfig,
    ratio: float,
    seed: int,
    k: float = 10.0,
    modes: tuple[str, ...] = ("keep", "drop"),
    feature_groups: tuple[str, ...] | None = None,
) -> list[dict]:
    """Retrain with feature blocks kept alone or removed; Pre@k per topic.

    Returns rows {mode, group, topic, precision}; mode "all" rows carry the
    unmasked model as the reference column.
    """
    names = feature_groups if feature_groups is not None else tuple(FEATURE_GROUPS)
    for name in names:
        if name not in FEATURE_GROUPS:
            raise ValueError(f"unknown feature group {name!r}")
    for mode in modes:
        if mode not in ("keep", "drop"):
            raise ValueError(f"unknown ablation mode {mode!r}")

    variants: list[tuple[str, str, FeatureMatrix]] = [("all", "all", matrix)]
    all_cols = set(range(len(FEATURE_NAMES)))
    for mode in modes:
        for name in names:
            cols = set(FEATURE_GROUPS[name])
            zero = tuple(sorted(cols if mode == "drop" else all_cols - cols))
            variants.append((mode, name, mask_features(matrix, zero)))

    rows: list[dict] = []
    for mode, name, masked in variants:
        result = evaluate_method(
            IirlMethod(train_config), groups, labels, masked, ratio, seed, ks=(k,)
        )
        for topic in sorted(result.per_topic):
            rows.append(
                {
                    "mode": mode,
                    "group": name,
                    "topic": topic,
                    "precision": result.per_topic[topic][k],
                }
            )
    return rows


def ablation_grid_csv(rows: list[dict], path) -> None:
    """Topic-per-row grid: keep-* columns, drop-* columns, then the full model."""
    modes_groups: list[tuple[str, str]] = []
    for mode in ("keep", "drop"):
        for name in FEATURE_GROUPS:
            if any(r["mode"] == mode and r["group"] == name for r in rows):
                modes_groups.append((mode, name))
    topics = sorted({r["topic"] for r in rows})
    cell = {(r["mode"], r["group"], r["topic"]): r["precision"] for r in rows}
    header = ["topic"] + [f"{m}_{g}" for m, g in modes_groups] + ["all"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for topic in topics:
            cells = [str(topic + 1)]
            for m, g in modes_groups:
                cells.append(f"{cell[(m, g, topic)]:.6g}")
            cells.append(f"{cell[('all', 'all', topic)]:.6g}")
            fh.write(",".join(cells) + "\n")


# -------------------------------------------------------------- correlations

def correlation_report(
    values: np.ndarray, increments: np.ndarray, min_group: int = 100
) -> list[tuple[float, int, float]]:
    """Group authors by (bucketed) feature value; report mean increment per group.

    Integer-valued columns group exactly; continuous columns are bucketed to
    2 significant digits. Only groups with more than min_group members emit a
    row. Rows are sorted by feature value.
    """
    values = np.asarray(values, dtype=np.float64)
    increments = np.asarray(increments, dtype=np.float64)
    integral = bool(np.all(values == np.floor(values)))
    buckets: dict[float, list[float]] = {}
    for v, s in zip(values, increments):
        key = float(v) if integral else float(f"{v:.2g}")
        buckets.setdefault(key, []).append(float(s))
    rows = []
    for key in sorted(buckets):
        members = buckets[key]
        if len(members) > min_group:
            rows.append((key, len(members), sum(members) / len(members)))
    return rows


def correlation_csv(rows: list[tuple[float, int, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("value,count,mean_increment\n")
        for value, count, mean in rows:
            fh.write(f"{value:.6g},{count},{mean:.6g}\n")


# ------------------------------------------------------------------- reports

def format_precision_table(results: list[MethodEval]) -> str:
    """Aligned text table: one row per topic and k, one column per method."""
    if not results:
        return "(no evaluation results)\n"
    ks = results[0].k_values
    methods = [r.method for r in results]
    topics = sorted({t for r in results for t in r.per_topic})
    width = max(10, *(len(m) + 2 for m in methods))
    lines = ["topic  k%    " + "".join(m.rjust(width) for m in methods)]
    for topic in topics:
        for k in ks:
            cells = []
            for r in results:
                value = r.per_topic.get(topic, {}).get(k)
                cells.append(("-" if value is None else f"{value:.4f}").rjust(width))
            lines.append(f"{topic + 1:>5}  {k:<4g}  " + "".join(cells))
    lines.append("")
    for k in ks:
        cells = [f"{r.macro[k]:.4f}".rjust(width) for r in results]
        lines.append(f"macro  {k:<4g}  " + "".join(cells))
    return "\n".join(lines) + "\n"


def method_eval_payload(result: MethodEval) -> dict:
    """JSON-ready view of one method's evaluation (topics printed 1-based)."""
    return {
        "method": result.method,
        "seed": result.seed,
        "k_values": list(result.k_values),
        "per_topic": {
            str(t + 1): {f"{k:g}": v for k, v in result.per_topic[t].items()}
            for t in sorted(result.per_topic)
        },
        "n_test": {str(t + 1): result.n_test[t] for t in sorted(result.n_test)},
        "macro": {f"{k:g}": v for k, v in result.macro.items()},
        "skipped_topics": [t + 1 for t in result.skipped],
    }
