"""Pairwise increment ranker plus the two citation-count baselines.

The ranker scores an author by a weighted sum of feature values and learns the
weights from ordered pairs (i scored above j whenever i's later citation gain
is strictly larger). Training maximizes

    sum over pairs of ln sigmoid(s_i - s_j)  -  lambda_w * ||w||^2

by per-pair SGD with the update

    w <- w + alpha * (sigmoid(-(s_i - s_j)) * (f_i - f_j) - lambda_w * w)

which is the exact gradient of the single-pair objective
ln sigmoid(s_i - s_j) - (lambda_w / 2) * ||w||^2 (see pair_objective).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .features import FEATURE_NAMES, FeatureMatrix


@dataclass(slots=True)
class TrainConfig:
    alpha: float = 0.01          # SGD step size
    lambda_w: float = 0.01       # prior variance of the init and decay strength
    max_epochs: int = 100
    rel_tol: float = 1e-6        # relative objective change between epochs
    pair_cap: int = 2_000_000
    seed: int = 0


@dataclass(slots=True)
class RankModel:
    weights: np.ndarray
    config: TrainConfig
    seed: int
    objective_trace: list[float]
    initial_objective: float
    epochs_run: int
    warning: str | None = None
    train_ids: list[int] = field(default_factory=list)

    def score(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) @ self.weights


def build_pairs(
    labels: np.ndarray, pair_cap: int = 2_000_000, seed: int = 0
) -> np.ndarray:
    """Ordered index pairs (i, j) with labels[i] > labels[j], row-major order.

    Ties produce no pair. When the count exceeds pair_cap, a seeded uniform
    subsample of exactly pair_cap pairs is kept (original order preserved).
    """
    labels = np.asarray(labels, dtype=np.float64)
    n = len(labels)
    blocks = []
    step = 1024
    for start in range(0, n, step):
        gt = labels[start : start + step, None] > labels[None, :]
        bi, bj = np.nonzero(gt)
        if len(bi):
            blocks.append(np.stack([bi + start, bj], axis=1))
    if not blocks:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.concatenate(blocks).astype(np.int64)
    if len(pairs) > pair_cap:
        rng = np.random.default_rng(seed)
        keep = rng.choice(len(pairs), size=pair_cap, replace=False)
        keep.sort()
        pairs = pairs[keep]
    return pairs


def log_sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    """ln(1 / (1 + e^-x)) without overflow for large |x|."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


def iirl_score(weights: np.ndarray, features: np.ndarray) -> float:
    return float(np.dot(weights, features))


def iirl_objective(
    weights: np.ndarray, features: np.ndarray, pairs: np.ndarray, lambda_w: float
) -> float:
    """Full training objective over a pair set."""
    scores = features @ weights
    if len(pairs):
        margins = scores[pairs[:, 0]] - scores[pairs[:, 1]]
        fit = float(log_sigmoid(margins).sum())
    else:
        fit = 0.0
    return fit - lambda_w * float(np.dot(weights, weights))


def pair_objective(
    weights: np.ndarray, f_i: np.ndarray, f_j: np.ndarray, lambda_w: float
) -> float:
    """Single-pair objective whose exact gradient sgd_step applies.

    The per-pair decay term carries a 1/2 so that its gradient is lambda_w * w,
    matching the update rule.
    """
    d = float(np.dot(weights, f_i - f_j))
    return float(log_sigmoid(d)) - 0.5 * lambda_w * float(np.dot(weights, weights))


def sgd_step(
    weights: np.ndarray,
    f_i: np.ndarray,
    f_j: np.ndarray,
    alpha: float,
    lambda_w: float,
) -> np.ndarray:
    """One ascent step on pair_objective; returns the new weight vector."""
    diff = f_i - f_j
    d = float(np.dot(weights, diff))
    if d >= 0.0:
        e = np.exp(-d)
        c = e / (1.0 + e)
    else:
        c = 1.0 / (1.0 + np.exp(d))
    return weights + alpha * (c * diff - lambda_w * weights)


@njit(cache=True)
def _sgd_epoch(weights, X, pi, pj, order, alpha, lam):
    n_features = weights.shape[0]
    for idx in range(order.shape[0]):
        p = order[idx]
        i = pi[p]
        j = pj[p]
        d = 0.0
        for k in range(n_features):
            d += weights[k] * (X[i, k] - X[j, k])
        if d >= 0.0:
            e = np.exp(-d)
            c = e / (1.0 + e)
        else:
            c = 1.0 / (1.0 + np.exp(d))
        for k in range(n_features):
            weights[k] += alpha * (c * (X[i, k] - X[j, k]) - lam * weights[k])


def train_iirl(
    features: np.ndarray, pairs: np.ndarray, config: TrainConfig
) -> RankModel:
    """Seeded SGD training: init w ~ N(0, lambda_w * I), shuffled sweeps, early stop."""
    X = np.ascontiguousarray(features, dtype=np.float64)
    rng = np.random.default_rng(config.seed)
    weights = rng.normal(0.0, np.sqrt(config.lambda_w), X.shape[1])
    initial = iirl_objective(weights, X, pairs, config.lambda_w)
    if len(pairs) == 0:
        return RankModel(
            weights=weights,
            config=config,
            seed=config.seed,
            objective_trace=[],
            initial_objective=initial,
            epochs_run=0,
            warning="no training pairs; returning initial weights",
        )
    pi = np.ascontiguousarray(pairs[:, 0])
    pj = np.ascontiguousarray(pairs[:, 1])
    trace: list[float] = []
    prev = None
    for _ in range(config.max_epochs):
        order = rng.permutation(len(pairs))
        _sgd_epoch(weights, X, pi, pj, order, config.alpha, config.lambda_w)
        current = iirl_objective(weights, X, pairs, config.lambda_w)
        trace.append(current)
        if prev is not None and abs(current - prev) / (abs(prev) + 1e-12) < config.rel_tol:
            break
        prev = current
    return RankModel(
        weights=weights,
        config=config,
        seed=config.seed,
        objective_trace=trace,
        initial_objective=initial,
        epochs_run=len(trace),
    )


# ------------------------------------------------------------------ baselines

def _raw_column(matrix: FeatureMatrix, name: str) -> np.ndarray:
    if matrix.transformed:
        raise ValueError(f"{name} baseline needs raw, untransformed features")
    return matrix.column(name)


def base1_score(matrix: FeatureMatrix, author_id: int) -> float:
    """Current citation count (raw F2)."""
    return float(_raw_column(matrix, "F2")[matrix.author_ids.index(author_id)])


def base2_score(matrix: FeatureMatrix, author_id: int) -> float:
    """Mean citation increment over the two previous years (raw F16)."""
    return float(_raw_column(matrix, "F16")[matrix.author_ids.index(author_id)])


def train_pointwise(
    features: np.ndarray, labels: np.ndarray, ridge: float = 0.0
) -> np.ndarray:
    """Least-squares weights via the normal equations, optionally ridge-damped.

    Without ridge the problem must be overdetermined; with ridge > 0 the
    gram matrix is positive definite at any row count.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if ridge <= 0.0 and X.shape[0] < X.shape[1]:
        raise ValueError("need at least as many rows as features")
    gram = X.T @ X + ridge * np.eye(X.shape[1])
    try:
        return np.linalg.solve(gram, X.T @ y)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "singular normal equations; retry with ridge > 0"
        ) from exc


# ---------------------------------------------------------------- persistence

def save_rank_model(model: RankModel, path: str | Path, method: str = "iirl") -> None:
    payload = {
        "method": method,
        "feature_order": list(FEATURE_NAMES),
        "weights": [float(w) for w in model.weights],
        "config": {
            "alpha": model.config.alpha,
            "lambda_w": model.config.lambda_w,
            "max_epochs": model.config.max_epochs,
            "rel_tol": model.config.rel_tol,
            "pair_cap": model.config.pair_cap,
            "seed": model.config.seed,
        },
        "seed": model.seed,
        "initial_objective": model.initial_objective,
        "objective_trace": [float(x) for x in model.objective_trace],
        "epochs_run": model.epochs_run,
        "warning": model.warning,
        "train_ids": list(model.train_ids),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, separators=(",", ":"))
        fh.write("\n")


def load_rank_model(path: str | Path) -> RankModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    cfg = TrainConfig(**payload["config"])
    return RankModel(
        weights=np.asarray(payload["weights"], dtype=np.float64),
        config=cfg,
        seed=payload["seed"],
        objective_trace=list(payload["objective_trace"]),
        initial_objective=payload["initial_objective"],
        epochs_run=payload["epochs_run"],
        warning=payload.get("warning"),
        train_ids=list(payload.get("train_ids", [])),
    )


def save_scores(
    rows: list[tuple[int, float, str]], path: str | Path
) -> None:
    """CSV of ranking scores: author_id,score,method."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("author_id,score,method\n")
        for author_id, score, method in rows:
            fh.write(f"{author_id},{score!r},{method}\n")
