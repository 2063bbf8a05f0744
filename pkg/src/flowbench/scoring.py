"""Anomaly scorers and evaluation metrics.

Scores follow the anomaly-positive convention: higher score means more
anomalous, so the likelihood scorer is the negative log-likelihood.  AUROC is
the Mann-Whitney estimate of P(score_anomaly > score_normal) with ties worth
one half; AUPRC is step-interpolated average precision.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import ScalerState, apply_scaler
from .errors import DimMismatch, IncompleteMatrix, NotEnoughRows, SingleClass
from .flows import FlowModel, log_likelihood
from .linalg import sym_eigen


@dataclass
class ScoreVector:
    scores: np.ndarray
    scorer: str

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")


@dataclass
class EvalReport:
    auroc: float
    auprc: float
    n_normal: int
    n_anomaly: int
    seed: int = 0


def slt_score(model: FlowModel, scaler: ScalerState | None, x: np.ndarray) -> ScoreVector:
    """Plain likelihood test: score = -log p(scaled x)."""
    xs = x if scaler is None else apply_scaler(scaler, x)
    return ScoreVector(-log_likelihood(model, xs), "slt")


def typicality_score(model: FlowModel, scaler: ScalerState | None,
                     x_train: np.ndarray, x: np.ndarray) -> ScoreVector:
    """Distance of -log p(x) from the training-set mean of -log p.

    ``x_train`` is the raw training matrix; the scaler (the one fitted during
    training) is applied here to both arguments.
    """
    xt = x_train if scaler is None else apply_scaler(scaler, x_train)
    xs = x if scaler is None else apply_scaler(scaler, x)
    h_hat = float(np.mean(-log_likelihood(model, xt)))
    return ScoreVector(np.abs(-log_likelihood(model, xs) - h_hat), "typicality")


def pca_baseline_score(x_train: np.ndarray, x: np.ndarray,
                       component_ratio: float = 0.8) -> ScoreVector:
    """Squared reconstruction error after projecting onto the top principal
    components (ceil(component_ratio * d) of them) of the training covariance."""
    x_train = np.asarray(x_train, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x_train.ndim != 2 or x_train.shape[0] < 2:
        raise NotEnoughRows("need at least two training rows")
    if x.shape[1] != x_train.shape[1]:
        raise DimMismatch("train and test feature counts differ")
    if not 0.0 < component_ratio <= 1.0:
        raise ValueError("component_ratio must lie in (0, 1]")
    d = x_train.shape[1]
    mean = x_train.mean(axis=0)
    centered = x_train - mean
    cov = centered.T @ centered / x_train.shape[0]
    _, vecs = sym_eigen(cov)
    m = int(np.ceil(component_ratio * d))
    basis = vecs[:, :m]
    resid = (x - mean) - (x - mean) @ basis @ basis.T
    return ScoreVector(np.sum(resid * resid, axis=1), "pca")


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks of ``values`` ascending; ties share the mean rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _check_two_classes(labels: np.ndarray):
    labels = np.asarray(labels)
    n1 = int(np.sum(labels == 1))
    n0 = labels.size - n1
    if n0 == 0 or n1 == 0:
        raise SingleClass("need both normal and anomaly labels")
    return n0, n1


def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUROC: P(anomaly score > normal score), ties count 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n0, n1 = _check_two_classes(labels)
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n1 * (n1 + 1) / 2.0) / (n0 * n1)


def auprc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Average precision with descending-score thresholds; tied scores are
    processed as a single threshold group."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _, n1 = _check_two_classes(labels)
    order = np.argsort(-scores, kind="stable")
    y = labels[order]
    s = scores[order]
    # last index of each tie group
    boundary = np.flatnonzero(np.diff(s) != 0.0)
    group_ends = np.concatenate([boundary, [s.size - 1]])
    tp = np.cumsum(y)[group_ends].astype(np.float64)
    n_seen = (group_ends + 1).astype(np.float64)
    precision = tp / n_seen
    recall = tp / n1
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


def evaluate(scores: np.ndarray, labels: np.ndarray, seed: int = 0) -> EvalReport:
    n0, n1 = _check_two_classes(labels)
    return EvalReport(auroc(scores, labels), auprc(scores, labels), n0, n1, seed)


# ---------------------------------------------------------------------------
# Rank tables over a model x dataset score matrix
# ---------------------------------------------------------------------------

@dataclass
class RankTable:
    models: list
    datasets: list
    aurocs: np.ndarray            # (n_datasets, n_models)
    ranks: np.ndarray             # same shape; 1 = best, ties share mean rank
    avg_rank: np.ndarray          # per model
    top2_ratio: np.ndarray        # fraction of datasets with rank <= 2
    fail_ratio: np.ndarray        # fraction with rank >= fail_threshold
    fail_threshold: int = 9


def rank_table(aurocs: np.ndarray, models: list, datasets: list,
               fail_threshold: int = 9) -> RankTable:
    """Per-dataset descending-AUROC ranks plus per-model summaries."""
    aurocs = np.asarray(aurocs, dtype=np.float64)
    if aurocs.shape != (len(datasets), len(models)):
        raise DimMismatch("matrix shape does not match dataset/model lists")
    if not np.all(np.isfinite(aurocs)):
        raise IncompleteMatrix("matrix has missing or non-finite cells")
    ranks = np.vstack([_average_ranks(-row) for row in aurocs])
    return RankTable(
        models=list(models),
        datasets=list(datasets),
        aurocs=aurocs,
        ranks=ranks,
        avg_rank=ranks.mean(axis=0),
        top2_ratio=(ranks <= 2).mean(axis=0),
        fail_ratio=(ranks >= fail_threshold).mean(axis=0),
        fail_threshold=fail_threshold,
    )


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------

def write_scores_csv(path: str, sv: ScoreVector, labels: np.ndarray | None = None,
                     header_comment: str | None = None) -> None:
    """Score export: columns (row_index, score, label)."""
    from .data import atomic_write_text
    lines = ["#" + line for line in (header_comment or "").splitlines()]
    lines.append("row_index,score,label")
    for i, s in enumerate(sv.scores):
        lab = "" if labels is None else int(labels[i])
        lines.append(f"{i},{s!r},{lab}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_auroc_matrix(path: str):
    """Read the model-score matrix CSV: header = model names, first column =
    dataset name.  Returns (datasets, models, matrix)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    if not rows:
        raise IncompleteMatrix(f"{path} is empty")
    models = rows[0][1:]
    datasets, values = [], []
    for r in rows[1:]:
        if len(r) != len(models) + 1:
            raise IncompleteMatrix(f"{path}: row {r[0]!r} has {len(r) - 1} cells, "
                                   f"expected {len(models)}")
        datasets.append(r[0])
        try:
            values.append([float(v) for v in r[1:]])
        except ValueError as exc:
            raise IncompleteMatrix(f"{path}: row {r[0]!r}: {exc}") from exc
    return datasets, models, np.asarray(values, dtype=np.float64)


def write_auroc_matrix(path: str, datasets: list, models: list, matrix: np.ndarray,
                       header_comment: str | None = None) -> None:
    from .data import atomic_write_text
    lines = ["#" + line for line in (header_comment or "").splitlines()]
    lines.append(",".join(["dataset"] + list(models)))
    for name, row in zip(datasets, np.asarray(matrix)):
        lines.append(",".join([name] + [f"{v:.6g}" for v in row]))
    atomic_write_text(path, "\n".join(lines) + "\n")
