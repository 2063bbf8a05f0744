"""Dataset ingestion, feature scaling, train/test splitting, persistence.

The split protocol: half of the normal rows (shuffled by seed) form the
training matrix; the remaining normals plus all anomalies form the test set.
An optional contamination ratio moves a seeded random selection of anomalies
into the training matrix (unlabeled there) and out of the test set.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import (CorruptFile, DimMismatch, EmptyDataset, MissingLabelColumn,
                     ParseError, SchemaVersionMismatch, TooFewNormals)
from .flows import FlowModel, flow_from_dict, flow_to_dict, FLOW_FORMAT_VERSION
from .rng import RngState

SCALER_KINDS = ("robust", "standard", "minmax", "none")


@dataclass
class LabeledDataset:
    features: np.ndarray          # (n, d) float64
    labels: np.ndarray            # (n,) int, 0 = normal, 1 = anomaly
    name: str = ""
    col_names: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise DimMismatch("labels must align with feature rows")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise ValueError("labels must be 0 or 1")
        if not np.any(self.labels == 0):
            raise ValueError("dataset needs at least one normal row")

    @property
    def n_normal(self) -> int:
        return int(np.sum(self.labels == 0))

    @property
    def n_anomaly(self) -> int:
        return int(np.sum(self.labels == 1))


@dataclass
class ScalerState:
    kind: str
    center: np.ndarray
    scale: np.ndarray

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": self.center.tolist(),
                "scale": self.scale.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "ScalerState":
        return ScalerState(d["kind"], np.asarray(d["center"], dtype=np.float64),
                           np.asarray(d["scale"], dtype=np.float64))


@dataclass
class SplitSpec:
    seed: int = 0
    contamination_ratio: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.contamination_ratio < 1.0:
            raise ValueError("contamination_ratio must lie in [0, 1)")


def load_csv(path: str, label_column: str = "label") -> LabeledDataset:
    """Read a numeric CSV with a header row and a binary label column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path} has no header row")
        if label_column not in header:
            raise MissingLabelColumn(f"{path} lacks column {label_column!r}")
        label_idx = header.index(label_column)
        feat_names = [h for i, h in enumerate(header) if i != label_idx]
        feats, labels = [], []
        for r, row in enumerate(reader, start=1):
            if not row:
                continue
            vals = []
            for i, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(r, header[i] if i < len(header) else str(i))
                if i == label_idx:
                    if v not in (0.0, 1.0):
                        raise ParseError(r, header[label_idx])
                    labels.append(int(v))
                else:
                    vals.append(v)
            feats.append(vals)
    if not feats:
        raise EmptyDataset(f"{path} has no data rows")
    name = os.path.splitext(os.path.basename(path))[0]
    return LabeledDataset(np.asarray(feats), np.asarray(labels), name=name,
                          col_names=feat_names)


def save_csv(path: str, dataset: LabeledDataset, header_comment: str | None = None):
    """Write a dataset in the same CSV format :func:`load_csv` reads."""
    cols = dataset.col_names or [f"f{i}" for i in range(dataset.features.shape[1])]
    rows = ["#" + line for line in (header_comment or "").splitlines()]
    rows.append(",".join(cols + ["label"]))
    for x, y in zip(dataset.features, dataset.labels):
        rows.append(",".join(repr(float(v)) for v in x) + f",{int(y)}")
    atomic_write_text(path, "\n".join(rows) + "\n")


def fit_scaler(x_train: np.ndarray, kind: str = "robust") -> ScalerState:
    """Per-feature affine scaler fitted on training rows only.

    robust: median / interquartile range; standard: mean / population std;
    minmax: min / range; none: identity.  Zero spreads are replaced by 1.
    """
    x = np.asarray(x_train, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimMismatch("need a non-empty 2-D training matrix")
    if kind not in SCALER_KINDS:
        raise ValueError(f"kind must be one of {SCALER_KINDS}")
    d = x.shape[1]
    if kind == "robust":
        q25, q50, q75 = np.percentile(x, [25.0, 50.0, 75.0], axis=0)
        center, scale = q50, q75 - q25
    elif kind == "standard":
        center, scale = x.mean(axis=0), x.std(axis=0)
    elif kind == "minmax":
        center, scale = x.min(axis=0), x.max(axis=0) - x.min(axis=0)
    else:
        center, scale = np.zeros(d), np.ones(d)
    scale = np.where(scale == 0.0, 1.0, scale)
    return ScalerState(kind, np.asarray(center, dtype=np.float64), scale)


def apply_scaler(state: ScalerState, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != state.center.shape[0]:
        raise DimMismatch("feature count does not match the fitted scaler")
    return (x - state.center) / state.scale


def split_zong(dataset: LabeledDataset, spec: SplitSpec):
    """Half the normals (seed-shuffled) train; the rest plus anomalies test.

    With ``contamination_ratio`` r > 0, round(r * n_train_normals) anomalies
    are moved into the training matrix and removed from the test set.

    Returns (train_features, test_dataset).
    """
    normals = np.flatnonzero(dataset.labels == 0)
    anomalies = np.flatnonzero(dataset.labels == 1)
    if normals.size < 2:
        raise TooFewNormals(f"{normals.size} normal rows; need at least 2")
    rng = RngState(spec.seed)
    normals = normals[rng.permutation(normals.size)]
    n_train = normals.size // 2
    train_idx = normals[:n_train]
    test_norm_idx = normals[n_train:]
    n_cont = int(round(spec.contamination_ratio * n_train))
    if n_cont > 0 and anomalies.size > 0:
        n_cont = min(n_cont, anomalies.size)
        order = anomalies[rng.permutation(anomalies.size)]
        cont_idx, test_anom_idx = order[:n_cont], order[n_cont:]
    else:
        cont_idx, test_anom_idx = anomalies[:0], anomalies
    train = np.vstack([dataset.features[train_idx], dataset.features[cont_idx]])
    test_idx = np.concatenate([test_norm_idx, test_anom_idx])
    test = LabeledDataset(dataset.features[test_idx], dataset.labels[test_idx],
                          name=dataset.name, col_names=dataset.col_names)
    return train, test


# ---------------------------------------------------------------------------
# Model bundle persistence
# ---------------------------------------------------------------------------

def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file and rename so readers never see partial output."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(path: str, model: FlowModel, scaler: ScalerState | None = None,
               extra: dict | None = None) -> None:
    """Persist a model (+ optional scaler) as versioned JSON; reload is
    bit-exact because floats serialize in shortest round-trip form."""
    doc = {
        "format_version": FLOW_FORMAT_VERSION,
        "model": flow_to_dict(model),
        "scaler": None if scaler is None else scaler.to_dict(),
    }
    if extra:
        doc["extra"] = extra
    atomic_write_text(path, json.dumps(doc))


def load_model(path: str):
    """Inverse of :func:`save_model`; returns (model, scaler_or_None)."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptFile(f"{path}: missing format_version")
    if doc["format_version"] != FLOW_FORMAT_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: format_version {doc['format_version']}, "
            f"supported {FLOW_FORMAT_VERSION}")
    try:
        model = flow_from_dict(doc["model"])
        scaler = None if doc.get("scaler") is None else ScalerState.from_dict(doc["scaler"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    return model, scaler
