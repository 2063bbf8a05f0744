"""Intrinsic-dimension estimators from nearest-neighbor distances.

Two estimators:

* ``twonn`` - per-point ratio of second to first neighbor distance; the
  closed-form maximum-likelihood solution after trimming the largest-ratio
  decile (points with duplicate first neighbors are dropped first).
* ``mle`` - the k-neighbor distance-likelihood estimate, either averaged per
  point or aggregated by inverting the mean inverse (the default).

Neighbor search is exact brute force, computed in row blocks to bound
memory.  Both estimators depend on the data only through inter-point
distances, so they are invariant to rotations and translations, and the
ratio-based one also to global rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import fit_scaler, apply_scaler
from .errors import DegenerateData, KTooLarge
from .rng import RngState, derive_seed

_BLOCK_ELEMS = 8_000_000  # cap on block_rows * n * d during neighbor search


@dataclass
class IDEstimate:
    method: str
    value: float
    params: dict = field(default_factory=dict)
    n_points: int = 0
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.value) or self.value <= 0:
            raise DegenerateData(f"estimate {self.value} is not a positive real")


@dataclass
class DRatio:
    id_estimate: IDEstimate
    ambient_dim: int
    ratio: float


def knn_distances(x: np.ndarray, k: int) -> np.ndarray:
    """Sorted Euclidean distances to each point's k nearest neighbors,
    self excluded; duplicates yield zero first-neighbor distances."""
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    if k >= n:
        raise KTooLarge(f"k={k} needs at least k+1={k + 1} points, have {n}")
    block = max(1, min(n, _BLOCK_ELEMS // max(1, n * d)))
    out = np.empty((n, k))
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = x[start:stop, None, :] - x[None, :, :]
        d2 = np.sum(diff * diff, axis=-1)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        part = np.partition(d2, k - 1, axis=1)[:, :k]
        part.sort(axis=1)
        out[start:stop] = part
    return np.sqrt(np.maximum(out, 0.0))


def twonn_estimate(x: np.ndarray, discard_top: float = 0.1, seed: int = 0) -> IDEstimate:
    """Two-nearest-neighbor ratio estimate with top-decile trimming.

    log(r2/r1) is exponential with rate equal to the dimension, so after
    discarding the largest ratios the maximum-likelihood solution is the
    censored-sample form: kept count over (sum of kept logs plus the number
    discarded times the largest kept log).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 20:
        raise DegenerateData("need at least 20 points")
    if not 0.0 <= discard_top < 1.0:
        raise ValueError("discard_top must lie in [0, 1)")
    dist = knn_distances(x, 2)
    r1, r2 = dist[:, 0], dist[:, 1]
    valid = r1 > 0.0
    mu = r2[valid] / r1[valid]
    mu = mu[mu != 1.0]
    if mu.size < 10:
        raise DegenerateData(f"only {mu.size} usable neighbor ratios")
    mu.sort()
    n_keep = int(np.floor(mu.size * (1.0 - discard_top)))
    if n_keep < 10:
        raise DegenerateData("too few ratios after trimming")
    logs = np.log(mu[:n_keep])
    denom = float(np.sum(logs)) + (mu.size - n_keep) * float(logs[-1])
    value = n_keep / denom
    return IDEstimate("twonn", value, {"discard_top": discard_top},
                      n_points=x.shape[0], seed=seed)


def mle_estimate(x: np.ndarray, k: int, aggregation: str = "mackay",
                 seed: int = 0) -> IDEstimate:
    """Distance-likelihood estimate with neighborhood size ``k``.

    ``aggregation='mackay'`` inverts the mean of inverse per-point
    estimates; ``'mean'`` averages the per-point estimates directly.
    """
    if aggregation not in ("mackay", "mean"):
        raise ValueError("aggregation must be 'mackay' or 'mean'")
    if k < 2:
        raise KTooLarge("k must be at least 2")
    x = np.asarray(x, dtype=np.float64)
    dist = knn_distances(x, k)  # raises KTooLarge when k >= rows
    good = dist[:, 0] > 0.0
    dist = dist[good]
    if dist.shape[0] < 10:
        raise DegenerateData("too many duplicate points for a stable estimate")
    with np.errstate(divide="ignore"):
        log_ratios = np.log(dist[:, k - 1:k] / dist[:, :k - 1])
    inv = np.mean(log_ratios, axis=1)  # = 1 / per-point estimate
    inv = inv[inv > 0.0]
    if inv.size < 10:
        raise DegenerateData("degenerate neighbor distances")
    if aggregation == "mackay":
        value = 1.0 / float(np.mean(inv))
    else:
        value = float(np.mean(1.0 / inv))
    return IDEstimate("mle", value, {"k": k, "aggregation": aggregation},
                      n_points=x.shape[0], seed=seed)


def d_ratio(estimate: IDEstimate, ambient: int) -> DRatio:
    """Estimated intrinsic dimension over the ambient feature count."""
    if ambient < 1:
        raise ValueError("ambient dimension must be >= 1")
    return DRatio(estimate, ambient, estimate.value / ambient)


def robustness_suite(x: np.ndarray, subsample_ratios=(1.0,), scaler_kinds=("none",),
                     seed: int = 0, method: str = "twonn", k: int = 20,
                     discard_top: float = 0.1):
    """One estimate per (subsample ratio, scaler) cell.

    Subsampling is without replacement from a per-cell seeded stream, so the
    grid is reproducible cell by cell.  Returns a list of dict records.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    records = []
    for ci, ratio in enumerate(subsample_ratios):
        if not 0.0 < ratio <= 1.0:
            raise ValueError("subsample ratios must lie in (0, 1]")
        for cj, kind in enumerate(scaler_kinds):
            cell_seed = derive_seed(seed, ci * len(tuple(scaler_kinds)) + cj)
            m = int(round(ratio * n))
            if ratio < 1.0:
                idx = RngState(cell_seed).permutation(n)[:m]
                sub = x[idx]
            else:
                sub = x
            scaled = apply_scaler(fit_scaler(sub, kind), sub)
            if method == "twonn":
                est = twonn_estimate(scaled, discard_top=discard_top, seed=cell_seed)
            else:
                est = mle_estimate(scaled, k=k, seed=cell_seed)
            records.append({
                "subsample": ratio,
                "scaler": kind,
                "estimate": est,
                "d_ratio": d_ratio(est, x.shape[1]).ratio,
            })
    return records
