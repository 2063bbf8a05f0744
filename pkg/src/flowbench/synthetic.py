"""Synthetic dataset generators.

Covers three families used throughout the experiments:

* Gaussian normal/anomaly pairs (isotropic or full-covariance via a
  Cholesky factor), including the banded autoregressive covariance
  ``Sigma[i, j] = rho^|i-j|`` whose single knob controls overall feature
  correlation.
* Diagonal-covariance Gaussian mixtures fitted by EM, used to plant
  realistic "normal" populations.
* Four anomaly flavors derived from a seed dataset: local (mixture
  variances inflated by alpha), clustered (mixture means scaled by alpha),
  global (per-feature uniform over alpha-stretched ranges), and dependency
  (per-feature kernel-density resampling that keeps marginals but breaks
  inter-feature structure; the seed rows themselves serve as the normal
  class for this flavor).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset
from .errors import DegenerateComponent, DimMismatch, RhoOutOfRange
from .linalg import standard_normal_sample
from .rng import RngState, derive_seed

ANOMALY_TYPES = ("local", "global", "dependency", "clustered")

DEFAULT_ALPHA = {"local": 5.0, "global": 1.1, "clustered": 5.0, "dependency": None}

_VAR_FLOOR = 1e-6


@dataclass
class GaussianSpec:
    """N(mean, sigma^2 I) when ``sigma`` is set, else N(mean, L L^T)."""

    dim: int
    mean: np.ndarray
    sigma: float | None = None
    chol: np.ndarray | None = None

    def __post_init__(self):
        self.mean = np.broadcast_to(np.asarray(self.mean, dtype=np.float64),
                                    (self.dim,)).copy()
        if (self.sigma is None) == (self.chol is None):
            raise ValueError("provide exactly one of sigma or chol")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.chol is not None:
            self.chol = np.asarray(self.chol, dtype=np.float64)
            if self.chol.shape != (self.dim, self.dim):
                raise DimMismatch("Cholesky factor shape does not match dim")


def isotropic(dim: int, mean: float, sigma: float) -> GaussianSpec:
    return GaussianSpec(dim, np.full(dim, float(mean)), sigma=float(sigma))


def sample_gaussian(spec: GaussianSpec, n: int, rng: RngState) -> np.ndarray:
    z = standard_normal_sample(rng, n, spec.dim)
    if spec.sigma is not None:
        return spec.mean + spec.sigma * z
    return spec.mean + z @ spec.chol.T


def ar_covariance(d: int, rho: float) -> np.ndarray:
    """Banded correlation matrix Sigma[i, j] = rho^|i-j|."""
    if not 0.0 <= rho < 1.0:
        raise RhoOutOfRange(f"rho={rho} outside [0, 1)")
    if d < 1:
        raise ValueError("d must be >= 1")
    idx = np.arange(d)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(np.float64)


def gen_gaussian_pair(spec_p: GaussianSpec, spec_q: GaussianSpec,
                      n_train: int = 10_000, n_test_each: int = 10_000,
                      seed: int = 0):
    """Training matrix from P; test set of n_test_each P rows (label 0)
    plus n_test_each Q rows (label 1)."""
    if spec_p.dim != spec_q.dim:
        raise DimMismatch("P and Q dimensions differ")
    rng = RngState(seed)
    train = sample_gaussian(spec_p, n_train, rng)
    test_p = sample_gaussian(spec_p, n_test_each, rng)
    test_q = sample_gaussian(spec_q, n_test_each, rng)
    test = LabeledDataset(
        np.vstack([test_p, test_q]),
        np.concatenate([np.zeros(n_test_each, dtype=int), np.ones(n_test_each, dtype=int)]),
        name=f"gaussian_pair_d{spec_p.dim}",
    )
    return train, test


# ---------------------------------------------------------------------------
# Diagonal-covariance Gaussian mixture
# ---------------------------------------------------------------------------

@dataclass
class GmmDiag:
    weights: np.ndarray           # (k,)
    means: np.ndarray             # (k, d)
    variances: np.ndarray         # (k, d)
    log_likelihoods: list = field(default_factory=list)   # per EM iteration


def _gmm_log_resp(x, weights, means, variances):
    # (n, k) joint log densities, diagonal Gaussian components
    n, d = x.shape
    lp = -0.5 * (np.sum((x[:, None, :] - means[None]) ** 2 / variances[None], axis=2)
                 + np.sum(np.log(variances), axis=1)[None]
                 + d * np.log(2.0 * np.pi))
    lp = lp + np.log(weights)[None]
    mx = lp.max(axis=1, keepdims=True)
    lse = mx[:, 0] + np.log(np.sum(np.exp(lp - mx), axis=1))
    return lp - lse[:, None], lse


def gmm_log_density(gmm: GmmDiag, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    _, lse = _gmm_log_resp(x, gmm.weights, gmm.means, gmm.variances)
    return lse


def _kmeanspp_centers(x, k, rng):
    n = x.shape[0]
    centers = [x[int(rng.integers(1, n)[0])]]
    for _ in range(1, k):
        d2 = np.min([np.sum((x - c) ** 2, axis=1) for c in centers], axis=0)
        total = d2.sum()
        if total <= 0:
            centers.append(x[int(rng.integers(1, n)[0])])
            continue
        u = rng.uniform(1)[0] * total
        centers.append(x[int(np.searchsorted(np.cumsum(d2), u))])
    return np.vstack(centers)


def fit_gmm_diag(x: np.ndarray, k: int, seed: int = 0, max_iter: int = 200,
                 tol: float = 1e-6) -> GmmDiag:
    """EM with distance-weighted center seeding and a variance floor.

    The per-iteration mean log-likelihood is recorded and must never
    decrease; a component whose responsibility mass collapses triggers one
    reseed, then :class:`DegenerateComponent`.
    """
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    if n < k:
        raise DegenerateComponent(f"{n} rows cannot support {k} components")
    for attempt in range(2):
        rng = RngState(derive_seed(seed, attempt))
        means = _kmeanspp_centers(x, k, rng)
        variances = np.tile(np.maximum(x.var(axis=0), _VAR_FLOOR), (k, 1))
        weights = np.full(k, 1.0 / k)
        lls = []
        degenerate = False
        for _ in range(max_iter):
            log_resp, lse = _gmm_log_resp(x, weights, means, variances)
            ll = float(np.mean(lse))
            if lls and ll < lls[-1] - 1e-9:
                raise AssertionError("EM objective decreased")  # pragma: no cover
            converged = bool(lls) and abs(ll - lls[-1]) < tol
            lls.append(ll)
            if converged:
                break
            resp = np.exp(log_resp)
            nk = resp.sum(axis=0)
            if np.any(nk < 1e-10):
                degenerate = True
                break
            weights = nk / n
            means = (resp.T @ x) / nk[:, None]
            variances = np.maximum((resp.T @ (x * x)) / nk[:, None] - means ** 2,
                                   _VAR_FLOOR)
        if not degenerate:
            return GmmDiag(weights, means, variances, lls)
    raise DegenerateComponent("a component emptied twice during EM")


def gmm_sample(gmm: GmmDiag, n: int, rng: RngState) -> np.ndarray:
    comp = np.searchsorted(np.cumsum(gmm.weights), rng.uniform(n))
    comp = np.minimum(comp, gmm.weights.size - 1)
    z = standard_normal_sample(rng, n, gmm.means.shape[1])
    return gmm.means[comp] + np.sqrt(gmm.variances[comp]) * z


# ---------------------------------------------------------------------------
# Anomaly suite
# ---------------------------------------------------------------------------

@dataclass
class AnomalySuiteSpec:
    anomaly_type: str
    alpha: float | None = None
    n_normal: int | None = None       # default: len(seed rows)
    n_anomaly: int | None = None      # default: n_normal
    n_components: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.anomaly_type not in ANOMALY_TYPES:
            raise ValueError(f"anomaly_type must be one of {ANOMALY_TYPES}")
        if self.alpha is None:
            self.alpha = DEFAULT_ALPHA[self.anomaly_type]
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")


def _silverman_bandwidths(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    std = x.std(axis=0)
    q75, q25 = np.percentile(x, [75.0, 25.0], axis=0)
    iqr = q75 - q25
    spread = np.where(iqr > 0, np.minimum(std, iqr / 1.349), std)
    return 0.9 * spread * n ** (-0.2)


def gen_anomaly_suite(x_seed: np.ndarray, spec: AnomalySuiteSpec) -> LabeledDataset:
    """Planted normal/anomaly dataset of the requested flavor.

    Normals are mixture samples fitted to ``x_seed`` (the seed rows
    themselves for the dependency flavor); anomalies follow the flavor rules
    described in the module docstring.
    """
    x_seed = np.asarray(x_seed, dtype=np.float64)
    if x_seed.shape[0] < 10 * spec.n_components:
        raise DegenerateComponent("need at least 10 rows per mixture component")
    n_normal = spec.n_normal if spec.n_normal is not None else x_seed.shape[0]
    n_anomaly = spec.n_anomaly if spec.n_anomaly is not None else n_normal
    rng = RngState(spec.seed)
    gmm = fit_gmm_diag(x_seed, spec.n_components, seed=derive_seed(spec.seed, 1))

    if spec.anomaly_type == "dependency":
        if n_normal > x_seed.shape[0]:
            raise ValueError("dependency flavor uses seed rows as normals; "
                             f"n_normal={n_normal} exceeds {x_seed.shape[0]}")
        idx = rng.permutation(x_seed.shape[0])[:n_normal]
        normals = x_seed[idx]
    else:
        normals = gmm_sample(gmm, n_normal, rng)

    d = x_seed.shape[1]
    if spec.anomaly_type == "local":
        wide = GmmDiag(gmm.weights, gmm.means, gmm.variances * spec.alpha)
        anomalies = gmm_sample(wide, n_anomaly, rng)
    elif spec.anomaly_type == "clustered":
        shifted = GmmDiag(gmm.weights, gmm.means * spec.alpha, gmm.variances)
        anomalies = gmm_sample(shifted, n_anomaly, rng)
    elif spec.anomaly_type == "global":
        lo = spec.alpha * normals.min(axis=0)
        hi = spec.alpha * normals.max(axis=0)
        u = rng.uniform(n_anomaly * d).reshape(n_anomaly, d)
        anomalies = lo + u * (hi - lo)
    else:  # dependency: independent per-feature kernel-density resampling
        bw = _silverman_bandwidths(normals)
        cols = []
        for j in range(d):
            pick = rng.integers(n_anomaly, normals.shape[0])
            noise = rng.normal(n_anomaly)
            cols.append(normals[pick, j] + bw[j] * noise)
        anomalies = np.column_stack(cols)

    features = np.vstack([normals, anomalies])
    labels = np.concatenate([np.zeros(n_normal, dtype=int),
                             np.ones(n_anomaly, dtype=int)])
    return LabeledDataset(features, labels, name=f"synthetic_{spec.anomaly_type}")


def dimension_sweep_dataset(mean_p: float, sigma_p: float, mean_q: float,
                            sigma_q: float, dims, seed: int = 0,
                            n_train: int = 10_000, n_test_each: int = 10_000):
    """Yield (dim, dim_seed, train, test) pairs across ``dims`` (ascending),
    broadcasting scalar parameters to each dimension.  Per-dim seeds are
    derived from the master seed, so any subset regenerates identically."""
    dims = list(dims)
    if dims != sorted(dims):
        raise ValueError("dims must be ascending")
    for dim in dims:
        dim_seed = derive_seed(seed, dim)
        train, test = gen_gaussian_pair(isotropic(dim, mean_p, sigma_p),
                                        isotropic(dim, mean_q, sigma_q),
                                        n_train, n_test_each, seed=dim_seed)
        yield dim, dim_seed, train, test
