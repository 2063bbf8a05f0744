"""Closed-form Gaussian identities and their empirical verification.

Includes differential entropy and KL divergence for isotropic Gaussians, the
mean-vs-variance condition under which the expected likelihood gap between
the data distribution and an anomaly distribution turns negative, Monte
Carlo estimation of that gap, tail bounds for the squared norm of a standard
normal vector, and the dimension-sweep experiment that trains a flow per
dimension and records AUROC together with latent-statistic histograms.

All entropies and divergences are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import fit_scaler, apply_scaler
from .errors import DimMismatch, TOutOfRange
from .flows import FlowModel, TrainConfig, flow_forward, log_likelihood, train_flow
from .rng import RngState, derive_seed
from .scoring import auroc
from .synthetic import GaussianSpec, dimension_sweep_dataset, sample_gaussian


def gaussian_entropy(d: int, sigma: float) -> float:
    """Differential entropy of N(mu, sigma^2 I_d): (d/2) ln(2 pi e sigma^2)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return 0.5 * d * math.log(2.0 * math.pi * math.e * sigma * sigma)


def gaussian_kl_isotropic(mu_p, sigma_p: float, mu_q, sigma_q: float, d: int) -> float:
    """KL(Q || P) for isotropic Gaussians:
    (1/2) [ ||mu_p - mu_q||^2 / sigma_p^2 + 2 d ln(sigma_p / sigma_q)
            + d sigma_q^2 / sigma_p^2 - d ].
    """
    if sigma_p <= 0 or sigma_q <= 0:
        raise ValueError("sigmas must be positive")
    mu_p = np.asarray(mu_p, dtype=np.float64)
    mu_q = np.asarray(mu_q, dtype=np.float64)
    if mu_p.ndim == 0 and mu_q.ndim == 0:
        sq = d * float(mu_p - mu_q) ** 2
    else:
        diff = np.broadcast_to(mu_p, (d,)) - np.broadcast_to(mu_q, (d,))
        sq = float(diff @ diff)
    return 0.5 * (sq / sigma_p ** 2 + 2.0 * d * math.log(sigma_p / sigma_q)
                  + d * sigma_q ** 2 / sigma_p ** 2 - d)


def _per_coord_gap(mu_p: float, sigma_p: float, mu_q: float, sigma_q: float) -> float:
    # KL(q||p) + H(q) - H(p) for one coordinate
    delta = mu_p - mu_q
    kl1 = 0.5 * (delta * delta / sigma_p ** 2 + 2.0 * math.log(sigma_p / sigma_q)
                 + sigma_q ** 2 / sigma_p ** 2 - 1.0)
    return kl1 + math.log(sigma_q / sigma_p)


def analytic_gap_isotropic(mu_p: float, sigma_p: float, mu_q: float,
                           sigma_q: float, d: int) -> float:
    """Expected likelihood gap E_P[log p] - E_Q[log p] when the model equals
    P, i.e. KL(Q||P) + H(Q) - H(P).

    Computed as d times the per-coordinate gap, so the value is exactly
    linear in d for i.i.d. coordinates.
    """
    return d * _per_coord_gap(mu_p, sigma_p, mu_q, sigma_q)


def gap_condition(mu_p, sigma_p: float, mu_q, sigma_q: float, d: int):
    """Whether H(P) - H(Q) > KL(Q||P), via ||mu_p - mu_q||^2 < d (sigma_p^2
    - sigma_q^2); returns (holds, margin = rhs - lhs).

    The inequality route and the direct entropy/KL evaluation must agree;
    disagreement (possible only from floating-point ties) raises.
    """
    mu_p_a = np.asarray(mu_p, dtype=np.float64)
    mu_q_a = np.asarray(mu_q, dtype=np.float64)
    if mu_p_a.ndim == 0 and mu_q_a.ndim == 0:
        lhs = d * float(mu_p_a - mu_q_a) ** 2
    else:
        diff = np.broadcast_to(mu_p_a, (d,)) - np.broadcast_to(mu_q_a, (d,))
        lhs = float(diff @ diff)
    rhs = d * (sigma_p ** 2 - sigma_q ** 2)
    holds = lhs < rhs
    direct_margin = (gaussian_entropy(d, sigma_p) - gaussian_entropy(d, sigma_q)
                     - gaussian_kl_isotropic(mu_p, sigma_p, mu_q, sigma_q, d))
    # The two routes are algebraically identical up to the positive factor
    # 2 sigma_p^2; only rounding at an exact boundary can make their strict
    # comparisons differ, so disagreement is tolerated inside that noise.
    scale = max(1.0, abs(rhs) + abs(lhs))
    if holds != (direct_margin > 0.0) and abs(direct_margin) > 1e-9 * scale:
        raise ArithmeticError("inequality and entropy/KL routes disagree")
    return holds, rhs - lhs


# ---------------------------------------------------------------------------
# Monte Carlo likelihood gap
# ---------------------------------------------------------------------------

@dataclass
class GapReport:
    dim: int
    n_samples: int
    h_p: float
    h_q: float
    kl_qp: float
    emp_logp_p: float
    emp_logp_q: float
    gap: float                      # emp_logp_p - emp_logp_q
    gap_se: float                   # Monte Carlo standard error of the gap
    analytic_gap: float | None      # perfect-model prediction, if applicable


def _gaussian_log_density(spec: GaussianSpec, x: np.ndarray) -> np.ndarray:
    diff = x - spec.mean
    if spec.sigma is not None:
        quad = np.sum(diff * diff, axis=1) / spec.sigma ** 2
        logdet = 2.0 * spec.dim * math.log(spec.sigma)
    else:
        sol = np.linalg.solve(spec.chol, diff.T)
        quad = np.sum(sol * sol, axis=0)
        logdet = 2.0 * float(np.sum(np.log(np.diag(spec.chol))))
    return -0.5 * (spec.dim * math.log(2.0 * math.pi) + logdet + quad)


def empirical_likelihood_gap(density, spec_p: GaussianSpec, spec_q: GaussianSpec,
                             n: int, seed: int = 0) -> GapReport:
    """Monte Carlo E_P[log p_theta] - E_Q[log p_theta].

    ``density`` is either a trained :class:`FlowModel` or a
    :class:`GaussianSpec` standing in for a perfectly fitted model.  When it
    is a Gaussian equal in form to ``spec_p`` the analytic prediction
    KL(Q||P) + H(Q) - H(P) is attached for comparison.
    """
    if spec_p.dim != spec_q.dim:
        raise DimMismatch("P and Q dimensions differ")
    rng = RngState(seed)
    xp = sample_gaussian(spec_p, n, rng)
    xq = sample_gaussian(spec_q, n, rng)
    if isinstance(density, FlowModel):
        lp_p = log_likelihood(density, xp)
        lp_q = log_likelihood(density, xq)
    else:
        lp_p = _gaussian_log_density(density, xp)
        lp_q = _gaussian_log_density(density, xq)
    analytic = None
    if (spec_p.sigma is not None and spec_q.sigma is not None
            and not isinstance(density, FlowModel)):
        analytic = analytic_gap_isotropic(float(spec_p.mean[0]), spec_p.sigma,
                                          float(spec_q.mean[0]), spec_q.sigma,
                                          spec_p.dim)
    d = spec_p.dim
    return GapReport(
        dim=d,
        n_samples=n,
        h_p=gaussian_entropy(d, spec_p.sigma) if spec_p.sigma else float("nan"),
        h_q=gaussian_entropy(d, spec_q.sigma) if spec_q.sigma else float("nan"),
        kl_qp=_kl_between(spec_p, spec_q),
        emp_logp_p=float(np.mean(lp_p)),
        emp_logp_q=float(np.mean(lp_q)),
        gap=float(np.mean(lp_p) - np.mean(lp_q)),
        gap_se=float(np.sqrt(np.var(lp_p) / n + np.var(lp_q) / n)),
        analytic_gap=analytic,
    )


def _kl_between(spec_p: GaussianSpec, spec_q: GaussianSpec) -> float:
    if spec_p.sigma is None or spec_q.sigma is None:
        return float("nan")
    return gaussian_kl_isotropic(spec_p.mean, spec_p.sigma, spec_q.mean,
                                 spec_q.sigma, spec_p.dim)


# ---------------------------------------------------------------------------
# Norm concentration
# ---------------------------------------------------------------------------

@dataclass
class ConcentrationReport:
    d: int
    t: float
    empirical: float                # Pr(| ||Z||^2 - d | >= t) from n draws
    bound: float                    # 2 exp(-t^2 / 8d)
    n_samples: int
    within_bound: bool              # empirical <= bound + 3 binomial SE


def concentration_check(d: int, t: float, n: int, seed: int = 0) -> ConcentrationReport:
    """Empirical tail probability of the squared norm against its
    sub-exponential bound."""
    if not 0.0 < t < d:
        raise TOutOfRange(f"need 0 < t < d, got t={t}, d={d}")
    rng = RngState(seed)
    sq = np.sum(rng.normal(n * d).reshape(n, d) ** 2, axis=1)
    empirical = float(np.mean(np.abs(sq - d) >= t))
    bound = 2.0 * math.exp(-t * t / (8.0 * d))
    se = math.sqrt(max(empirical * (1.0 - empirical), 1.0 / n) / n)
    return ConcentrationReport(d, t, empirical, bound, n,
                               empirical <= bound + 3.0 * se)


def norm_variance_ratio(d_list, n: int, seed: int = 0):
    """Var(||Z||_2) / d per dimension, with a Monte Carlo standard error.

    Returns a list of dicts with keys d, ratio, se.
    """
    out = []
    for i, d in enumerate(d_list):
        if d < 1:
            raise ValueError("dimensions must be >= 1")
        rng = RngState(derive_seed(seed, i))
        norms = np.sqrt(np.sum(rng.normal(n * d).reshape(n, d) ** 2, axis=1))
        var = float(np.var(norms))
        centered = (norms - norms.mean()) ** 2
        se_var = float(np.sqrt(np.var(centered) / n))
        out.append({"d": int(d), "ratio": var / d, "se": se_var / d})
    return out


# ---------------------------------------------------------------------------
# Histograms and the dimension sweep
# ---------------------------------------------------------------------------

@dataclass
class HistogramSet:
    """Shared-bin histograms of per-sample statistics, normal vs anomaly.

    ``quantities`` maps a name ('nll', 'norm', 'logdet') to a dict with
    'edges', 'normal', 'anomaly' arrays.
    """

    quantities: dict = field(default_factory=dict)

    def add(self, name: str, values_normal, values_anomaly, bins: int = 60):
        lo = min(values_normal.min(), values_anomaly.min())
        hi = max(values_normal.max(), values_anomaly.max())
        if hi <= lo:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, bins + 1)
        cn, _ = np.histogram(values_normal, bins=edges)
        ca, _ = np.histogram(values_anomaly, bins=edges)
        self.quantities[name] = {"edges": edges, "normal": cn, "anomaly": ca}

    def wasserstein1(self, name: str) -> float:
        q = self.quantities[name]
        return histogram_wasserstein1(q["edges"], q["normal"], q["anomaly"])


def histogram_wasserstein1(edges, counts_a, counts_b) -> float:
    """W1 distance between two histograms read as point masses at bin centers."""
    centers = 0.5 * (np.asarray(edges[:-1]) + np.asarray(edges[1:]))
    wa = np.asarray(counts_a, dtype=np.float64)
    wb = np.asarray(counts_b, dtype=np.float64)
    cdf_a = np.cumsum(wa) / wa.sum()
    cdf_b = np.cumsum(wb) / wb.sum()
    return float(np.sum(np.abs(cdf_a - cdf_b)[:-1] * np.diff(centers)))


@dataclass
class DimSweepResult:
    dim: int
    auroc: float
    final_nll: float
    histograms: HistogramSet


def _sweep_one(kind, mean_p, sigma_p, mean_q, sigma_q, dim, dim_seed, config,
               scaler_kind, n_train, n_test_each):
    from .synthetic import isotropic, gen_gaussian_pair
    train, test = gen_gaussian_pair(isotropic(dim, mean_p, sigma_p),
                                    isotropic(dim, mean_q, sigma_q),
                                    n_train, n_test_each, seed=dim_seed)
    scaler = fit_scaler(train, scaler_kind)
    cfg = replace(config, seed=derive_seed(dim_seed, 1))
    model, history = train_flow(kind, apply_scaler(scaler, train), cfg)
    xs = apply_scaler(scaler, test.features)
    ll = log_likelihood(model, xs)
    score_auroc = auroc(-ll, test.labels)
    z, logdet = flow_forward(model, xs)
    norms = np.sqrt(np.sum(z * z, axis=1))
    mask = test.labels == 0
    hists = HistogramSet()
    hists.add("nll", -ll[mask], -ll[~mask])
    hists.add("norm", norms[mask], norms[~mask])
    if kind == "realnvp":
        hists.add("logdet", logdet[mask], logdet[~mask])
    return DimSweepResult(dim, float(score_auroc),
                          float(history.nll[-1]) if history.nll else float("nan"),
                          hists)


def dimension_sweep_auroc(kind: str, mean_p: float, sigma_p: float, mean_q: float,
                          sigma_q: float, dims, config: TrainConfig, seed: int = 0,
                          scaler_kind: str = "robust", n_train: int = 10_000,
                          n_test_each: int = 10_000, jobs: int = 1):
    """Train one flow per dimension on P and score the P/Q test split.

    Returns a list of :class:`DimSweepResult` ordered by dimension.  With
    ``jobs > 1`` dimensions run in separate processes; each owns a derived
    seed, so the result is identical to a serial run.
    """
    dims = list(dims)
    if dims != sorted(dims):
        raise ValueError("dims must be ascending")
    tasks = [(kind, mean_p, sigma_p, mean_q, sigma_q, dim, derive_seed(seed, dim),
              config, scaler_kind, n_train, n_test_each) for dim in dims]
    if jobs <= 1 or len(dims) == 1:
        return [_sweep_one(*t) for t in tasks]
    import concurrent.futures as cf
    with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_sweep_one, *t) for t in tasks]
        results = [f.result() for f in futures]
    return sorted(results, key=lambda r: r.dim)
