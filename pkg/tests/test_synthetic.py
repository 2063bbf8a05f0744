import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from flowbench.errors import DegenerateComponent, DimMismatch, RhoOutOfRange
from flowbench.flows import TrainConfig, build_flow, log_likelihood
from flowbench.linalg import cholesky
from flowbench.rng import RngState
from flowbench.scoring import auroc
from flowbench.synthetic import (AnomalySuiteSpec, GmmDiag, ar_covariance,
                                 dimension_sweep_dataset, fit_gmm_diag,
                                 gen_anomaly_suite, gen_gaussian_pair,
                                 gmm_log_density, gmm_sample, isotropic)


def test_ar_covariance_identity_at_zero():
    assert np.array_equal(ar_covariance(4, 0.0), np.eye(4))


def test_ar_covariance_hand_values():
    got = ar_covariance(3, 0.5)
    want = np.array([[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]])
    assert np.array_equal(got, want)


def test_ar_covariance_positive_definite():
    for rho in (0.0, 0.5, 0.9, 0.999):
        cholesky(ar_covariance(8, rho))  # raises if not PD


def test_ar_covariance_rejects_bad_rho():
    with pytest.raises(RhoOutOfRange):
        ar_covariance(3, 1.0)
    with pytest.raises(RhoOutOfRange):
        ar_covariance(3, -0.1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.floats(0.0, 0.999))
def test_ar_covariance_symmetric_unit_diagonal(d, rho):
    cov = ar_covariance(d, rho)
    assert np.array_equal(cov, cov.T)
    assert np.array_equal(np.diag(cov), np.ones(d))


def test_gaussian_pair_shapes_and_labels():
    train, test = gen_gaussian_pair(isotropic(3, 0.0, 1.0), isotropic(3, 1.0, 1.0),
                                    n_train=100, n_test_each=50, seed=1)
    assert train.shape == (100, 3)
    assert test.features.shape == (100, 3)
    assert test.n_normal == 50 and test.n_anomaly == 50


def test_gaussian_pair_dim_mismatch():
    with pytest.raises(DimMismatch):
        gen_gaussian_pair(isotropic(2, 0.0, 1.0), isotropic(3, 0.0, 1.0))


def test_identical_specs_are_indistinguishable():
    # under an untrained identity flow, equal P and Q give chance-level AUROC
    _, test = gen_gaussian_pair(isotropic(4, 1.0, 1.0), isotropic(4, 1.0, 1.0),
                                n_train=10, n_test_each=4000, seed=2)
    model = build_flow("nice", 4, TrainConfig(n_coupling=2, hidden_dim=4, seed=0),
                       RngState(0))
    scores = -log_likelihood(model, test.features)
    assert abs(auroc(scores, test.labels) - 0.5) < 0.03


def test_gmm_single_component_closed_form():
    x = RngState(1).normal(1200).reshape(400, 3) * 1.5 + 2.0
    g = fit_gmm_diag(x, 1, seed=0)
    assert np.allclose(g.means[0], x.mean(axis=0), atol=1e-8)
    assert np.allclose(g.variances[0], x.var(axis=0), atol=1e-6)
    assert g.weights[0] == 1.0


def test_gmm_recovers_separated_blobs():
    rng = RngState(2)
    a = rng.normal(1200).reshape(600, 2) + np.array([5.0, 5.0])
    b = rng.normal(1200).reshape(600, 2) + np.array([-5.0, -5.0])
    g = fit_gmm_diag(np.vstack([a, b]), 2, seed=1)
    centers = g.means[np.argsort(g.means[:, 0])]
    assert np.abs(centers[0] - (-5.0)).max() < 0.1
    assert np.abs(centers[1] - 5.0).max() < 0.1


def test_gmm_loglik_monotone():
    x = RngState(3).normal(1000).reshape(500, 2)
    g = fit_gmm_diag(x, 3, seed=4)
    lls = g.log_likelihoods
    assert all(b >= a - 1e-9 for a, b in zip(lls, lls[1:]))


def test_gmm_too_few_rows():
    with pytest.raises(DegenerateComponent):
        fit_gmm_diag(np.zeros((2, 2)), 5, seed=0)


def test_gmm_sample_moments():
    g = GmmDiag(weights=np.array([0.3, 0.7]),
                means=np.array([[0.0, 0.0], [10.0, 10.0]]),
                variances=np.array([[1.0, 1.0], [4.0, 4.0]]))
    x = gmm_sample(g, 50_000, RngState(5))
    assert abs(x[:, 0].mean() - 7.0) < 0.1
    assert gmm_log_density(g, np.array([[10.0, 10.0]]))[0] > \
        gmm_log_density(g, np.array([[50.0, 50.0]]))[0]


def _seed_rows(n=1500, seed=6):
    rng = RngState(seed)
    means = np.array([[0.0, 0.0, 0.0], [6.0, -4.0, 2.0], [-5.0, 5.0, -3.0]])
    comp = rng.integers(n, 3)
    return means[comp] + rng.normal(n * 3).reshape(n, 3)


def test_suite_counts_exact():
    for kind in ("local", "global", "dependency", "clustered"):
        ds = gen_anomaly_suite(_seed_rows(),
                               AnomalySuiteSpec(kind, seed=7, n_normal=400,
                                                n_anomaly=150, n_components=3))
        assert ds.n_normal == 400 and ds.n_anomaly == 150


def test_global_anomalies_respect_bounds():
    ds = gen_anomaly_suite(_seed_rows(),
                           AnomalySuiteSpec("global", seed=8, n_components=3))
    normals = ds.features[ds.labels == 0]
    anomalies = ds.features[ds.labels == 1]
    lo = 1.1 * normals.min(axis=0)
    hi = 1.1 * normals.max(axis=0)
    assert np.all(anomalies >= lo - 1e-12) and np.all(anomalies <= hi + 1e-12)


def test_local_anomalies_variance_ratio():
    # single-blob seed: anomaly variance should be about alpha times normal
    x = RngState(9).normal(6000).reshape(2000, 3) * 2.0
    ds = gen_anomaly_suite(x, AnomalySuiteSpec("local", seed=10, n_components=1,
                                               n_normal=4000, n_anomaly=4000))
    v_norm = ds.features[ds.labels == 0].var(axis=0)
    v_anom = ds.features[ds.labels == 1].var(axis=0)
    ratio = v_anom / v_norm
    assert np.all(ratio > 4.0) and np.all(ratio < 6.0)


def test_clustered_anomalies_mean_shift():
    x = RngState(11).normal(4000).reshape(2000, 2) + np.array([4.0, -6.0])
    ds = gen_anomaly_suite(x, AnomalySuiteSpec("clustered", seed=12,
                                               n_components=1))
    m_norm = ds.features[ds.labels == 0].mean(axis=0)
    m_anom = ds.features[ds.labels == 1].mean(axis=0)
    assert np.allclose(m_anom, 5.0 * m_norm, rtol=0.1)


def test_dependency_anomalies_keep_marginals_break_correlation():
    rng = RngState(13)
    base = rng.normal(4000)
    x = np.column_stack([base, base + 0.1 * rng.normal(4000),
                         -base + 0.1 * rng.normal(4000)])
    ds = gen_anomaly_suite(x, AnomalySuiteSpec("dependency", seed=14,
                                               n_components=1,
                                               n_normal=4000, n_anomaly=4000))
    normals = ds.features[ds.labels == 0]
    anomalies = ds.features[ds.labels == 1]
    for j in range(3):
        ks = stats.ks_2samp(normals[:, j], anomalies[:, j]).statistic
        assert ks < 0.05, f"feature {j}: KS {ks}"
        assert abs(anomalies[:, j].mean() - normals[:, j].mean()) \
            < 0.05 * max(1.0, abs(normals[:, j].mean()) + normals[:, j].std())
        assert abs(anomalies[:, j].var() / normals[:, j].var() - 1.0) < 0.05
    corr_n = np.corrcoef(normals.T)
    corr_a = np.corrcoef(anomalies.T)
    off = ~np.eye(3, dtype=bool)
    assert np.abs(corr_a[off]).mean() < 0.1 < np.abs(corr_n[off]).mean()


def test_dimension_sweep_dataset():
    pairs = list(dimension_sweep_dataset(5.0, 1.0, 2.5, 1.0, [10], seed=3,
                                         n_train=50, n_test_each=20))
    assert len(pairs) == 1
    dim, dim_seed, train, test = pairs[0]
    assert dim == 10 and train.shape == (50, 10)
    # per-dim seeds are stable and distinct
    again = list(dimension_sweep_dataset(5.0, 1.0, 2.5, 1.0, [10, 20], seed=3,
                                         n_train=10, n_test_each=5))
    assert again[0][1] == dim_seed
    assert again[0][1] != again[1][1]
    with pytest.raises(ValueError):
        list(dimension_sweep_dataset(5.0, 1.0, 2.5, 1.0, [20, 10], seed=3))
