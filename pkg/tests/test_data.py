import json
import os

import numpy as np
import pytest

from flowbench.data import (LabeledDataset, ScalerState, SplitSpec, apply_scaler,
                            fit_scaler, load_csv, load_model, save_csv, save_model,
                            split_zong)
from flowbench.errors import (CorruptFile, EmptyDataset, MissingLabelColumn,
                              ParseError, SchemaVersionMismatch, TooFewNormals)
from flowbench.flows import TrainConfig, build_flow, log_likelihood, param_vector, \
    set_param_vector
from flowbench.rng import RngState


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_load_csv_basic(tmp_path):
    path = _write(tmp_path, "a,b,label\n1,2,0\n3,4,1\n5,6,0\n")
    ds = load_csv(path)
    assert ds.features.shape == (3, 2)
    assert list(ds.labels) == [0, 1, 0]
    assert ds.col_names == ["a", "b"]
    assert ds.name == "data"


def test_load_csv_missing_label_column(tmp_path):
    path = _write(tmp_path, "a,b\n1,2\n")
    with pytest.raises(MissingLabelColumn):
        load_csv(path)


def test_load_csv_parse_error_row_and_col(tmp_path):
    path = _write(tmp_path, "a,b,label\n1,2,0\n1,abc,0\n")
    with pytest.raises(ParseError) as info:
        load_csv(path)
    assert info.value.row == 2 and info.value.col == "b"


def test_load_csv_empty(tmp_path):
    with pytest.raises(EmptyDataset):
        load_csv(_write(tmp_path, "a,b,label\n"))


def test_load_csv_bad_label_value(tmp_path):
    with pytest.raises(ParseError):
        load_csv(_write(tmp_path, "a,label\n1,2\n"))


def test_save_load_round_trip(tmp_path):
    ds = LabeledDataset(RngState(1).normal(12).reshape(4, 3),
                        np.array([0, 1, 0, 0]), name="t", col_names=["x", "y", "z"])
    path = str(tmp_path / "rt.csv")
    save_csv(path, ds, header_comment="note")
    back = load_csv(path)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)


def test_robust_scaler_quartiles():
    x = np.array([[1.0], [2.0], [3.0], [4.0], [5.0]])
    s = fit_scaler(x, "robust")
    assert s.center[0] == 3.0 and s.scale[0] == 2.0


def test_constant_column_scale_one():
    x = np.full((10, 2), 7.0)
    s = fit_scaler(x, "robust")
    assert np.all(s.scale == 1.0)
    assert np.all(apply_scaler(s, x) == 0.0)


def test_scaler_kinds():
    x = RngState(3).normal(300).reshape(100, 3) * 2.0 + 5.0
    s = fit_scaler(x, "standard")
    assert np.allclose(s.center, x.mean(axis=0))
    assert np.allclose(s.scale, x.std(axis=0))
    s = fit_scaler(x, "minmax")
    scaled = apply_scaler(s, x)
    assert scaled.min() == 0.0 and scaled.max() == 1.0
    s = fit_scaler(x, "none")
    assert np.array_equal(apply_scaler(s, x), x)


def test_scaler_row_order_invariant():
    x = RngState(4).normal(50).reshape(25, 2)
    perm = RngState(5).permutation(25)
    a = fit_scaler(x, "robust")
    b = fit_scaler(x[perm], "robust")
    assert np.array_equal(a.center, b.center) and np.array_equal(a.scale, b.scale)


def test_scaler_inverse_affine():
    x = RngState(6).normal(40).reshape(20, 2)
    s = fit_scaler(x, "robust")
    back = apply_scaler(s, x) * s.scale + s.center
    assert np.abs(back - x).max() < 1e-12


def _toy_dataset(n_normal, n_anomaly, seed=0):
    feats = RngState(seed).normal((n_normal + n_anomaly) * 2).reshape(-1, 2)
    labels = np.concatenate([np.zeros(n_normal, dtype=int),
                             np.ones(n_anomaly, dtype=int)])
    return LabeledDataset(feats, labels, name="toy")


def test_split_basic_counts():
    ds = _toy_dataset(100, 10)
    train, test = split_zong(ds, SplitSpec(seed=0))
    assert train.shape == (50, 2)
    assert test.features.shape == (60, 2)
    assert test.n_normal == 50 and test.n_anomaly == 10


def test_split_contamination_counts():
    ds = _toy_dataset(200, 20)
    train, test = split_zong(ds, SplitSpec(seed=0, contamination_ratio=0.05))
    assert train.shape[0] == 100 + 5       # round(0.05 * 100) anomalies injected
    assert test.n_anomaly == 15
    assert test.n_normal == 100


def test_split_is_partition():
    ds = _toy_dataset(41, 7)
    train, test = split_zong(ds, SplitSpec(seed=3, contamination_ratio=0.1))
    combined = np.vstack([train, test.features])
    assert combined.shape[0] == 48
    key = np.lexsort(combined.T)
    orig = np.lexsort(ds.features.T)
    assert np.array_equal(combined[key], ds.features[orig])


def test_split_deterministic():
    ds = _toy_dataset(30, 5)
    t1, s1 = split_zong(ds, SplitSpec(seed=9))
    t2, s2 = split_zong(ds, SplitSpec(seed=9))
    assert np.array_equal(t1, t2)
    assert np.array_equal(s1.features, s2.features)


def test_split_too_few_normals():
    ds = LabeledDataset(np.zeros((3, 1)), np.array([0, 1, 1]))
    with pytest.raises(TooFewNormals):
        split_zong(ds, SplitSpec(seed=0))


def test_model_bundle_round_trip(tmp_path):
    cfg = TrainConfig(n_coupling=2, hidden_dim=4, seed=2)
    model = build_flow("realnvp", 3, cfg, RngState(2))
    vec = param_vector(model)
    set_param_vector(model, RngState(5).normal(vec.size) * 0.3)
    scaler = fit_scaler(RngState(6).normal(30).reshape(10, 3), "robust")
    path = str(tmp_path / "model.json")
    save_model(path, model, scaler, extra={"train_nll_mean": 1.25})
    back, back_scaler = load_model(path)
    x = RngState(7).normal(60).reshape(20, 3)
    assert np.array_equal(log_likelihood(model, x), log_likelihood(back, x))
    assert np.array_equal(back_scaler.center, scaler.center)


def test_truncated_bundle_is_corrupt(tmp_path):
    cfg = TrainConfig(n_coupling=2, hidden_dim=4, seed=2)
    model = build_flow("nice", 2, cfg, RngState(2))
    path = str(tmp_path / "model.json")
    save_model(path, model, None)
    text = open(path).read()
    open(path, "w").write(text[:len(text) // 2])
    with pytest.raises(CorruptFile):
        load_model(path)


def test_future_version_rejected(tmp_path):
    cfg = TrainConfig(n_coupling=2, hidden_dim=4, seed=2)
    model = build_flow("nice", 2, cfg, RngState(2))
    path = str(tmp_path / "model.json")
    save_model(path, model, None)
    doc = json.load(open(path))
    doc["format_version"] = 99
    open(path, "w").write(json.dumps(doc))
    with pytest.raises(SchemaVersionMismatch):
        load_model(path)


def test_spec_validation():
    with pytest.raises(ValueError):
        SplitSpec(seed=0, contamination_ratio=1.0)
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((2, 2)), np.array([1, 1]))  # no normal row
