import json
import os

import numpy as np
import pytest

from flowbench.cli import main
from flowbench.data import load_csv
from flowbench.rng import RngState

FIXDIR = os.path.join(os.path.dirname(__file__), "..", "src", "flowbench", "fixtures")


@pytest.fixture()
def toy_csv(tmp_path):
    rng = RngState(0)
    normal = rng.normal(400).reshape(200, 2)
    anomaly = rng.normal(40).reshape(20, 2) + 6.0
    rows = ["x,y,label"]
    for r in normal:
        rows.append(f"{float(r[0])!r},{float(r[1])!r},0")
    for r in anomaly:
        rows.append(f"{float(r[0])!r},{float(r[1])!r},1")
    path = tmp_path / "toy.csv"
    path.write_text("\n".join(rows) + "\n")
    return str(path)


FAST = ["--epochs", "8", "--hidden", "16", "--coupling", "2", "--batch", "64"]


def test_train_score_eval_round_trip(tmp_path, toy_csv):
    model_path = str(tmp_path / "model.json")
    rc = main(["train", "--data", toy_csv, "--kind", "nice", "--seed", "1",
               "--out", model_path] + FAST)
    assert rc == 0 and os.path.exists(model_path)

    scores_path = str(tmp_path / "scores.csv")
    rc = main(["score", "--data", toy_csv, "--model", model_path,
               "--seed", "1", "--out", scores_path])
    assert rc == 0
    lines = [l for l in open(scores_path) if not l.startswith("#")]
    assert lines[0].strip() == "row_index,score,label"
    assert len(lines) == 221

    eval_path = str(tmp_path / "eval.json")
    rc = main(["eval", "--data", toy_csv, "--model", model_path,
               "--seed", "1", "--out", eval_path])
    assert rc == 0
    doc = json.load(open(eval_path))
    assert doc["auroc"] > 0.9  # far-shifted anomalies are easy
    assert doc["n_anomaly"] == 20
    assert "provenance" in doc

    # typicality scoring uses the stored training mean
    rc = main(["score", "--data", toy_csv, "--model", model_path, "--test",
               "typicality", "--seed", "1", "--out", str(tmp_path / "t.csv")])
    assert rc == 0


def test_eval_reruns_are_byte_identical(tmp_path, toy_csv):
    model_path = str(tmp_path / "model.json")
    main(["train", "--data", toy_csv, "--seed", "3", "--out", model_path] + FAST)
    p1, p2 = str(tmp_path / "e1.json"), str(tmp_path / "e2.json")
    main(["eval", "--data", toy_csv, "--model", model_path, "--seed", "3",
          "--out", p1])
    main(["eval", "--data", toy_csv, "--model", model_path, "--seed", "3",
          "--out", p2])
    doc1, doc2 = json.load(open(p1)), json.load(open(p2))
    doc1["provenance"]["config"].pop("out"); doc2["provenance"]["config"].pop("out")
    assert doc1 == doc2


def test_benchmark_subcommand(tmp_path, toy_csv):
    out = str(tmp_path / "bench")
    rc = main(["benchmark", "--data", toy_csv, "--trials", "2", "--seed", "7",
               "--no-plot", "--out", out] + FAST)
    assert rc == 0
    lines = [l for l in open(os.path.join(out, "benchmark.csv"))
             if not l.startswith("#")]
    assert lines[0].strip() == "dataset,trials,auroc_mean,auroc_std,auprc_mean,auprc_std"
    assert len(lines) == 2
    cells = lines[1].strip().split(",")
    assert cells[0] == "toy" and cells[1] == "2"
    assert 0.0 <= float(cells[2]) <= 1.0


def test_id_subcommand(tmp_path, toy_csv):
    out = str(tmp_path / "id.csv")
    rc = main(["id", "--data", toy_csv, "--method", "both", "--k", "5",
               "--subsample", "1.0,0.8", "--scaler", "none,standard",
               "--seed", "2", "--no-plot", "--out", out])
    assert rc == 0
    lines = [l for l in open(out) if not l.startswith("#")]
    assert lines[0].strip() == "dataset,method,param,subsample,scaler,estimate,d_ratio"
    assert len(lines) == 1 + 2 * 4  # two methods x (2 ratios x 2 scalers)


def test_synth_pair_and_ar(tmp_path):
    out = str(tmp_path / "synth")
    rc = main(["synth", "--mode", "pair", "--dims", "3", "--n-train", "50",
               "--n-test-each", "20", "--seed", "5", "--no-plot", "--out", out])
    assert rc == 0
    train = load_csv(os.path.join(out, "pair_train.csv"))
    test = load_csv(os.path.join(out, "pair_test.csv"))
    assert train.features.shape == (50, 3)
    assert test.n_anomaly == 20
    assert os.path.exists(os.path.join(out, "provenance.json"))

    rc = main(["synth", "--mode", "ar", "--dims", "4", "--rho", "0.6", "--n", "30",
               "--seed", "5", "--no-plot", "--out", out])
    assert rc == 0
    ar = load_csv(os.path.join(out, "ar_d4_rho0.6.csv"))
    assert ar.features.shape == (30, 4)


def test_synth_suite(tmp_path, toy_csv):
    out = str(tmp_path / "suite")
    rc = main(["synth", "--mode", "suite", "--data", toy_csv, "--type", "global",
               "--components", "2", "--n-normal", "100", "--n-anomaly", "40",
               "--seed", "6", "--no-plot", "--out", out])
    assert rc == 0
    ds = load_csv(os.path.join(out, "suite_global.csv"))
    assert ds.n_normal == 100 and ds.n_anomaly == 40


def test_verify_fast_paths(tmp_path):
    out = str(tmp_path / "verify")
    rc = main(["verify", "--mc-n", "20000", "--seed", "3", "--no-plot",
               "--out", out])
    assert rc == 0
    for name in ("gap_reports.json", "concentration.csv", "norm_variance.csv"):
        assert os.path.exists(os.path.join(out, name)), name
    doc = json.load(open(os.path.join(out, "gap_reports.json")))
    assert len(doc["reports"]) == 3
    conc = [l for l in open(os.path.join(out, "concentration.csv"))
            if not l.startswith("#")]
    assert len(conc) == 1 + 20
    assert all(l.strip().endswith(",1") for l in conc[1:])  # within_bound column


def test_counterintuitive_fixture(tmp_path):
    out = str(tmp_path / "verdicts.json")
    rc = main(["counterintuitive",
               "--matrix", os.path.join(FIXDIR, "adbench_tabular_auroc.csv"),
               "--meta", os.path.join(FIXDIR, "adbench_model_meta.csv"),
               "--sweep", "--seed", "0", "--out", out])
    assert rc == 0
    doc = json.load(open(out))
    assert doc["overall"]["n_counterintuitive"] == 0
    assert doc["overall"]["max_flip_frequency"] == 0.0
    assert len(doc["verdicts"]) == 47 * 6 * 4


def test_counterintuitive_pools(tmp_path):
    for pool, k in (("shallow", 6), ("deep", 7)):
        out = str(tmp_path / f"v_{pool}.json")
        rc = main(["counterintuitive",
                   "--matrix", os.path.join(FIXDIR, "adbench_tabular_auroc.csv"),
                   "--meta", os.path.join(FIXDIR, "adbench_model_meta.csv"),
                   "--sweep", "--pool", pool, "--seed", "0", "--out", out])
        assert rc == 0
        doc = json.load(open(out))
        assert doc["overall"]["n_counterintuitive"] == 0
        import math
        n_beta = len(range(math.ceil(k / 2) + 1, k + 1))
        assert len(doc["verdicts"]) == 47 * n_beta * 4


def test_exit_codes(tmp_path, toy_csv):
    # domain error: missing file -> 1
    rc = main(["train", "--data", str(tmp_path / "nope.csv"),
               "--out", str(tmp_path / "m.json")] + FAST)
    assert rc == 1
    # usage error: unknown subcommand -> SystemExit(2)
    with pytest.raises(SystemExit) as info:
        main(["frobnicate", "--out", "x"])
    assert info.value.code == 2
    # usage error: counterintuitive without thresholds
    with pytest.raises(SystemExit) as info:
        main(["counterintuitive", "--matrix", "m", "--meta", "m", "--out", "x"])
    assert info.value.code == 2


def test_env_seed_override(tmp_path, toy_csv, monkeypatch):
    model_path = str(tmp_path / "m.json")
    monkeypatch.setenv("FLOWBENCH_SEED", "1234")
    main(["train", "--data", toy_csv, "--out", model_path] + FAST)
    doc = json.load(open(model_path))
    assert doc["extra"]["provenance"]["config"]["seed"] == 1234
