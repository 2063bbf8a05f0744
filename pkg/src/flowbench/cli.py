"""Command-line entry point.

Subcommands: train, score, eval, benchmark, id, synth, verify,
counterintuitive.  Every output file carries a provenance block (the config
echo, master seed, and artifact version; never a timestamp, so reruns with
the same config are byte-identical) and is written atomically.  Report paths
additionally render PNG figures next to the delimited output unless
``--no-plot`` is given.

Exit status: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .counterintuitive import DEFAULT_GAMMA_GRID, default_beta_grid, pool_filter, sweep, detect
from .data import (LabeledDataset, SplitSpec, apply_scaler, atomic_write_text,
                   fit_scaler, load_csv, load_model, save_csv, save_model, split_zong)
from .errors import FlowbenchError
from .flows import TrainConfig, log_likelihood, train_flow
from .intrinsic_dim import robustness_suite
from .linalg import cholesky, mvn_sample
from .rng import RngState, derive_seed
from .scoring import (ScoreVector, auprc, auroc, rank_table, read_auroc_matrix,
                      slt_score, write_auroc_matrix, write_scores_csv)
from .synthetic import (AnomalySuiteSpec, ar_covariance, gen_anomaly_suite,
                        gen_gaussian_pair, isotropic)
from .theory import (concentration_check, dimension_sweep_auroc,
                     empirical_likelihood_gap, gap_condition, norm_variance_ratio)

PAPER_SWEEP_DIMS = [10, 50, 100, 500, 1000, 5000, 10000, 15000]
DESK_SWEEP_DIMS = [10, 50, 100, 500, 2000]


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("FLOWBENCH_SEED", "0"))


def _provenance(args, command: str) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func",) and v is not None}
    cfg["seed"] = _resolve_seed(args)
    return {"artifact": "flowbench", "version": __version__, "command": command,
            "config": cfg}


def _write_json(path: str, doc: dict) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_csv(path: str, header: str, lines: list, prov: dict) -> None:
    body = ["# provenance: " + json.dumps(prov, sort_keys=True), header] + lines
    atomic_write_text(path, "\n".join(body) + "\n")


def _parse_floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def _train_config(args, seed: int) -> TrainConfig:
    cfg = TrainConfig(seed=seed)
    overrides = {
        "epochs": args.epochs, "batch_size": args.batch, "learning_rate": args.lr,
        "weight_decay": args.wd, "n_coupling": args.coupling,
        "hidden_dim": args.hidden, "n_hidden_layers": args.layers,
        "activation": args.activation,
    }
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def _add_train_flags(p):
    p.add_argument("--kind", choices=("nice", "realnvp"), default="nice")
    p.add_argument("--scaler", default="robust",
                   choices=("robust", "standard", "minmax", "none"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--wd", type=float)
    p.add_argument("--coupling", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--activation", choices=("relu", "leaky_relu", "tanh", "identity"))


# ---------------------------------------------------------------------------
# train / score / eval
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    seed = _resolve_seed(args)
    ds = load_csv(args.data, args.label_col)
    x = ds.features[ds.labels == 0]
    scaler = fit_scaler(x, args.scaler)
    cfg = _train_config(args, seed)
    model, history = train_flow(args.kind, apply_scaler(scaler, x), cfg)
    train_nll_mean = float(np.mean(-log_likelihood(model, apply_scaler(scaler, x))))
    save_model(args.out, model, scaler, extra={
        "provenance": _provenance(args, "train"),
        "train_nll_mean": train_nll_mean,
        "history": {"nll": history.nll, "lr": history.lr},
    })
    print(f"wrote model bundle to {args.out} "
          f"(final train NLL {history.nll[-1]:.4f})" if history.nll else
          f"wrote model bundle to {args.out}")
    return 0


def _scores_for(args, model, scaler, extra, x) -> ScoreVector:
    sv = slt_score(model, scaler, x)
    if args.test == "typicality":
        h_hat = extra.get("train_nll_mean")
        if h_hat is None:
            raise FlowbenchError("model bundle lacks train_nll_mean; retrain first")
        return ScoreVector(np.abs(sv.scores - h_hat), "typicality")
    return sv


def _load_bundle(path: str):
    import json as _json
    model, scaler = load_model(path)
    with open(path, encoding="utf-8") as fh:
        extra = _json.load(fh).get("extra", {})
    return model, scaler, extra


def cmd_score(args) -> int:
    model, scaler, extra = _load_bundle(args.model)
    ds = load_csv(args.data, args.label_col)
    sv = _scores_for(args, model, scaler, extra, ds.features)
    write_scores_csv(args.out, sv, ds.labels,
                     header_comment=" provenance: "
                     + json.dumps(_provenance(args, "score"), sort_keys=True))
    print(f"wrote {len(sv.scores)} scores to {args.out}")
    return 0


def cmd_eval(args) -> int:
    model, scaler, extra = _load_bundle(args.model)
    ds = load_csv(args.data, args.label_col)
    sv = _scores_for(args, model, scaler, extra, ds.features)
    doc = {
        "provenance": _provenance(args, "eval"),
        "dataset": ds.name,
        "scorer": sv.scorer,
        "auroc": auroc(sv.scores, ds.labels),
        "auprc": auprc(sv.scores, ds.labels),
        "n_normal": ds.n_normal,
        "n_anomaly": ds.n_anomaly,
    }
    _write_json(args.out, doc)
    print(f"auroc {doc['auroc']:.4f}  auprc {doc['auprc']:.4f}  -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def _benchmark_cell(path, label_col, kind, scaler_kind, cfg_dict, test_kind,
                    contamination, trial_seed):
    """One (dataset, trial): split, scale, train, score, evaluate."""
    ds = load_csv(path, label_col)
    train, test = split_zong(ds, SplitSpec(seed=trial_seed,
                                           contamination_ratio=contamination))
    scaler = fit_scaler(train, scaler_kind)
    cfg = TrainConfig(**{**cfg_dict, "seed": trial_seed})
    model, _ = train_flow(kind, apply_scaler(scaler, train), cfg)
    scores = -log_likelihood(model, apply_scaler(scaler, test.features))
    if test_kind == "typicality":
        h_hat = float(np.mean(-log_likelihood(model, apply_scaler(scaler, train))))
        scores = np.abs(scores - h_hat)
    return ds.name, trial_seed, float(auroc(scores, test.labels)), \
        float(auprc(scores, test.labels))


def cmd_benchmark(args) -> int:
    seed = _resolve_seed(args)
    os.makedirs(args.out, exist_ok=True)
    prov = _provenance(args, "benchmark")
    cfg = _train_config(args, seed)
    cfg_dict = {k: v for k, v in asdict(cfg).items() if k != "seed"}
    cells = [(path, args.label_col, args.kind, args.scaler, cfg_dict, args.test,
              args.contamination, seed + trial)
             for path in args.data for trial in range(args.trials)]
    if args.jobs > 1:
        import concurrent.futures as cf
        with cf.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_benchmark_cell_star, cells))
    else:
        results = [_benchmark_cell(*c) for c in cells]
    results.sort(key=lambda r: (r[0], r[1]))
    by_dataset = {}
    for name, trial_seed, a, p in results:
        by_dataset.setdefault(name, []).append((a, p))
    rows, lines = [], []
    for name in sorted(by_dataset):
        arr = np.asarray(by_dataset[name])
        rows.append({"dataset": name, "auroc_mean": arr[:, 0].mean(),
                     "auroc_std": arr[:, 0].std(), "auprc_mean": arr[:, 1].mean(),
                     "auprc_std": arr[:, 1].std(), "trials": arr.shape[0]})
        r = rows[-1]
        lines.append(f"{name},{r['trials']},{r['auroc_mean']:.6f},{r['auroc_std']:.6f},"
                     f"{r['auprc_mean']:.6f},{r['auprc_std']:.6f}")
    summary_path = os.path.join(args.out, "benchmark.csv")
    _write_csv(summary_path, "dataset,trials,auroc_mean,auroc_std,auprc_mean,auprc_std",
               lines, prov)
    print(f"wrote {summary_path}")
    if not args.no_plot:
        from .report import render_benchmark
        print("wrote " + render_benchmark(rows, os.path.join(args.out, "benchmark.png")))
    if args.matrix:
        _rank_and_verdicts(args, prov, rows)
    return 0


def _benchmark_cell_star(cell):
    return _benchmark_cell(*cell)


def _rank_and_verdicts(args, prov, rows) -> None:
    """Join our per-dataset results into the external matrix, then rank and
    run the relative-failure sweep on the combined cohort."""
    datasets, models, matrix = read_auroc_matrix(args.matrix)
    ours = {r["dataset"]: r["auroc_mean"] for r in rows}
    name = "flowbench"
    keep = [i for i, d in enumerate(datasets) if d in ours]
    if not keep:
        print("no dataset overlap with the external matrix; skipping ranks")
        return
    datasets = [datasets[i] for i in keep]
    matrix = np.column_stack([matrix[keep], [ours[d] for d in datasets]])
    models = models + [name]
    out = os.path.join(args.out, "rank_table.csv")
    table = rank_table(matrix, models, datasets, fail_threshold=args.fail_threshold)
    lines = [f"{m},{table.avg_rank[j]:.4f},{table.top2_ratio[j]:.4f},"
             f"{table.fail_ratio[j]:.4f}" for j, m in enumerate(models)]
    _write_csv(out, "model,avg_rank,top2_ratio,fail_ratio", lines, prov)
    print(f"wrote {out}")


# ---------------------------------------------------------------------------
# id
# ---------------------------------------------------------------------------

def cmd_id(args) -> int:
    seed = _resolve_seed(args)
    prov = _provenance(args, "id")
    ds = load_csv(args.data, args.label_col)
    methods = ("twonn", "mle") if args.method == "both" else (args.method,)
    ratios = _parse_floats(args.subsample)
    scalers = [s for s in args.scaler.split(",") if s]
    lines = []
    records_for_plot = []
    for method in methods:
        recs = robustness_suite(ds.features, ratios, scalers, seed=seed,
                                method=method, k=args.k, discard_top=args.discard)
        for r in recs:
            param = args.k if method == "mle" else args.discard
            lines.append(f"{ds.name},{method},{param},{r['subsample']:g},"
                         f"{r['scaler']},{r['estimate'].value:.6f},{r['d_ratio']:.6f}")
        records_for_plot = recs
    _write_csv(args.out, "dataset,method,param,subsample,scaler,estimate,d_ratio",
               lines, prov)
    print(f"wrote {args.out}")
    if not args.no_plot and records_for_plot:
        from .report import render_id_table
        png = os.path.splitext(args.out)[0] + ".png"
        print("wrote " + render_id_table(records_for_plot, png))
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    seed = _resolve_seed(args)
    prov = _provenance(args, "synth")
    os.makedirs(args.out, exist_ok=True)
    sidecar = os.path.join(args.out, "provenance.json")
    comment = " provenance: " + json.dumps(prov, sort_keys=True)
    if args.mode == "pair":
        train, test = gen_gaussian_pair(
            isotropic(args.dims, args.mu_p, args.sigma_p),
            isotropic(args.dims, args.mu_q, args.sigma_q),
            args.n_train, args.n_test_each, seed=seed)
        train_ds = LabeledDataset(train, np.zeros(train.shape[0], dtype=int),
                                  name="pair_train")
        save_csv(os.path.join(args.out, "pair_train.csv"), train_ds, comment)
        save_csv(os.path.join(args.out, "pair_test.csv"), test, comment)
        written = ["pair_train.csv", "pair_test.csv"]
    elif args.mode == "suite":
        seed_ds = load_csv(args.data, args.label_col)
        spec = AnomalySuiteSpec(args.type, alpha=args.alpha,
                                n_normal=args.n_normal, n_anomaly=args.n_anomaly,
                                n_components=args.components, seed=seed)
        out_ds = gen_anomaly_suite(seed_ds.features[seed_ds.labels == 0], spec)
        fname = f"suite_{args.type}.csv"
        save_csv(os.path.join(args.out, fname), out_ds, comment)
        written = [fname]
    else:  # ar
        cov = ar_covariance(args.dims, args.rho)
        x = mvn_sample(RngState(seed), np.zeros(args.dims), cholesky(cov), args.n)
        ds = LabeledDataset(x, np.zeros(x.shape[0], dtype=int),
                            name=f"ar_rho{args.rho:g}")
        fname = f"ar_d{args.dims}_rho{args.rho:g}.csv"
        save_csv(os.path.join(args.out, fname), ds, comment)
        written = [fname]
    _write_json(sidecar, {"provenance": prov, "files": written})
    print(f"wrote {', '.join(written)} and provenance.json in {args.out}")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    seed = _resolve_seed(args)
    prov = _provenance(args, "verify")
    os.makedirs(args.out, exist_ok=True)

    # Closed-form vs Monte Carlo likelihood gaps on a few spec pairs.
    gap_specs = [
        (args.dims_gap, 0.0, 2.0, 0.5, 1.0),
        (args.dims_gap, 5.0, 1.0, 2.5, 1.0),
        (args.dims_gap, 0.0, 1.0, 0.0, 1.0),
    ]
    gap_docs = []
    for i, (d, mp, sp, mq, sq) in enumerate(gap_specs):
        p, q = isotropic(d, mp, sp), isotropic(d, mq, sq)
        rep = empirical_likelihood_gap(p, p, q, args.mc_n, seed=derive_seed(seed, i))
        holds, margin = gap_condition(mp, sp, mq, sq, d)
        gap_docs.append({**asdict_dataclass(rep), "condition_holds": holds,
                         "condition_margin": margin,
                         "spec": {"mu_p": mp, "sigma_p": sp, "mu_q": mq, "sigma_q": sq}})
    _write_json(os.path.join(args.out, "gap_reports.json"),
                {"provenance": prov, "reports": gap_docs})

    # Squared-norm concentration grid.
    reports = []
    for i, d in enumerate((10, 50, 100, 500, 1000)):
        for frac in (0.25, 0.5, 0.75, 0.9):
            reports.append(concentration_check(d, frac * d, args.mc_n,
                                               seed=derive_seed(seed, 100 + i)))
    lines = [f"{r.d},{r.t:g},{r.empirical:.6g},{r.bound:.6g},{r.n_samples},"
             f"{int(r.within_bound)}" for r in reports]
    _write_csv(os.path.join(args.out, "concentration.csv"),
               "d,t,empirical,bound,n,within_bound", lines, prov)

    # Norm variance over dimension.
    nv = norm_variance_ratio((10, 100, 1000), args.mc_n, seed=derive_seed(seed, 7))
    _write_csv(os.path.join(args.out, "norm_variance.csv"), "d,var_over_d,se",
               [f"{r['d']},{r['ratio']:.6g},{r['se']:.6g}" for r in nv], prov)

    if not args.no_plot:
        from .report import render_concentration
        render_concentration(reports, os.path.join(args.out, "concentration.png"))

    print(f"wrote gap_reports.json, concentration.csv, norm_variance.csv in {args.out}")

    if args.dims:
        dims = PAPER_SWEEP_DIMS if args.dims == "paper" else _parse_ints(args.dims)
        cfg = _train_config(args, seed)
        results = dimension_sweep_auroc(args.kind, args.mu_p, args.sigma_p,
                                        args.mu_q, args.sigma_q, dims, cfg,
                                        seed=seed, scaler_kind=args.scaler,
                                        n_train=args.n_train,
                                        n_test_each=args.n_test_each, jobs=args.jobs)
        _write_csv(os.path.join(args.out, "sweep.csv"), "d,auroc,final_nll,w1_norm",
                   [f"{r.dim},{r.auroc:.6f},{r.final_nll:.6f},"
                    f"{r.histograms.wasserstein1('norm'):.6f}" for r in results], prov)
        for r in results:
            hlines = []
            for qname, q in r.histograms.quantities.items():
                for b in range(len(q["normal"])):
                    hlines.append(f"{q['edges'][b]:.6g},{q['edges'][b + 1]:.6g},"
                                  f"{q['normal'][b]},{q['anomaly'][b]},{qname}")
            _write_csv(os.path.join(args.out, f"hist_d{r.dim}.csv"),
                       "bin_left,bin_right,count_normal,count_anomaly,quantity",
                       hlines, prov)
        if not args.no_plot:
            from .report import render_dim_sweep, render_histogram_set
            render_dim_sweep(results, os.path.join(args.out, "sweep.png"))
            for r in results:
                render_histogram_set(r.histograms,
                                     os.path.join(args.out, f"hist_d{r.dim}.png"),
                                     title=f"d={r.dim}")
        print(f"wrote sweep.csv and per-dimension histograms in {args.out}")
    return 0


def asdict_dataclass(obj) -> dict:
    from dataclasses import asdict as _as
    return _as(obj)


# ---------------------------------------------------------------------------
# counterintuitive
# ---------------------------------------------------------------------------

def _read_meta(path: str):
    import csv as _csv
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in _csv.reader(line for line in fh if not line.startswith("#")) if r]
    header = rows[0]
    if header[:2] != ["name", "pool"]:
        raise FlowbenchError(f"{path}: expected header name,pool")
    return {r[0]: (r[1] if len(r) > 1 else "") for r in rows[1:]}


def cmd_counterintuitive(args) -> int:
    prov = _provenance(args, "counterintuitive")
    datasets, models, matrix = read_auroc_matrix(args.matrix)
    meta = _read_meta(args.meta)
    subjects = [m for m in models if meta.get(m) == "subject"]
    if len(subjects) != 1:
        raise FlowbenchError("metadata must tag exactly one model as 'subject'")
    subject = subjects[0]
    s_idx = models.index(subject)
    triples_all = [(m, None, meta.get(m, "")) for m in models if m != subject]

    table = rank_table(matrix, models, datasets, fail_threshold=args.fail_threshold)
    rank_summary = {
        "models": models,
        "avg_rank": [round(float(v), 4) for v in table.avg_rank],
        "top2_ratio": [round(float(v), 4) for v in table.top2_ratio],
        "fail_ratio": [round(float(v), 4) for v in table.fail_ratio],
        "fail_threshold": args.fail_threshold,
        "subject": subject,
    }

    beta_grid = _parse_floats(args.beta_grid) if args.beta_grid else None
    gamma_grid = _parse_floats(args.gamma_grid) if args.gamma_grid else None
    verdict_rows, flip_freqs = [], {}
    n_true = 0
    for di, dname in enumerate(datasets):
        comp = pool_filter([(m, matrix[di, models.index(m)], meta.get(m, ""))
                            for m in models if m != subject], args.pool)
        auroc0 = float(matrix[di, s_idx])
        if args.sweep:
            res = sweep(auroc0, comp, beta_grid, gamma_grid)
            flip_freqs[dname] = res.flip_frequency
            for v in res.verdicts:
                n_true += int(v.counterintuitive)
                verdict_rows.append(_verdict_row(dname, v))
        else:
            v = detect(auroc0, comp, args.beta, args.gamma)
            n_true += int(v.counterintuitive)
            verdict_rows.append(_verdict_row(dname, v))
    doc = {
        "provenance": prov,
        "rank_summary": rank_summary,
        "pool": args.pool,
        "verdicts": verdict_rows,
        "flip_frequency": flip_freqs,
        "overall": {
            "n_counterintuitive": n_true,
            "max_flip_frequency": max(flip_freqs.values()) if flip_freqs else 0.0,
        },
    }
    _write_json(args.out, doc)
    print(f"{n_true} counterintuitive cells; "
          f"max flip frequency {doc['overall']['max_flip_frequency']:.4f}; "
          f"wrote {args.out}")
    return 0


def _verdict_row(dataset: str, v) -> dict:
    return {
        "dataset": dataset,
        "beta": v.beta,
        "gamma": v.gamma,
        "auroc0": v.auroc0,
        "fraction_outperforming": v.fraction,
        "min_gap": v.min_gap,
        "condition1": v.condition1,
        "condition2": v.condition2,
        "counterintuitive": v.counterintuitive,
    }


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowbench", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (default: FLOWBENCH_SEED env var or 0)")
        p.add_argument("--out", required=True)
        p.add_argument("--label-col", default="label")
        p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("train", help="fit a flow on the normal rows of a dataset")
    common(p)
    p.add_argument("--data", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score a dataset with a saved model bundle")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--test", choices=("slt", "typicality"), default="slt")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="score a labeled dataset and report metrics")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--test", choices=("slt", "typicality"), default="slt")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchmark", help="multi-trial split/train/score protocol")
    common(p)
    p.add_argument("--data", required=True, nargs="+")
    _add_train_flags(p)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--test", choices=("slt", "typicality"), default="slt")
    p.add_argument("--contamination", type=float, default=0.0)
    p.add_argument("--matrix", help="external AUROC matrix CSV for rank analysis")
    p.add_argument("--meta", help="model metadata CSV (name,pool)")
    p.add_argument("--fail-threshold", type=int, default=9)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("id", help="intrinsic-dimension estimates and robustness grid")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=("twonn", "mle", "both"), default="both")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--discard", type=float, default=0.1)
    p.add_argument("--subsample", default="1.0")
    p.add_argument("--scaler", default="none",
                   help="comma list of scalers from robust,standard,minmax,none")
    p.set_defaults(func=cmd_id)

    p = sub.add_parser("synth", help="generate synthetic datasets")
    common(p)
    p.add_argument("--mode", choices=("pair", "suite", "ar"), required=True)
    p.add_argument("--data", help="seed dataset CSV (suite mode)")
    p.add_argument("--dims", type=int, default=10)
    p.add_argument("--mu-p", type=float, default=5.0)
    p.add_argument("--sigma-p", type=float, default=1.0)
    p.add_argument("--mu-q", type=float, default=2.5)
    p.add_argument("--sigma-q", type=float, default=1.0)
    p.add_argument("--n-train", type=int, default=10_000)
    p.add_argument("--n-test-each", type=int, default=10_000)
    p.add_argument("--type", choices=("local", "global", "dependency", "clustered"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--components", type=int, default=5)
    p.add_argument("--n-normal", type=int)
    p.add_argument("--n-anomaly", type=int)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--n", type=int, default=5000)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="closed-form checks and dimension sweeps")
    common(p)
    _add_train_flags(p)
    p.add_argument("--dims", help="comma list of sweep dimensions, or 'paper'")
    p.add_argument("--dims-gap", type=int, default=10,
                   help="dimension for the likelihood-gap reports")
    p.add_argument("--mc-n", type=int, default=100_000)
    p.add_argument("--mu-p", type=float, default=5.0)
    p.add_argument("--sigma-p", type=float, default=1.0)
    p.add_argument("--mu-q", type=float, default=2.5)
    p.add_argument("--sigma-q", type=float, default=1.0)
    p.add_argument("--n-train", type=int, default=10_000)
    p.add_argument("--n-test-each", type=int, default=10_000)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("counterintuitive",
                       help="relative-failure verdicts over a score matrix")
    common(p)
    p.add_argument("--matrix", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--pool", choices=("all", "shallow", "deep"), default="all")
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta-grid")
    p.add_argument("--gamma-grid")
    p.add_argument("--fail-threshold", type=int, default=9)
    p.set_defaults(func=cmd_counterintuitive)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "counterintuitive" and not args.sweep and (
            args.beta is None or args.gamma is None):
        parser.error("counterintuitive needs --sweep or both --beta and --gamma")
    try:
        return args.func(args)
    except (FlowbenchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
