"""Render CSV/JSON report data to PNG figures.

Every CLI report path writes delimited data first and then, unless plotting
is disabled, calls one of these helpers to drop a figure next to it.  The
figures are deliberately plain: one axes per file, default style, no
rcParams fiddling.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path: str) -> str:
    tmp = f"{path}.part{os.path.splitext(path)[1] or '.png'}"
    fig.savefig(tmp, dpi=130, bbox_inches="tight")
    plt.close(fig)
    os.replace(tmp, path)
    return path


def render_histogram_set(hist_set, path: str, title: str = "") -> str:
    """One panel per quantity; normal vs anomaly bars on shared bins."""
    names = list(hist_set.quantities)
    fig, axes = plt.subplots(1, len(names), figsize=(5.0 * len(names), 3.6))
    if len(names) == 1:
        axes = [axes]
    for ax, name in zip(np.atleast_1d(axes), names):
        q = hist_set.quantities[name]
        centers = 0.5 * (q["edges"][:-1] + q["edges"][1:])
        width = q["edges"][1] - q["edges"][0]
        ax.bar(centers, q["normal"], width=width, alpha=0.6, label="normal")
        ax.bar(centers, q["anomaly"], width=width, alpha=0.6, label="anomaly")
        ax.set_xlabel(name)
        ax.set_ylabel("count")
        ax.legend()
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def render_dim_sweep(results, path: str, title: str = "AUROC vs dimension") -> str:
    """AUROC curve over dimensions from DimSweepResult records."""
    dims = [r.dim for r in results]
    aurocs = [r.auroc for r in results]
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    ax.plot(dims, aurocs, "o-")
    ax.set_xscale("log")
    ax.set_xlabel("dimension")
    ax.set_ylabel("AUROC")
    ax.set_ylim(0.0, 1.05)
    ax.axhline(0.5, color="gray", linestyle="--", alpha=0.6)
    ax.set_title(title)
    return _save(fig, path)


def render_concentration(reports, path: str) -> str:
    """Empirical tail probabilities against the analytic bound."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    xs = np.arange(len(reports))
    ax.semilogy(xs, [max(r.empirical, 1e-12) for r in reports], "o", label="empirical")
    ax.semilogy(xs, [r.bound for r in reports], "s--", label="bound")
    ax.set_xticks(xs)
    ax.set_xticklabels([f"d={r.d}\nt={r.t:g}" for r in reports], fontsize=7)
    ax.set_ylabel("tail probability")
    ax.legend()
    return _save(fig, path)


def render_rank_table(table, path: str) -> str:
    """Bar chart of average ranks (lower is better)."""
    order = np.argsort(table.avg_rank)
    fig, ax = plt.subplots(figsize=(7.0, 3.8))
    ax.bar(range(len(order)), table.avg_rank[order])
    ax.set_xticks(range(len(order)))
    ax.set_xticklabels([table.models[i] for i in order], rotation=45, ha="right",
                       fontsize=8)
    ax.set_ylabel("average rank")
    return _save(fig, path)


def render_benchmark(rows, path: str) -> str:
    """Mean AUROC with std error bars per dataset.

    ``rows`` are dicts with keys dataset, auroc_mean, auroc_std.
    """
    names = [r["dataset"] for r in rows]
    means = [r["auroc_mean"] for r in rows]
    stds = [r["auroc_std"] for r in rows]
    fig, ax = plt.subplots(figsize=(max(5.0, 0.45 * len(rows) + 2), 3.8))
    ax.errorbar(range(len(rows)), means, yerr=stds, fmt="o", capsize=3)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("AUROC")
    ax.set_ylim(0.0, 1.05)
    return _save(fig, path)


def render_loss_history(history, path: str) -> str:
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    ax.plot(history.nll)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean train NLL")
    ax2 = ax.twinx()
    ax2.plot(history.lr, color="tab:orange", alpha=0.6)
    ax2.set_ylabel("learning rate", color="tab:orange")
    return _save(fig, path)


def render_id_table(records, path: str) -> str:
    """Estimates across the (subsample, scaler) robustness grid."""
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    labels = [f"{r['subsample']:g}/{r['scaler']}" for r in records]
    ax.plot(range(len(records)), [r["estimate"].value for r in records], "o-")
    ax.set_xticks(range(len(records)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("estimated intrinsic dimension")
    return _save(fig, path)
