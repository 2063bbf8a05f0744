"""Relative-failure test for a likelihood-only detector.

A detector's failure on a dataset counts as genuinely surprising only when
two conditions hold simultaneously against a competitor cohort:

1. strictly more than a beta fraction of competitors beat its AUROC, and
2. every competitor that beats it does so by strictly more than gamma.

Both inequalities are strict, so AUROC ties never count as outperforming and
an empty outperform set can never satisfy condition 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyPool, NoCompetitors

DEFAULT_GAMMA_GRID = (0.3, 0.4, 0.5, 0.6)

POOLS = ("all", "shallow", "deep")


@dataclass
class Verdict:
    auroc0: float
    competitors: list                 # (name, auroc) pairs
    beta: float
    gamma: float
    outperform: list                  # names with auroc > auroc0
    fraction: float                   # |outperform| / k
    condition1: bool                  # fraction > beta
    min_gap: float | None             # min outperformer gap; None if set empty
    condition2: bool                  # min_gap > gamma (False when set empty)
    counterintuitive: bool


@dataclass
class SweepResult:
    verdicts: list                    # row-major over (beta, gamma) cells
    beta_grid: list
    gamma_grid: list
    flip_frequency: float             # fraction of cells off the modal verdict

    def verdict_at(self, beta: float, gamma: float) -> Verdict:
        i = self.beta_grid.index(beta)
        j = self.gamma_grid.index(gamma)
        return self.verdicts[i * len(self.gamma_grid) + j]


def detect(auroc0: float, competitors, beta: float, gamma: float) -> Verdict:
    """Evaluate both conditions for one (beta, gamma) threshold pair.

    ``competitors`` is a sequence of (name, auroc) pairs.
    """
    competitors = [(str(n), float(a)) for n, a in competitors]
    k = len(competitors)
    if k == 0:
        raise NoCompetitors("need at least one competitor")
    outperform = [(n, a) for n, a in competitors if a > auroc0]
    fraction = len(outperform) / k
    cond1 = fraction > beta
    if outperform:
        min_gap = min(a - auroc0 for _, a in outperform)
        cond2 = min_gap > gamma
    else:
        min_gap, cond2 = None, False
    return Verdict(
        auroc0=float(auroc0),
        competitors=competitors,
        beta=float(beta),
        gamma=float(gamma),
        outperform=[n for n, _ in outperform],
        fraction=fraction,
        condition1=cond1,
        min_gap=min_gap,
        condition2=cond2,
        counterintuitive=cond1 and cond2,
    )


def default_beta_grid(k: int) -> list:
    """Threshold fractions {j/k : ceil(k/2) < j <= k}; for a 13-model cohort
    this is 8/13 ... 13/13."""
    return [j / k for j in range(math.ceil(k / 2) + 1, k + 1)]


def sweep(auroc0: float, competitors, beta_grid=None, gamma_grid=None) -> SweepResult:
    """Verdict per grid cell plus the fraction of cells that disagree with
    the modal verdict (the flip frequency)."""
    competitors = list(competitors)
    if not competitors:
        raise NoCompetitors("need at least one competitor")
    betas = list(beta_grid) if beta_grid is not None else default_beta_grid(len(competitors))
    gammas = list(gamma_grid) if gamma_grid is not None else list(DEFAULT_GAMMA_GRID)
    if not betas or not gammas:
        raise ValueError("grids must be non-empty")
    verdicts = [detect(auroc0, competitors, b, g) for b in betas for g in gammas]
    flags = np.array([v.counterintuitive for v in verdicts])
    modal = bool(flags.sum() > flags.size / 2)
    return SweepResult(
        verdicts=verdicts,
        beta_grid=betas,
        gamma_grid=gammas,
        flip_frequency=float(np.mean(flags != modal)),
    )


def pool_filter(competitors, pool: str):
    """Restrict (name, auroc, pool_tag) triples to one competitor pool.

    Returns (name, auroc) pairs.  Tags other than 'shallow'/'deep' (e.g. the
    subject model itself) are excluded from every pool.
    """
    if pool not in POOLS:
        raise ValueError(f"pool must be one of {POOLS}")
    triples = list(competitors)
    for t in triples:
        if len(t) != 3 or not str(t[2]).strip():
            raise EmptyPool(f"competitor {t[0]!r} lacks a pool tag")
    wanted = ("shallow", "deep") if pool == "all" else (pool,)
    kept = [(n, a) for n, a, tag in triples if tag in wanted]
    if not kept:
        raise EmptyPool(f"no competitors in pool {pool!r}")
    return kept
