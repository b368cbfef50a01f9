"""Randomized search over feature subsets with optional pairwise interactions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..evaluation import SplitPlan, evaluate_matrix
from ..schema import FeatureMatrix
from .base import ClassifierSpec


@dataclass(frozen=True)
class SubsetResult:
    columns: tuple[str, ...]
    mean_auc: float


def random_subset_search(
    base: FeatureMatrix,
    interactions: FeatureMatrix | None,
    spec: ClassifierSpec,
    y,
    plan: SplitPlan,
    trials: int,
    seed: int = 0,
    base_bounds: tuple[int, int] = (20, 40),
    max_interactions: int = 10,
) -> list[SubsetResult]:
    """Score random column subsets by mean cross-validated AUC.

    Each trial draws a base subset size uniformly from ``base_bounds``
    (inclusive) and up to ``max_interactions`` interaction columns, trains
    ``spec`` on every fold of ``plan`` and records the mean AUC. Results are
    sorted by decreasing AUC, ties kept in trial order.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    lo, hi = base_bounds
    if not 1 <= lo <= hi:
        raise ValueError("base_bounds must satisfy 1 <= low <= high")
    if hi > base.shape[1]:
        raise ValueError(f"subset bound {hi} exceeds the {base.shape[1]} available columns")
    pool = base
    n_inter = 0
    if interactions is not None and interactions.shape[1] > 0:
        if len(interactions) != len(base):
            raise ValueError("base and interaction matrices have different row counts")
        pool = base.hstack(interactions)
        n_inter = interactions.shape[1]
    n_base = base.shape[1]
    rng = np.random.default_rng(seed)
    results = []
    for _ in range(trials):
        k = int(rng.integers(lo, hi + 1))
        chosen = np.sort(rng.choice(n_base, k, replace=False))
        m = int(rng.integers(0, min(max_interactions, n_inter) + 1)) if n_inter else 0
        if m:
            chosen = np.concatenate([chosen, n_base + np.sort(rng.choice(n_inter, m, replace=False))])
        cols = tuple(pool.columns[i] for i in chosen)
        report = evaluate_matrix(spec, pool.select(cols), y, plan)
        results.append(SubsetResult(cols, report.mean))
    order = sorted(range(trials), key=lambda i: -results[i].mean_auc)
    return [results[i] for i in order]
