"""Blending score vectors: standardized averaging and rank averaging."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .schema import check_scores


def _weights(weights, k: int) -> np.ndarray:
    w = np.ones(k) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise ValueError(f"expected {k} weights, got {w.size}")
    if (w < 0).any() or w.sum() <= 0:
        raise ValueError("weights must be non-negative and not all zero")
    return w / w.sum()


def _weighted_sum(w: np.ndarray, rows: np.ndarray) -> np.ndarray:
    # row-by-row accumulation rounds equal columns identically, unlike BLAS
    return (w[:, None] * rows).sum(axis=0)


def _stack(score_vectors: Sequence) -> np.ndarray:
    if not score_vectors:
        raise ValueError("nothing to blend")
    vecs = [check_scores(s) for s in score_vectors]
    if len({len(v) for v in vecs}) != 1:
        raise ValueError("score vectors differ in length")
    return np.vstack(vecs)


def standardize(scores) -> np.ndarray:
    """Scale scores to unit (population) standard deviation."""
    scores = check_scores(scores)
    sd = scores.std()
    if sd == 0:
        raise ValueError("cannot standardize a constant score vector")
    return scores / sd


def blend_standardized(score_vectors: Sequence, weights=None) -> np.ndarray:
    """Weighted mean of the standardized score vectors."""
    stacked = _stack(score_vectors)
    w = _weights(weights, len(stacked))
    return _weighted_sum(w, np.vstack([standardize(s) for s in stacked]))


def rank_average(score_vectors: Sequence, weights=None) -> np.ndarray:
    """Weighted mean of sorted-order positions (ties share their average rank)."""
    stacked = _stack(score_vectors)
    w = _weights(weights, len(stacked))
    ranks = np.vstack([rankdata(s, method="average") for s in stacked])
    return _weighted_sum(w, ranks)
