"""Gradient-boosted trees on the logistic loss with Newton leaf weights.

Splits are found by exact greedy search over every distinct value of every
sampled column. Each round fits one depth-limited tree to the first and
second derivatives of the loss at the current margin.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit, logit

from .tree import Tree, TreeBuilder

DEFAULTS = {
    "n_estimators": 100,
    "max_depth": 3,
    "learning_rate": 0.1,
    "subsample": 1.0,
    "colsample_bytree": 1.0,
    "base_score": 0.5,
    "reg_lambda": 1.0,
    "min_child_weight": 1.0,
    "gamma": 0.0,
}
ALIASES = {"eta": "learning_rate", "num_round": "n_estimators", "objective": None}


def check_params(params: dict) -> dict:
    out = dict(DEFAULTS)
    for key, value in params.items():
        if key in ALIASES:
            if ALIASES[key] is None:
                if key == "objective" and value != "binary:logistic":
                    raise ValueError("only the binary:logistic objective is supported")
                continue
            key = ALIASES[key]
        if key not in DEFAULTS:
            raise ValueError(f"unknown gbt parameter {key!r}")
        out[key] = value
    if int(out["n_estimators"]) < 0:
        raise ValueError("n_estimators must be non-negative")
    if int(out["max_depth"]) < 1:
        raise ValueError("max_depth must be at least 1")
    if out["learning_rate"] < 0:
        raise ValueError("learning_rate must be non-negative")
    if not 0 < out["subsample"] <= 1 or not 0 < out["colsample_bytree"] <= 1:
        raise ValueError("subsample and colsample_bytree must be in (0, 1]")
    if not 0 < out["base_score"] < 1:
        raise ValueError("base_score must be in (0, 1)")
    if out["reg_lambda"] < 0 or out["min_child_weight"] < 0 or out["gamma"] < 0:
        raise ValueError("reg_lambda, min_child_weight and gamma must be non-negative")
    out["n_estimators"] = int(out["n_estimators"])
    out["max_depth"] = int(out["max_depth"])
    return out


def _best_split(XT, order_rows, g, h, cols, lam, mcw):
    """Best (gain, feature, threshold) for one node, or None.

    ``order_rows`` holds, per sampled column, the node's rows sorted by that
    column's value, shape (len(cols), m).
    """
    m = order_rows.shape[1]
    if m < 2:
        return None
    vals = XT[cols[:, None], order_rows]
    G = np.cumsum(g[order_rows], axis=1)
    H = np.cumsum(h[order_rows], axis=1)
    Gt, Ht = G[0, -1], H[0, -1]
    GL, HL = G[:, :-1], H[:, :-1]
    GR, HR = Gt - GL, Ht - HL
    valid = (vals[:, :-1] < vals[:, 1:]) & (HL >= mcw) & (HR >= mcw)
    if not valid.any():
        return None
    gain = 0.5 * (GL**2 / (HL + lam) + GR**2 / (HR + lam) - Gt**2 / (Ht + lam))
    gain = np.where(valid, gain, -np.inf)
    # near-equal gains are ties (identical partitions differ only by cumsum rounding);
    # the first of them is the lowest column, then the lowest value
    top = gain.max()
    k = int(np.argmax(gain >= top - 1e-9 * abs(top)))
    j, i = divmod(k, m - 1)
    lo, hi = vals[j, i], vals[j, i + 1]
    thr = 0.5 * (lo + hi)
    if not lo < thr <= hi:
        thr = hi
    return float(gain[j, i]), int(cols[j]), float(thr)


def _grow(X, XT, presorted, g, h, rows, cols, p):
    n = len(X)
    builder = TreeBuilder()
    lam, mcw, gamma = p["reg_lambda"], p["min_child_weight"], p["gamma"]
    order = presorted if len(cols) == presorted.shape[0] else presorted[cols]
    if len(rows) < n:
        mask = np.zeros(n, dtype=bool)
        mask[rows] = True
        order = order[mask[order]].reshape(len(cols), len(rows))
    # each node carries its rows sorted along every sampled column
    stack = [(builder.add(), rows, order, 0)]
    while stack:
        node, idx, order_rows, depth = stack.pop()
        builder.value[node] = float(-g[idx].sum() / (h[idx].sum() + lam) * p["learning_rate"])
        if depth >= p["max_depth"] or len(idx) < 2:
            continue
        best = _best_split(XT, order_rows, g, h, cols, lam, mcw)
        if best is None or best[0] <= gamma or best[0] <= 1e-12:
            continue
        _, f, thr = best
        goes_left = np.zeros(n, dtype=bool)
        goes_left[idx[X[idx, f] < thr]] = True
        in_left = goes_left[order_rows]
        m_left = int(in_left[0].sum())
        left_order = order_rows[in_left].reshape(len(cols), m_left)
        right_order = order_rows[~in_left].reshape(len(cols), len(idx) - m_left)
        left, right = builder.split(node, f, thr)
        stack.append((right, right_order[0], right_order, depth + 1))
        stack.append((left, left_order[0], left_order, depth + 1))
    return builder.build()


class GradientBoostedTrees:
    def __init__(self, **params):
        self.params = check_params(params)
        self.trees: list[Tree] = []
        self.base_margin = float(logit(self.params["base_score"]))

    def fit(self, X, y, seed: int = 0) -> GradientBoostedTrees:
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, d = X.shape
        p = self.params
        rng = np.random.default_rng(seed)
        XT = np.ascontiguousarray(X.T)
        presorted = np.argsort(XT, axis=1, kind="stable")
        margin = np.full(n, self.base_margin)
        n_rows = max(1, int(round(p["subsample"] * n)))
        n_cols = max(1, int(round(p["colsample_bytree"] * d)))
        self.trees = []
        for _ in range(p["n_estimators"]):
            prob = expit(margin)
            g = prob - y
            h = prob * (1 - prob)
            rows = np.arange(n) if n_rows == n else np.sort(rng.choice(n, n_rows, replace=False))
            cols = np.arange(d) if n_cols == d else np.sort(rng.choice(d, n_cols, replace=False))
            tree = _grow(X, XT, presorted, g, h, rows, cols, p)
            self.trees.append(tree)
            margin += tree.predict(X)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        margin = np.full(len(X), self.base_margin)
        for tree in self.trees:
            margin += tree.predict(X)
        return margin

    def predict_score(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def to_dict(self) -> dict:
        return {"base_margin": self.base_margin, "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, params: dict, state: dict) -> GradientBoostedTrees:
        model = cls(**params)
        model.base_margin = state["base_margin"]
        model.trees = [Tree.from_dict(t) for t in state["trees"]]
        return model
