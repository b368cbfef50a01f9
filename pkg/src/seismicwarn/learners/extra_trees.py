"""Extremely randomized trees for binary classification.

At each node a random subset of ``max_features`` non-constant columns is
drawn, each gets one cut drawn uniformly between the node's min and max, and
the cut with the largest weighted impurity decrease wins. No bootstrap.
The score of a row is the mean over trees of its leaf's weighted class-1
fraction.
"""
from __future__ import annotations

import numpy as np

from .tree import Tree, TreeBuilder

DEFAULTS = {
    "n_estimators": 10,
    "criterion": "gini",
    "max_depth": None,
    "min_samples_split": 2,
    "min_samples_leaf": 1,
    "max_features": "sqrt",
    "class_weight": None,
}


def check_params(params: dict) -> dict:
    out = dict(DEFAULTS)
    for key, value in params.items():
        if key not in DEFAULTS:
            raise ValueError(f"unknown etc parameter {key!r}")
        out[key] = value
    if int(out["n_estimators"]) < 1:
        raise ValueError("n_estimators must be at least 1")
    if out["criterion"] not in ("gini", "entropy"):
        raise ValueError("criterion must be gini or entropy")
    if out["max_depth"] is not None and int(out["max_depth"]) < 1:
        raise ValueError("max_depth must be at least 1")
    if int(out["min_samples_split"]) < 2 or int(out["min_samples_leaf"]) < 1:
        raise ValueError("min_samples_split >= 2 and min_samples_leaf >= 1 required")
    mf = out["max_features"]
    if isinstance(mf, str):
        if mf not in ("sqrt", "auto", "log2"):
            raise ValueError(f"unknown max_features {mf!r}")
    elif mf is not None and (mf <= 0 or (isinstance(mf, float) and mf > 1)):
        raise ValueError("max_features must be a positive int or a fraction in (0, 1]")
    cw = out["class_weight"]
    if cw is not None and not isinstance(cw, dict) and cw != "balanced" and cw <= 0:
        raise ValueError("class_weight must be positive")
    out["n_estimators"] = int(out["n_estimators"])
    return out


def resolve_max_features(mf, d: int) -> int:
    if mf is None:
        k = d
    elif mf in ("sqrt", "auto"):
        k = int(np.sqrt(d))
    elif mf == "log2":
        k = int(np.log2(d))
    elif isinstance(mf, float):
        k = int(mf * d)
    else:
        k = int(mf)
    return int(min(max(k, 1), d))


def class_weights(cw, y) -> tuple[float, float]:
    """(weight of class 0, weight of class 1); a plain number weights class 1."""
    if cw is None:
        return 1.0, 1.0
    if cw == "balanced":
        n, pos = len(y), y.sum()
        return n / (2 * max(n - pos, 1)), n / (2 * max(pos, 1))
    if isinstance(cw, dict):
        return float(cw.get(0, cw.get("0", 1.0))), float(cw.get(1, cw.get("1", 1.0)))
    return 1.0, float(cw)


def _impurity(p, criterion):
    if criterion == "gini":
        return 2 * p * (1 - p)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    return np.nan_to_num(ent, nan=0.0)


def grow_tree(X, y, w, rng, p, k) -> Tree:
    n, d = X.shape
    wy = w * y
    max_depth = np.inf if p["max_depth"] is None else int(p["max_depth"])
    mss, msl, crit = int(p["min_samples_split"]), int(p["min_samples_leaf"]), p["criterion"]
    builder = TreeBuilder()
    stack = [(builder.add(), np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        wt, wp = w[idx].sum(), wy[idx].sum()
        builder.value[node] = float(wp / wt) if wt > 0 else 0.0
        if depth >= max_depth or len(idx) < mss or wp <= 0 or wp >= wt:
            continue
        perm = rng.permutation(d)
        chosen, lo_hi = [], []
        for start in range(0, d, k):
            cand = perm[start : start + k]
            block = X[np.ix_(idx, cand)]
            lo, hi = block.min(axis=0), block.max(axis=0)
            ok = lo < hi
            chosen.extend(cand[ok])
            lo_hi.extend(zip(lo[ok], hi[ok]))
            if len(chosen) >= k:
                break
        if not chosen:
            continue
        chosen, lo_hi = np.array(chosen[:k]), np.array(lo_hi[:k])
        order = np.argsort(chosen)
        chosen, lo_hi = chosen[order], lo_hi[order]
        thr = rng.uniform(lo_hi[:, 0], lo_hi[:, 1])
        block = X[np.ix_(idx, chosen)]
        left = block < thr
        n_left = left.sum(axis=0)
        wl = w[idx] @ left
        wpl = wy[idx] @ left
        wr, wpr = wt - wl, wp - wpl
        with np.errstate(divide="ignore", invalid="ignore"):
            child = wl * _impurity(np.where(wl > 0, wpl / wl, 0), crit) + wr * _impurity(
                np.where(wr > 0, wpr / wr, 0), crit
            )
        decrease = wt * _impurity(wp / wt, crit) - child
        valid = (n_left >= msl) & (len(idx) - n_left >= msl)
        if not valid.any():
            continue
        decrease = np.where(valid, decrease, -np.inf)
        j = int(np.argmax(decrease))
        f, t = int(chosen[j]), float(thr[j])
        go_left = left[:, j]
        lnode, rnode = builder.split(node, f, t)
        stack.append((rnode, idx[~go_left], depth + 1))
        stack.append((lnode, idx[go_left], depth + 1))
    return builder.build()


class ExtraTrees:
    def __init__(self, **params):
        self.params = check_params(params)
        self.trees: list[Tree] = []

    def fit(self, X, y, seed: int = 0) -> ExtraTrees:
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        w0, w1 = class_weights(self.params["class_weight"], y)
        w = np.where(y == 1, w1, w0)
        k = resolve_max_features(self.params["max_features"], X.shape[1])
        children = np.random.SeedSequence(seed).spawn(self.params["n_estimators"])
        self.trees = [
            grow_tree(X, y, w, np.random.default_rng(child), self.params, k) for child in children
        ]
        return self

    def predict_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        total = np.zeros(len(X))
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)

    def to_dict(self) -> dict:
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, params: dict, state: dict) -> ExtraTrees:
        model = cls(**params)
        model.trees = [Tree.from_dict(t) for t in state["trees"]]
        return model
