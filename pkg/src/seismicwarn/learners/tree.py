"""Array-backed binary decision tree shared by the tree learners."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass
class Tree:
    """Nodes in creation order; node 0 is the root.

    A row goes left at an internal node iff ``x[feature] < threshold``.
    ``feature == -1`` marks a leaf, whose output is ``value``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_internal(self) -> int:
        return int((self.feature != LEAF).sum())

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.intp)
        active = np.arange(len(X))
        while len(active):
            f = self.feature[node[active]]
            internal = f != LEAF
            active, f = active[internal], f[internal]
            if not len(active):
                break
            at = node[active]
            go_left = X[active, f] < self.threshold[at]
            node[active] = np.where(go_left, self.left[at], self.right[at])
        return self.value[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(
            feature=np.array(d["feature"], dtype=np.intp),
            threshold=np.array(d["threshold"], dtype=float),
            left=np.array(d["left"], dtype=np.intp),
            right=np.array(d["right"], dtype=np.intp),
            value=np.array(d["value"], dtype=float),
        )


class TreeBuilder:
    """Collects nodes while a tree is grown depth-first."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def split(self, node: int, feature: int, threshold: float) -> tuple[int, int]:
        left, right = self.add(), self.add()
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = left
        self.right[node] = right
        return left, right

    def build(self) -> Tree:
        return Tree(
            feature=np.array(self.feature, dtype=np.intp),
            threshold=np.array(self.threshold, dtype=float),
            left=np.array(self.left, dtype=np.intp),
            right=np.array(self.right, dtype=np.intp),
            value=np.array(self.value, dtype=float),
        )


def split_counts(trees, n_features: int) -> np.ndarray:
    counts = np.zeros(n_features, dtype=np.int64)
    for tree in trees:
        f = tree.feature[tree.feature != LEAF]
        counts += np.bincount(f, minlength=n_features)
    return counts
