"""One interface over the four learners, plus model files."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from ..schema import FeatureMatrix, SchemaError
from . import extra_trees, gbt, lda, logistic
from .tree import split_counts

ALGORITHMS = {
    "gbt": (gbt.GradientBoostedTrees, gbt.check_params),
    "etc": (extra_trees.ExtraTrees, extra_trees.check_params),
    "logreg": (logistic.LogisticRegression, logistic.check_params),
    "lda": (lda.ShrinkageLDA, lda.check_params),
}
TREE_ALGORITHMS = ("gbt", "etc")
MODEL_FORMAT = "seismicwarn-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ClassifierSpec:
    algorithm: str
    params: Mapping = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {sorted(ALGORITHMS)}")
        ALGORITHMS[self.algorithm][1](dict(self.params))
        object.__setattr__(self, "params", dict(self.params))

    @classmethod
    def from_dict(cls, data: Mapping) -> ClassifierSpec:
        unknown = set(data) - {"algorithm", "params", "seed"}
        if unknown:
            raise ValueError(f"unknown model spec key(s): {', '.join(sorted(unknown))}")
        return cls(data["algorithm"], data.get("params", {}), int(data.get("seed", 0)))

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "params": dict(self.params), "seed": self.seed}

    def with_seed(self, seed: int) -> ClassifierSpec:
        return ClassifierSpec(self.algorithm, self.params, seed)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ClassifierSpec
    columns: tuple[str, ...]
    estimator: object
    split_counts: dict | None = None

    @property
    def algorithm(self) -> str:
        return self.spec.algorithm


def _as_matrix(X) -> FeatureMatrix:
    if isinstance(X, FeatureMatrix):
        return X
    X = np.asarray(X, dtype=float)
    return FeatureMatrix(X, tuple(f"x{j}" for j in range(X.shape[1])))


def fit(spec: ClassifierSpec, X, y) -> TrainedModel:
    """Train the learner described by ``spec`` on ``X`` (FeatureMatrix or array)."""
    X = _as_matrix(X)
    y = np.asarray(y)
    if y.shape != (len(X),):
        raise ValueError("labels do not match the number of rows")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    cls = ALGORITHMS[spec.algorithm][0]
    estimator = cls(**spec.params).fit(X.values, y, seed=spec.seed)
    counts = None
    if spec.algorithm in TREE_ALGORITHMS:
        c = split_counts(estimator.trees, X.shape[1])
        counts = {name: int(v) for name, v in zip(X.columns, c)}
    return TrainedModel(spec, X.columns, estimator, counts)


def predict_score(model: TrainedModel, X) -> np.ndarray:
    """Risk scores for the rows of ``X``; its columns must match the model's."""
    X = _as_matrix(X)
    if tuple(X.columns) != tuple(model.columns):
        raise SchemaError("feature columns do not match the columns the model was trained on")
    return np.asarray(model.estimator.predict_score(X.values), dtype=float)


def feature_importance(model: TrainedModel) -> dict[str, int]:
    """Number of splits per column across all trees."""
    if model.split_counts is None:
        raise ValueError(f"{model.algorithm} is not a tree model; no split counts")
    return dict(model.split_counts)


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "spec": model.spec.to_dict(),
        "columns": list(model.columns),
        "state": model.estimator.to_dict(),
        "split_counts": model.split_counts,
    }


def model_from_dict(data: dict) -> TrainedModel:
    if data.get("format") != MODEL_FORMAT:
        raise SchemaError("not a model file")
    if data.get("version") != MODEL_VERSION:
        raise SchemaError(f"unsupported model file version {data.get('version')!r}")
    spec = ClassifierSpec.from_dict(data["spec"])
    cls = ALGORITHMS[spec.algorithm][0]
    estimator = cls.from_dict(spec.params, data["state"])
    return TrainedModel(spec, tuple(data["columns"]), estimator, data.get("split_counts"))


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True) + "\n")


def load_model(path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text()))
