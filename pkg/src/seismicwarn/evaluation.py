"""Leakage-aware split protocols and the cross-validated evaluation runner.

Four protocols produce a :class:`SplitPlan`, an ordered list of
(train rows, test rows) folds over one :class:`~seismicwarn.schema.Dataset`:

* ``kfold``: random balanced assignment of every row to one of k folds.
* ``lolo``: one fold per eligible location, tested on all of its rows.
* ``trts1``: per repeat, whole held-out locations plus a chronological
  70/30 split of every other location with a gap before the test block.
* ``trts2``: per repeat, whole held-out locations plus 20% of every other
  location taken from its start or end, with suspicious locations dropped.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .features import ExtractorConfig, extract, fs3_raw, make_interactions, prune_columns
from .learners.base import ClassifierSpec, fit, predict_score
from .metrics import auc_rank
from .schema import Dataset, FeatureMatrix, LocationMetadata

PROTOCOLS = ("kfold", "lolo", "trts1", "trts2")


@dataclass(frozen=True)
class ProtocolConfig:
    """Parameters of all split protocols.

    ``train_frac`` and ``repeats`` default per protocol when left as None:
    0.70 and 25 for ``trts1``, 0.80 and 20 for ``trts2``. ``sides`` maps a
    location id to ``"start"`` or ``"end"`` (where ``trts2`` takes its test
    share); unlisted locations use ``default_side``. ``tse_filter`` lists
    locations that contribute only rows with positive total seismic energy
    in ``trts2``. ``gap_mode`` ``"one"`` removes the whole gap from the
    training side; ``"two"`` splits it across both sides.
    """

    protocol: str = "trts1"
    k: int = 10
    train_only: tuple[int, ...] = (264, 373, 437)
    excluded: tuple[int, ...] = (777, 793)
    gap: int = 32
    gap_mode: str = "one"
    holdout: int = 5
    train_frac: float | None = None
    repeats: int | None = None
    sides: Mapping[int, str] = field(default_factory=lambda: {146: "start", 599: "start"})
    default_side: str = "end"
    tse_filter: tuple[int, ...] = (373, 437)

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.gap < 0:
            raise ValueError("gap must be non-negative")
        if self.gap_mode not in ("one", "two"):
            raise ValueError("gap_mode must be 'one' or 'two'")
        if self.holdout < 0:
            raise ValueError("holdout must be non-negative")
        if self.train_frac is not None and not 0 < self.train_frac < 1:
            raise ValueError("train_frac must be in (0, 1)")
        if self.repeats is not None and self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        sides = {int(k): v for k, v in dict(self.sides).items()}
        for side in list(sides.values()) + [self.default_side]:
            if side not in ("start", "end"):
                raise ValueError(f"side must be 'start' or 'end', got {side!r}")
        object.__setattr__(self, "sides", sides)
        for name in ("train_only", "excluded", "tse_filter"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))

    @property
    def fraction(self) -> float:
        if self.train_frac is not None:
            return self.train_frac
        return 0.80 if self.protocol == "trts2" else 0.70

    @property
    def n_repeats(self) -> int:
        if self.repeats is not None:
            return self.repeats
        return 20 if self.protocol == "trts2" else 25

    @classmethod
    def from_dict(cls, data: Mapping) -> ProtocolConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown protocol config key(s): {', '.join(sorted(unknown))}")
        return cls(**dict(data))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sides"] = {str(k): v for k, v in sorted(self.sides.items())}
        for name in ("train_only", "excluded", "tse_filter"):
            out[name] = list(out[name])
        return out


@dataclass(frozen=True, eq=False)
class Fold:
    train: np.ndarray
    test: np.ndarray


@dataclass(frozen=True, eq=False)
class SplitPlan:
    folds: list[Fold]
    protocol: str
    seed: int
    params: dict

    def __len__(self) -> int:
        return len(self.folds)

    def to_dict(self, dataset: Dataset) -> dict:
        """Folds as instance-id lists, for audit files."""
        ids = dataset.ids
        return {
            "protocol": self.protocol,
            "seed": self.seed,
            "params": self.params,
            "folds": [
                {"train": ids[f.train].tolist(), "test": ids[f.test].tolist()} for f in self.folds
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping, dataset: Dataset) -> SplitPlan:
        pos = {int(i): r for r, i in enumerate(dataset.ids)}
        try:
            folds = [
                Fold(
                    np.array([pos[int(i)] for i in f["train"]], dtype=np.int64),
                    np.array([pos[int(i)] for i in f["test"]], dtype=np.int64),
                )
                for f in data["folds"]
            ]
        except KeyError as err:
            raise ValueError(f"split plan refers to unknown instance id {err.args[0]}") from None
        return cls(folds, data["protocol"], int(data["seed"]), dict(data["params"]))

    def save(self, path, dataset: Dataset) -> None:
        Path(path).write_text(json.dumps(self.to_dict(dataset), sort_keys=True) + "\n")


def _sorted(index) -> np.ndarray:
    return np.sort(np.asarray(index, dtype=np.int64))


def _eligible_holdouts(groups: Mapping[int, np.ndarray], exclude: Sequence[int]) -> list[int]:
    return [loc for loc in sorted(groups) if loc not in set(exclude)]


def kfold_split(dataset: Dataset, k: int = 10, seed: int = 0) -> SplitPlan:
    """Random balanced assignment of rows to ``k`` folds."""
    n = len(dataset)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of instances ({n})")
    rng = np.random.default_rng(seed)
    assign = np.empty(n, dtype=np.int64)
    assign[rng.permutation(n)] = np.arange(n) % k
    folds = [
        Fold(np.flatnonzero(assign != j), np.flatnonzero(assign == j)) for j in range(k)
    ]
    return SplitPlan(folds, "kfold", seed, {"k": k})


def lolo_split(dataset: Dataset, config: ProtocolConfig | None = None) -> SplitPlan:
    """One fold per location that is not train-only and has a positive label."""
    config = config or ProtocolConfig(protocol="lolo")
    if not dataset.labeled:
        raise ValueError("leave-one-location-out needs labels")
    groups = dataset.groups()
    eligible = [
        loc
        for loc in sorted(groups)
        if loc not in config.train_only and dataset.labels[groups[loc]].any()
    ]
    if not eligible:
        raise ValueError("no location is eligible as a test fold")
    folds = []
    for loc in eligible:
        test = groups[loc]
        train = np.flatnonzero(dataset.locations != loc)
        if len(train) == 0:
            raise ValueError(f"holding out location {loc} leaves nothing to train on")
        folds.append(Fold(train, _sorted(test)))
    return SplitPlan(folds, "lolo", 0, {"train_only": list(config.train_only)})


def chronological_cut(chrono: np.ndarray, frac: float, gap: int, gap_mode: str = "one"):
    """Split one location's chronologically sorted rows into (train, test) positions.

    The first ``floor(frac * n)`` rows are the training side and the rest the
    test side. Rows are then dropped so that every kept train row is at least
    ``gap + 1`` chronological steps before every kept test row: all of them on
    the training side (``"one"``) or ``ceil(gap / 2)`` before and the rest
    after the cut (``"two"``).
    """
    n = len(chrono)
    s = int(np.floor(frac * n + 1e-9))
    if s < 1 or s >= n:
        raise ValueError(f"a location with {n} instances cannot host a {frac:.2f} split")
    cut = chrono[s]
    before = gap if gap_mode == "one" else (gap + 1) // 2
    after = gap - before
    train = np.flatnonzero(chrono <= cut - before - 1)
    test = np.flatnonzero(chrono >= cut + after)
    if len(train) == 0 or len(test) == 0:
        raise ValueError(f"a location with {n} instances is too short for the split and a {gap}-hour gap")
    return train, test


def trts1_split(dataset: Dataset, config: ProtocolConfig | None = None, seed: int = 0) -> SplitPlan:
    """Repeated held-out-locations plus chronological gapped split."""
    config = config or ProtocolConfig(protocol="trts1")
    groups = dataset.groups()
    candidates = _eligible_holdouts(groups, config.train_only)
    if len(candidates) < config.holdout:
        raise ValueError(
            f"only {len(candidates)} locations can be held out, {config.holdout} requested"
        )
    # cuts are fixed per location, so compute (and validate) them once
    cuts = {}
    for loc in candidates:
        rows = groups[loc]
        tr, te = chronological_cut(dataset.chrono[rows], config.fraction, config.gap, config.gap_mode)
        cuts[loc] = (rows[tr], rows[te])
    rng = np.random.default_rng(seed)
    folds = []
    for _ in range(config.n_repeats):
        held = set(rng.choice(candidates, config.holdout, replace=False).tolist())
        train, test = [], []
        for loc, rows in groups.items():
            if loc in config.train_only:
                train.append(rows)
            elif loc in held:
                test.append(rows)
            else:
                train.append(cuts[loc][0])
                test.append(cuts[loc][1])
        folds.append(Fold(_sorted(np.concatenate(train)), _sorted(np.concatenate(test))))
    return SplitPlan(folds, "trts1", seed, config.to_dict())


def trts2_split(dataset: Dataset, config: ProtocolConfig | None = None, seed: int = 0) -> SplitPlan:
    """Repeated held-out-locations plus a start/end share split."""
    config = config or ProtocolConfig(protocol="trts2")
    groups = {loc: rows for loc, rows in dataset.groups().items() if loc not in config.excluded}
    if len(groups) < config.holdout + 1:
        raise ValueError(
            f"{len(groups)} locations remain after exclusion; at least {config.holdout + 1} needed"
        )
    tse = dataset.scalar("total_seismic_energy")
    shares = {}
    for loc, rows in groups.items():
        if loc in config.tse_filter:
            rows = rows[tse[rows] > 0]
        n = len(rows)
        n_test = n - int(np.floor(config.fraction * n + 1e-9))
        side = config.sides.get(loc, config.default_side)
        if side == "start":
            shares[loc] = (rows[n_test:], rows[:n_test])
        else:
            shares[loc] = (rows[: n - n_test], rows[n - n_test :])
    candidates = sorted(groups)
    rng = np.random.default_rng(seed)
    folds = []
    for _ in range(config.n_repeats):
        held = set(rng.choice(candidates, config.holdout, replace=False).tolist())
        train, test = [], []
        for loc in candidates:
            if loc in held:
                test.append(np.concatenate(shares[loc]))
            else:
                train.append(shares[loc][0])
                test.append(shares[loc][1])
        folds.append(Fold(_sorted(np.concatenate(train)), _sorted(np.concatenate(test))))
    return SplitPlan(folds, "trts2", seed, config.to_dict())


def make_plan(dataset: Dataset, config: ProtocolConfig, seed: int = 0) -> SplitPlan:
    if config.protocol == "kfold":
        return kfold_split(dataset, config.k, seed)
    if config.protocol == "lolo":
        return lolo_split(dataset, config)
    if config.protocol == "trts1":
        return trts1_split(dataset, config, seed)
    return trts2_split(dataset, config, seed)


def leak_violations(
    plan: SplitPlan, dataset: Dataset, gap: int = 0, train_only: Sequence[int] = ()
) -> list[str]:
    """Describe every broken split invariant; an empty list means the plan is clean.

    Checks disjointness, that test rows are labeled, that no train-only
    location is tested, and that same-location train and test rows are at
    least ``gap`` chronological steps apart.
    """
    out = []
    locs, chrono = dataset.locations, dataset.chrono
    for j, fold in enumerate(plan.folds):
        if np.intersect1d(fold.train, fold.test).size:
            out.append(f"fold {j}: train and test overlap")
        if dataset.labels is None:
            out.append(f"fold {j}: test rows are unlabeled")
        bad = sorted(set(locs[fold.test].tolist()) & set(int(v) for v in train_only))
        if bad:
            out.append(f"fold {j}: train-only location(s) {bad} in test")
        if gap <= 0:
            continue
        for loc in np.unique(locs[fold.test]):
            tr = np.sort(chrono[fold.train][locs[fold.train] == loc])
            if len(tr) == 0:
                continue
            te = chrono[fold.test][locs[fold.test] == loc]
            pos = np.searchsorted(tr, te)
            nearest = np.full(len(te), np.iinfo(np.int64).max)
            left = pos > 0
            nearest[left] = te[left] - tr[pos[left] - 1]
            right = pos < len(tr)
            nearest[right] = np.minimum(nearest[right], tr[pos[right]] - te[right])
            if nearest.min() < gap:
                out.append(f"fold {j}: location {loc} has train/test rows {nearest.min()} apart")
    return out


@dataclass
class EvaluationReport:
    protocol: str
    fold_auc: list[float | None]
    skipped: list[int]
    mean: float
    std: float

    def to_dict(self) -> dict:
        return asdict(self)


def fold_seed(seed: int, fold: int) -> int:
    """Independent per-fold training seed."""
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def evaluate_matrix(
    spec: ClassifierSpec,
    X: FeatureMatrix,
    y: np.ndarray,
    plan: SplitPlan,
    columns_for_fold=None,
    tie_mode: str = "half",
) -> EvaluationReport:
    """Fit and score ``spec`` on every fold of ``plan``.

    ``columns_for_fold(train_rows)`` optionally chooses the columns used in a
    fold from its training rows only. Folds whose train or test side holds a
    single class are skipped with a warning.
    """
    y = np.asarray(y)
    aucs: list[float | None] = []
    skipped = []
    for j, fold in enumerate(plan.folds):
        ytr, yte = y[fold.train], y[fold.test]
        if yte.min() == yte.max() or ytr.min() == ytr.max():
            warnings.warn(f"fold {j} skipped: a single class in train or test", stacklevel=2)
            aucs.append(None)
            skipped.append(j)
            continue
        Xf = X if columns_for_fold is None else X.select(columns_for_fold(fold.train))
        model = fit(spec.with_seed(fold_seed(spec.seed, j)), Xf.rows(fold.train), ytr)
        aucs.append(auc_rank(predict_score(model, Xf.rows(fold.test)), yte, tie_mode))
    done = [a for a in aucs if a is not None]
    if not done:
        raise ValueError("every fold was skipped; no AUC could be computed")
    return EvaluationReport(plan.protocol, aucs, skipped, float(np.mean(done)), float(np.std(done)))


def evaluate(
    spec: ClassifierSpec,
    extractor: ExtractorConfig,
    plan: SplitPlan,
    dataset: Dataset,
    metadata: Mapping[int, LocationMetadata] | None = None,
    tie_mode: str = "half",
) -> EvaluationReport:
    """Cross-validated AUC of one learner on one feature set.

    Row-wise extractors are computed once; FS3 column pruning is redone on
    each fold's training rows so no test statistics leak into the column set.
    """
    if not dataset.labeled:
        raise ValueError("evaluation needs labels")
    if extractor.feature_set != "FS3":
        X = extract(dataset, metadata, extractor)
        return evaluate_matrix(spec, X, dataset.labels, plan, tie_mode=tie_mode)
    raw = fs3_raw(dataset, extractor)
    X = make_interactions(raw, extractor.interactions)
    extra = list(X.columns[len(raw.columns) :])

    def columns(train):
        return prune_columns(raw.rows(train), extractor.prune_threshold) + extra

    return evaluate_matrix(spec, X, dataset.labels, plan, columns, tie_mode)
