"""The four feature sets FS1..FS4.

Every extractor is a per-row function of (instance, location metadata,
config); only FS3 has fit state, the set of columns that survive pruning,
which callers may compute on training rows and pass back in via ``keep``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from itertools import combinations
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from ..schema import (
    ASSESSMENT_LEVELS,
    ASSESSMENTS,
    BANDS,
    COUNT_SERIES,
    GENERAL_FEATURES,
    GEOPHONE_SERIES,
    GEOLOGICAL_LEVELS,
    HOURS,
    SUM_SERIES,
    Dataset,
    FeatureMatrix,
    LocationMetadata,
    SchemaError,
)
from .stats import WindowSpec, mean_energy, row_correlation, window_stats

FEATURE_SETS = ("FS1", "FS2", "FS3", "FS4")

FS2_SERIES = COUNT_SERIES + SUM_SERIES + (
    "number_of_rock_bursts",
    "number_of_destressing_blasts",
    "avg_gactivity",
    "avg_genergy",
)
FS2_STATS = ("min", "max", "std", "nonzero", "hours_since_nonzero")
FS2_WINDOWS = (2, 4, 8, 24)
DIFF_SERIES = ("avg_difference_in_gactivity", "avg_difference_in_genergy")
ABS_MAX_WINDOWS = (2, 24)

FS3_DERIVED = (
    "log_max_avg_diff_gactivity",
    "log_max_avg_diff_genergy",
    "log_max_avg_diff_difference_in_gactivity",
    "log_max_avg_diff_difference_in_genergy",
    "log_ave_energy",
)
FS3_SERIES = FS2_SERIES + FS3_DERIVED
FS3_EXTRA_STATS = ("q25", "q50", "q75", "count_increases", "count_positive")
FS3_EXTRA_WINDOWS = (4, 8, 24)
FS3_FIT_SERIES = ("avg_difference_in_gactivity", "avg_gactivity", "log_ave_energy")
FS3_CORR_PAIRS = (
    ("avg_difference_in_gactivity", "avg_difference_in_genergy"),
    ("avg_gactivity", "avg_genergy"),
)

FS4_SERIES = COUNT_SERIES + (
    "total_number_of_bumps",
    "number_of_rock_bursts",
    "number_of_destressing_blasts",
    "highest_bump_energy",
    "max_gactivity",
    "max_genergy",
    "max_difference_in_gactivity",
    "max_difference_in_genergy",
)
FS4_OFFSETS = (0, 4, 8, 12, 16)
FS4_LENGTH = 8

FS1_SUMMED = (
    "number_of_rock_bursts",
    "highest_bump_energy",
    "total_number_of_bumps",
    "number_of_destressing_blasts",
)
FS1_DIFF_SERIES = tuple(s for s in GEOPHONE_SERIES if "difference" in s)
FS1_STD_SERIES = ("avg_gactivity", "avg_genergy")

QUANTILES = {"q25": 0.25, "q50": 0.5, "q75": 0.75}


@dataclass(frozen=True)
class ExtractorConfig:
    """Options for :func:`extract`.

    ``encoding`` is ``"ordinal"`` or ``"onehot"`` for the expert assessments;
    ``None`` picks the per-set default (one-hot for FS2, ordinal otherwise).
    ``recent_hours`` / ``recent_std_hours`` / ``slope_hours`` are the FS1
    windows over the most recent hours of the geophone series.
    """

    feature_set: str = "FS1"
    encoding: str | None = None
    height_noise: float = 0.2
    noise_seed: int = 0
    prune_threshold: float = 0.99
    interactions: tuple = ()
    recent_hours: tuple = (1, 2, 3, 4, 5, 6)
    recent_std_hours: tuple = (2, 3, 4, 5, 6)
    slope_hours: int = 5

    def __post_init__(self):
        object.__setattr__(self, "feature_set", self.feature_set.upper())
        object.__setattr__(self, "interactions", tuple(tuple(p) for p in self.interactions))
        object.__setattr__(self, "recent_hours", tuple(self.recent_hours))
        object.__setattr__(self, "recent_std_hours", tuple(self.recent_std_hours))
        if self.feature_set not in FEATURE_SETS:
            raise ValueError(f"unknown feature set {self.feature_set!r}")
        if self.encoding not in (None, "ordinal", "onehot"):
            raise ValueError(f"unknown encoding {self.encoding!r}")
        if self.height_noise < 0:
            raise ValueError("height noise sigma must be non-negative")
        if not 0 < self.prune_threshold <= 1:
            raise ValueError("prune threshold must be in (0, 1]")
        for pair in self.interactions:
            if len(pair) != 2:
                raise ValueError(f"interaction {pair!r} is not a pair")
        for g in self.recent_hours + self.recent_std_hours + (self.slope_hours,):
            WindowSpec(g)

    @classmethod
    def from_dict(cls, data: Mapping) -> ExtractorConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown extractor config key(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interactions"] = [list(p) for p in self.interactions]
        d["recent_hours"] = list(self.recent_hours)
        d["recent_std_hours"] = list(self.recent_std_hours)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def resolved_encoding(self) -> str:
        if self.encoding is not None:
            return self.encoding
        return "onehot" if self.feature_set == "FS2" else "ordinal"


class _Columns:
    """Accumulates named feature columns in insertion order."""

    def __init__(self, n: int):
        self.n = n
        self.names: list[str] = []
        self.cols: list[np.ndarray] = []

    def add(self, name: str, values) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n,):
            values = np.broadcast_to(values, (self.n,))
        self.names.append(name)
        self.cols.append(values)

    def matrix(self) -> np.ndarray:
        if not self.cols:
            return np.zeros((self.n, 0))
        return np.column_stack(self.cols)


def _stat(block, length, kind, offset=0):
    spec = WindowSpec(length, offset)
    if kind in QUANTILES:
        return window_stats(block, spec, "quantile", QUANTILES[kind])
    return window_stats(block, spec, kind)


def _add_assessments(cols: _Columns, dataset: Dataset, encoding: str) -> None:
    for j, name in enumerate(ASSESSMENTS):
        codes = dataset.assessments[:, j]
        if encoding == "ordinal":
            cols.add(name, codes)
        else:
            for k, letter in enumerate(ASSESSMENT_LEVELS, start=1):
                cols.add(f"{name}={letter}", codes == k)


def _add_general(cols: _Columns, dataset: Dataset) -> None:
    for j, name in enumerate(GENERAL_FEATURES):
        cols.add(name, dataset.general[:, j])


def _location_meta(dataset: Dataset, metadata: Mapping[int, LocationMetadata]):
    missing = sorted(set(int(l) for l in np.unique(dataset.locations)) - set(metadata))
    if missing:
        raise SchemaError(f"no metadata for location(s) {missing}")
    return [metadata[int(l)] for l in dataset.locations]


def add_height_noise(heights, sigma: float, seed: int, ids=None) -> np.ndarray:
    """Add N(0, sigma^2) to each height, drawn from a stream keyed by (seed, id)."""
    heights = np.asarray(heights, dtype=float)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return heights.copy()
    ids = np.arange(len(heights)) if ids is None else np.asarray(ids, dtype=np.int64)
    noise = np.array([np.random.default_rng([seed, int(i)]).standard_normal() for i in ids])
    return heights + sigma * noise


def fs1_extract(dataset: Dataset, metadata: Mapping[int, LocationMetadata], config: ExtractorConfig) -> FeatureMatrix:
    """Aggregation-oriented features plus the noised working height."""
    cols = _Columns(len(dataset))
    _add_general(cols, dataset)
    for j, name in enumerate(ASSESSMENTS):
        cols.add(name, dataset.assessments[:, j])
    cols.add("assessment_mean", dataset.assessments.mean(axis=1))
    for band, cname, sname in zip(BANDS, COUNT_SERIES, SUM_SERIES):
        counts, sums = dataset.series(cname), dataset.series(sname)
        cols.add(f"{cname}_sum24", counts.sum(axis=1))
        cols.add(f"{sname}_sum24", sums.sum(axis=1))
        cols.add(f"mean_energy_{band}", mean_energy(sums, counts))
    for name in FS1_SUMMED:
        cols.add(f"{name}_sum24", dataset.series(name).sum(axis=1))
    for name in GEOPHONE_SERIES:
        block = dataset.series(name)
        for kind in ("mean", "std", "max"):
            cols.add(f"{name}_{kind}", _stat(block, HOURS, kind))
        for g in config.recent_hours:
            cols.add(f"{name}_mean_last{g}", _stat(block, g, "mean"))
        cols.add(f"{name}_slope_last{config.slope_hours}", _stat(block, config.slope_hours, "ols_slope"))
    for name in FS1_DIFF_SERIES:
        block = dataset.series(name)
        cols.add(f"{name}_abs_mean", _stat(block, HOURS, "abs_mean"))
        cols.add(f"{name}_abs_max", _stat(block, HOURS, "abs_max"))
    for name in FS1_STD_SERIES:
        block = dataset.series(name)
        for g in config.recent_std_hours:
            cols.add(f"{name}_std_last{g}", _stat(block, g, "std"))
    metas = _location_meta(dataset, metadata)
    heights = np.array([m.main_working_height for m in metas])
    cols.add(
        "main_working_height_noisy",
        add_height_noise(heights, config.height_noise, config.noise_seed, dataset.ids),
    )
    return FeatureMatrix(cols.matrix(), tuple(cols.names), "FS1", config.config_hash(), dataset.ids)


def _fs2_block(cols: _Columns, dataset: Dataset, series_blocks: Mapping[str, np.ndarray]) -> None:
    for name, block in series_blocks.items():
        for w in FS2_WINDOWS:
            for kind in FS2_STATS:
                cols.add(f"{name}_{kind}_w{w}", _stat(block, w, kind))
    for name in DIFF_SERIES:
        for w in ABS_MAX_WINDOWS:
            cols.add(f"{name}_abs_max_w{w}", _stat(dataset.series(name), w, "abs_max"))


def fs2_extract(dataset: Dataset, config: ExtractorConfig) -> FeatureMatrix:
    """Raw retained series plus min/max/std/indicator/recency over recent windows."""
    cols = _Columns(len(dataset))
    for name in FS2_SERIES:
        block = dataset.series(name)
        for h in range(HOURS):
            cols.add(f"{name}.{h + 1}", block[:, h])
    _fs2_block(cols, dataset, {name: dataset.series(name) for name in FS2_SERIES})
    _add_general(cols, dataset)
    _add_assessments(cols, dataset, config.resolved_encoding)
    return FeatureMatrix(cols.matrix(), tuple(cols.names), "FS2", config.config_hash(), dataset.ids)


def fs3_series(dataset: Dataset) -> dict[str, np.ndarray]:
    """FS2 series plus the log-transformed derived series."""
    out = {name: dataset.series(name) for name in FS2_SERIES}
    for kind in ("gactivity", "genergy", "difference_in_gactivity", "difference_in_genergy"):
        gap = dataset.series(f"max_{kind}") - dataset.series(f"avg_{kind}")
        out[f"log_max_avg_diff_{kind}"] = np.log1p(np.clip(gap, 0, None))
    counts = sum(dataset.series(c) for c in COUNT_SERIES)
    sums = sum(dataset.series(s) for s in SUM_SERIES)
    ave = np.zeros_like(sums)
    np.divide(sums, counts, out=ave, where=counts > 0)
    out["log_ave_energy"] = np.log1p(ave)
    return out


def fs3_raw(dataset: Dataset, config: ExtractorConfig) -> FeatureMatrix:
    """FS3 columns before constant/correlation pruning."""
    cols = _Columns(len(dataset))
    series = fs3_series(dataset)
    _fs2_block(cols, dataset, series)
    for name, block in series.items():
        for w in FS3_EXTRA_WINDOWS:
            for kind in FS3_EXTRA_STATS:
                cols.add(f"{name}_{kind}_w{w}", _stat(block, w, kind))
    for name in FS3_FIT_SERIES:
        block = series[name] if name in series else dataset.series(name)
        for kind, label in (("ols_slope", "coef"), ("ols_intercept", "intercept"), ("ols_r2", "r2")):
            cols.add(f"{name}_lm_{label}", _stat(block, HOURS, kind))
    for a, b in FS3_CORR_PAIRS:
        cols.add(f"corr_{a}__{b}", row_correlation(dataset.series(a), dataset.series(b)))
    _add_general(cols, dataset)
    _add_assessments(cols, dataset, config.resolved_encoding)
    return FeatureMatrix(cols.matrix(), tuple(cols.names), "FS3", config.config_hash(), dataset.ids)


def prune_columns(matrix: FeatureMatrix, threshold: float = 0.99) -> list[str]:
    """Columns kept after dropping constants and near-duplicates.

    Walks the columns in order and keeps a column unless its absolute
    Pearson correlation with an already-kept column exceeds ``threshold``.
    """
    values = matrix.values
    varying = np.ptp(values, axis=0) > 0
    idx = np.flatnonzero(varying)
    if len(idx) == 0:
        return []
    z = values[:, idx] - values[:, idx].mean(axis=0)
    z /= np.sqrt((z**2).sum(axis=0))
    corr = np.abs(z.T @ z)
    kept: list[int] = []
    for j in range(len(idx)):
        if kept and corr[j, kept].max() > threshold:
            continue
        kept.append(j)
    return [matrix.columns[idx[j]] for j in kept]


def fs3_extract(dataset: Dataset, config: ExtractorConfig, keep: Sequence[str] | None = None) -> FeatureMatrix:
    """FS3 features; pruned on ``dataset`` itself unless ``keep`` is given."""
    raw = fs3_raw(dataset, config)
    if keep is None:
        keep = prune_columns(raw, config.prune_threshold)
    return raw.select(list(keep))


def fs4_extract(dataset: Dataset, metadata: Mapping[int, LocationMetadata], config: ExtractorConfig) -> FeatureMatrix:
    """Max and std over sliding 8-hour windows of count and max-type series."""
    cols = _Columns(len(dataset))
    for name in FS4_SERIES:
        block = dataset.series(name)
        for offset in FS4_OFFSETS:
            for kind in ("max", "std"):
                cols.add(f"{name}_{kind}_w{FS4_LENGTH}o{offset}", _stat(block, FS4_LENGTH, kind, offset))
    _add_general(cols, dataset)
    for j, name in enumerate(ASSESSMENTS):
        cols.add(name, dataset.assessments[:, j])
    metas = _location_meta(dataset, metadata)
    cols.add(
        "geological_assessment",
        [GEOLOGICAL_LEVELS.index(m.geological_assessment) + 1 for m in metas],
    )
    return FeatureMatrix(cols.matrix(), tuple(cols.names), "FS4", config.config_hash(), dataset.ids)


def interaction_name(a: str, b: str) -> str:
    a, b = sorted((a, b))
    return f"{a}*{b}"


def make_interactions(matrix: FeatureMatrix, pairs: Sequence[tuple[str, str]]) -> FeatureMatrix:
    """Append the elementwise product of each column pair, named ``a*b``."""
    known = set(matrix.columns)
    names, cols = [], []
    for a, b in pairs:
        for c in (a, b):
            if c not in known:
                raise KeyError(f"unknown column {c!r}")
        names.append(interaction_name(a, b))
        cols.append(matrix.column(a) * matrix.column(b))
    if not names:
        return matrix
    extra = FeatureMatrix(np.column_stack(cols), tuple(names), matrix.extractor, matrix.config_hash, matrix.ids)
    return matrix.hstack(extra)


def all_pairs(columns: Sequence[str]) -> list[tuple[str, str]]:
    return list(combinations(columns, 2))


def extract(
    dataset: Dataset,
    metadata: Mapping[int, LocationMetadata] | None,
    config: ExtractorConfig,
    keep: Sequence[str] | None = None,
) -> FeatureMatrix:
    """Run the configured extractor and append configured interactions."""
    fs = config.feature_set
    if fs in ("FS1", "FS4") and metadata is None:
        raise SchemaError(f"{fs} needs location metadata")
    if fs == "FS1":
        out = fs1_extract(dataset, metadata, config)
    elif fs == "FS2":
        out = fs2_extract(dataset, config)
    elif fs == "FS3":
        out = fs3_extract(dataset, config, keep)
    else:
        out = fs4_extract(dataset, metadata, config)
    return make_interactions(out, config.interactions)


def expected_arity(config: ExtractorConfig) -> int:
    """Column count of the unpruned extractor output (before interactions)."""
    n_assess = len(ASSESSMENTS) * (len(ASSESSMENT_LEVELS) if config.resolved_encoding == "onehot" else 1)
    fs = config.feature_set
    if fs == "FS1":
        geo = len(GEOPHONE_SERIES) * (3 + len(config.recent_hours) + 1)
        return (
            len(GENERAL_FEATURES) + len(ASSESSMENTS) + 1 + 3 * len(BANDS) + len(FS1_SUMMED)
            + geo + 2 * len(FS1_DIFF_SERIES) + len(FS1_STD_SERIES) * len(config.recent_std_hours) + 1
        )
    if fs == "FS2":
        return (
            len(FS2_SERIES) * (HOURS + len(FS2_WINDOWS) * len(FS2_STATS))
            + len(DIFF_SERIES) * len(ABS_MAX_WINDOWS) + len(GENERAL_FEATURES) + n_assess
        )
    if fs == "FS3":
        per_series = len(FS2_WINDOWS) * len(FS2_STATS) + len(FS3_EXTRA_WINDOWS) * len(FS3_EXTRA_STATS)
        return (
            len(FS3_SERIES) * per_series + 3 * len(FS3_FIT_SERIES) + len(FS3_CORR_PAIRS)
            + len(DIFF_SERIES) * len(ABS_MAX_WINDOWS) + len(GENERAL_FEATURES) + n_assess
        )
    return len(FS4_SERIES) * 2 * len(FS4_OFFSETS) + len(GENERAL_FEATURES) + len(ASSESSMENTS) + 1


def write_feature_matrix(matrix: FeatureMatrix, path, config: ExtractorConfig | None = None) -> Path:
    """Write ``path`` (CSV with an ``id`` column) and ``<path>.manifest.json``."""
    path = Path(path)
    frame = pd.DataFrame(matrix.values, columns=list(matrix.columns))
    ids = matrix.ids if matrix.ids is not None else np.arange(len(matrix))
    frame.insert(0, "id", ids)
    frame.to_csv(path, index=False, lineterminator="\n")
    manifest = {
        "extractor": matrix.extractor,
        "config_hash": matrix.config_hash,
        "columns": list(matrix.columns),
        "rows": len(matrix),
    }
    if config is not None:
        manifest["config"] = config.to_dict()
    manifest_path = path.with_name(path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def read_feature_matrix(path) -> FeatureMatrix:
    path = Path(path)
    manifest = json.loads(path.with_name(path.name + ".manifest.json").read_text())
    frame = pd.read_csv(path, float_precision="round_trip")
    columns = [c for c in frame.columns if c != "id"]
    if columns != manifest["columns"]:
        raise SchemaError(f"{path}: columns do not match the manifest")
    return FeatureMatrix(
        frame[columns].to_numpy(dtype=float),
        tuple(columns),
        manifest["extractor"],
        manifest["config_hash"],
        frame["id"].to_numpy(dtype=np.int64),
    )
