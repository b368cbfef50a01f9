"""Domain types for the seismic-warning data schema.

A dataset row describes one 24-hour observation window at a longwall: 13
scalar features plus 22 hourly series of length 24 (index 24 is the most
recent hour). ``Dataset`` stores records column-wise so feature extraction
can work on whole arrays; ``InstanceRecord`` is the per-row view.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

HOURS = 24
BANDS = ("e2", "e3", "e4", "e5", "e6plus")

COUNT_SERIES = tuple(f"count_{b}" for b in BANDS)
SUM_SERIES = tuple(f"sum_{b}" for b in BANDS)
GEOPHONE_SERIES = (
    "max_gactivity",
    "max_genergy",
    "avg_gactivity",
    "avg_genergy",
    "max_difference_in_gactivity",
    "max_difference_in_genergy",
    "avg_difference_in_gactivity",
    "avg_difference_in_genergy",
)
SERIES_NAMES = (
    COUNT_SERIES
    + SUM_SERIES
    + (
        "total_number_of_bumps",
        "number_of_rock_bursts",
        "number_of_destressing_blasts",
        "highest_bump_energy",
    )
    + GEOPHONE_SERIES
)
SERIES_INDEX = {name: i for i, name in enumerate(SERIES_NAMES)}

INTEGER_SERIES = COUNT_SERIES + (
    "total_number_of_bumps",
    "number_of_rock_bursts",
    "number_of_destressing_blasts",
)
NONNEGATIVE_SERIES = SUM_SERIES + ("highest_bump_energy",)

ASSESSMENTS = (
    "latest_seismic_assessment",
    "latest_seismoacoustic_assessment",
    "latest_comprehensive_assessment",
    "latest_hazards_assessment",
)
GENERAL_FEATURES = (
    "total_bumps_energy",
    "total_tremors_energy",
    "total_destressing_blasts_energy",
    "total_seismic_energy",
    "latest_progress_estimation_l",
    "latest_progress_estimation_r",
    "latest_maximum_yield",
    "latest_maximum_meter",
)
NONNEGATIVE_GENERAL = GENERAL_FEATURES[:4]
SCALAR_NAMES = ("main_working_id",) + GENERAL_FEATURES + ASSESSMENTS

ASSESSMENT_LEVELS = ("a", "b", "c", "d")
GEOLOGICAL_LEVELS = ("a", "b", "c")

VALUES_PER_INSTANCE = len(SCALAR_NAMES) + len(SERIES_NAMES) * HOURS


class SchemaError(ValueError):
    """Raised when data does not fit the expected schema."""


def assessment_code(letter: str) -> int:
    """Map an assessment letter a..d to the ordinal 1..4."""
    try:
        return ASSESSMENT_LEVELS.index(letter) + 1
    except ValueError:
        raise SchemaError(f"unknown assessment category {letter!r}") from None


def assessment_letter(code: int) -> str:
    if not 1 <= code <= len(ASSESSMENT_LEVELS):
        raise SchemaError(f"assessment code {code} outside 1..4")
    return ASSESSMENT_LEVELS[code - 1]


@dataclass(frozen=True)
class Violation:
    """One broken invariant of an instance."""

    field: str
    message: str
    index: int | None = None

    def __str__(self) -> str:
        where = self.field if self.index is None else f"{self.field}[{self.index}]"
        return f"{where}: {self.message}"


@dataclass(frozen=True)
class HourlySeriesSet:
    """The 22 named hourly series of one instance.

    Series are stored as given; lengths and value ranges are checked by
    :func:`validate_instance`, not on construction.
    """

    series: Mapping[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.series[name]

    def as_array(self) -> np.ndarray:
        """Stack into a (22, 24) array in canonical series order."""
        return np.stack([np.asarray(self.series[n], dtype=float) for n in SERIES_NAMES])

    @classmethod
    def from_array(cls, values: np.ndarray) -> HourlySeriesSet:
        values = np.asarray(values, dtype=float)
        return cls({name: values[i] for i, name in enumerate(SERIES_NAMES)})


@dataclass(frozen=True)
class ScalarFeatures:
    main_working_id: int
    general: Mapping[str, float]
    assessments: Mapping[str, str]

    def values(self) -> list[float]:
        """The 13 scalars as numbers (assessments as ordinals)."""
        out = [float(self.main_working_id)]
        out += [float(self.general[n]) for n in GENERAL_FEATURES]
        out += [float(assessment_code(self.assessments[n])) for n in ASSESSMENTS]
        return out


@dataclass(frozen=True)
class LocationMetadata:
    main_working_id: int
    main_working_name: str
    region_name: str
    bed_name: str
    main_working_type: str
    main_working_height: float
    geological_assessment: str


def remap_geological_assessment(meta: LocationMetadata) -> LocationMetadata:
    """Collapse the rare high geological assessments onto ``b``.

    ``c`` and ``d`` both become ``b``; ``a`` and ``b`` are kept.
    """
    level = meta.geological_assessment
    if level not in ASSESSMENT_LEVELS:
        raise SchemaError(
            f"location {meta.main_working_id}: unknown geological assessment {level!r}"
        )
    if level in ("c", "d"):
        return replace(meta, geological_assessment="b")
    return meta


@dataclass(frozen=True)
class InstanceRecord:
    instance_id: int
    location_id: int
    scalars: ScalarFeatures
    hourly: HourlySeriesSet
    label: int | None = None
    chrono: int | None = None


def validate_instance(record: InstanceRecord) -> list[Violation]:
    """Return every invariant violation of ``record``; empty means valid."""
    report: list[Violation] = []
    for name in SERIES_NAMES:
        if name not in record.hourly.series:
            report.append(Violation(name, "series missing"))
            continue
        values = np.asarray(record.hourly[name], dtype=float)
        if values.shape != (HOURS,):
            report.append(
                Violation(name, f"expected {HOURS} entries, got {values.size}")
            )
            continue
        for i in np.flatnonzero(~np.isfinite(values)):
            report.append(Violation(name, "non-finite value", int(i)))
        if name in INTEGER_SERIES:
            bad = np.flatnonzero((values < 0) | (values != np.round(values)))
            for i in bad:
                report.append(
                    Violation(name, f"expected non-negative integer, got {values[i]!r}", int(i))
                )
        elif name in NONNEGATIVE_SERIES:
            for i in np.flatnonzero(values < 0):
                report.append(Violation(name, f"negative value {values[i]!r}", int(i)))
    for name in GENERAL_FEATURES:
        value = record.scalars.general.get(name)
        if value is None or not np.isfinite(value):
            report.append(Violation(name, "missing or non-finite"))
        elif name in NONNEGATIVE_GENERAL and value < 0:
            report.append(Violation(name, f"negative energy {value!r}"))
    for name in ASSESSMENTS:
        letter = record.scalars.assessments.get(name)
        if letter not in ASSESSMENT_LEVELS:
            report.append(Violation(name, f"assessment {letter!r} not in a..d"))
    if record.label is not None and record.label not in (0, 1):
        report.append(Violation("label", f"label {record.label!r} not in {{0, 1}}"))
    return report


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-wise collection of instance records.

    Attributes
    ----------
    ids, locations, chrono : (n,) int64
    general : (n, 8) float64, columns as ``GENERAL_FEATURES``
    assessments : (n, 4) int64 ordinals 1..4, columns as ``ASSESSMENTS``
    main_working_id : (n,) int64
    hourly : (n, 22, 24) float64, series as ``SERIES_NAMES``
    labels : (n,) int64 or None for unlabeled data
    mode : ``"contiguous"`` (hourly-shifted training windows) or
        ``"independent"`` (sampled windows)
    """

    ids: np.ndarray
    locations: np.ndarray
    chrono: np.ndarray
    general: np.ndarray
    assessments: np.ndarray
    main_working_id: np.ndarray
    hourly: np.ndarray
    labels: np.ndarray | None = None
    mode: str = "contiguous"
    _groups: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.ids)
        shapes = {
            "locations": (n,),
            "chrono": (n,),
            "general": (n, len(GENERAL_FEATURES)),
            "assessments": (n, len(ASSESSMENTS)),
            "main_working_id": (n,),
            "hourly": (n, len(SERIES_NAMES), HOURS),
        }
        if self.labels is not None:
            shapes["labels"] = (n,)
        for name, shape in shapes.items():
            if np.shape(getattr(self, name)) != shape:
                raise SchemaError(
                    f"{name} has shape {np.shape(getattr(self, name))}, expected {shape}"
                )
        if self.mode not in ("contiguous", "independent"):
            raise SchemaError(f"unknown dataset mode {self.mode!r}")
        for name, dtype in (
            ("ids", np.int64),
            ("locations", np.int64),
            ("chrono", np.int64),
            ("general", np.float64),
            ("assessments", np.int64),
            ("main_working_id", np.int64),
            ("hourly", np.float64),
        ):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), dtype=dtype)))
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if not np.isin(labels, (0, 1)).all():
                raise SchemaError("labels must be 0 or 1")
            object.__setattr__(self, "labels", _frozen(labels))
        if len(np.unique(self.ids)) != n:
            raise SchemaError("instance ids are not unique")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    def series(self, name: str) -> np.ndarray:
        """All rows of one hourly series, shape (n, 24)."""
        return self.hourly[:, SERIES_INDEX[name], :]

    def scalar(self, name: str) -> np.ndarray:
        if name == "main_working_id":
            return self.main_working_id.astype(float)
        if name in GENERAL_FEATURES:
            return self.general[:, GENERAL_FEATURES.index(name)]
        if name in ASSESSMENTS:
            return self.assessments[:, ASSESSMENTS.index(name)].astype(float)
        raise KeyError(name)

    def groups(self) -> dict[int, np.ndarray]:
        """Row indices per location, each sorted by chronological index."""
        if self._groups is None:
            out = {}
            for loc in np.unique(self.locations):
                idx = np.flatnonzero(self.locations == loc)
                out[int(loc)] = idx[np.argsort(self.chrono[idx], kind="stable")]
            object.__setattr__(self, "_groups", out)
        return self._groups

    def subset(self, index: Sequence[int] | np.ndarray) -> Dataset:
        index = np.asarray(index, dtype=np.int64)
        return Dataset(
            ids=self.ids[index],
            locations=self.locations[index],
            chrono=self.chrono[index],
            general=self.general[index],
            assessments=self.assessments[index],
            main_working_id=self.main_working_id[index],
            hourly=self.hourly[index],
            labels=None if self.labels is None else self.labels[index],
            mode=self.mode,
        )

    def with_labels(self, labels: np.ndarray | None) -> Dataset:
        return replace(self, labels=labels, _groups=None)

    def __getitem__(self, i: int) -> InstanceRecord:
        scalars = ScalarFeatures(
            main_working_id=int(self.main_working_id[i]),
            general={n: float(v) for n, v in zip(GENERAL_FEATURES, self.general[i])},
            assessments={
                n: assessment_letter(int(c)) for n, c in zip(ASSESSMENTS, self.assessments[i])
            },
        )
        return InstanceRecord(
            instance_id=int(self.ids[i]),
            location_id=int(self.locations[i]),
            scalars=scalars,
            hourly=HourlySeriesSet.from_array(self.hourly[i]),
            label=None if self.labels is None else int(self.labels[i]),
            chrono=int(self.chrono[i]),
        )

    def __iter__(self) -> Iterator[InstanceRecord]:
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def from_records(
        cls, records: Iterable[InstanceRecord], mode: str = "contiguous"
    ) -> Dataset:
        records = list(records)
        if not records:
            raise SchemaError("cannot build a dataset from zero records")
        labeled = [r.label is not None for r in records]
        if any(labeled) and not all(labeled):
            raise SchemaError("either every record carries a label or none does")
        chrono = []
        seen: dict[int, int] = {}
        for r in records:
            if r.chrono is None:
                # file order within a location
                seen[r.location_id] = seen.get(r.location_id, -1) + 1
                chrono.append(seen[r.location_id])
            else:
                chrono.append(r.chrono)
        return cls(
            ids=[r.instance_id for r in records],
            locations=[r.location_id for r in records],
            chrono=chrono,
            general=[[r.scalars.general[n] for n in GENERAL_FEATURES] for r in records],
            assessments=[
                [assessment_code(r.scalars.assessments[n]) for n in ASSESSMENTS]
                for r in records
            ],
            main_working_id=[r.scalars.main_working_id for r in records],
            hourly=np.stack([r.hourly.as_array() for r in records]),
            labels=[r.label for r in records] if all(labeled) else None,
            mode=mode,
        )

    def check(self) -> list[str]:
        """Dataset-level invariants: chronology and contiguity per location."""
        problems = []
        for loc, idx in self.groups().items():
            steps = np.diff(self.chrono[idx])
            if (steps <= 0).any():
                problems.append(f"location {loc}: chronological indices not strictly increasing")
            elif self.mode == "contiguous" and (steps != 1).any():
                problems.append(f"location {loc}: contiguous records must differ by one step")
        return problems


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Named numeric feature columns, the only input learners see."""

    values: np.ndarray
    columns: tuple[str, ...]
    extractor: str = "custom"
    config_hash: str = ""
    ids: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise SchemaError(
                f"values of shape {values.shape} do not match {len(self.columns)} columns"
            )
        if len(set(self.columns)) != len(self.columns):
            raise SchemaError("feature column names are not unique")
        if not np.isfinite(values).all():
            raise SchemaError("feature matrix contains missing or non-finite values")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "columns", tuple(self.columns))
        if self.ids is not None:
            object.__setattr__(self, "ids", _frozen(np.asarray(self.ids, dtype=np.int64)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __len__(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def rows(self, index) -> FeatureMatrix:
        index = np.asarray(index, dtype=np.int64)
        return replace(
            self,
            values=self.values[index],
            ids=None if self.ids is None else self.ids[index],
        )

    def select(self, names: Sequence[str]) -> FeatureMatrix:
        pos = [self.columns.index(n) for n in names]
        return replace(self, values=self.values[:, pos], columns=tuple(names))

    def hstack(self, other: FeatureMatrix) -> FeatureMatrix:
        return replace(
            self,
            values=np.hstack([self.values, other.values]),
            columns=self.columns + other.columns,
        )


def check_scores(scores, n: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-d float score vector of optional length ``n``."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise ValueError("score vector must be one-dimensional")
    if not np.isfinite(scores).all():
        raise ValueError("score vector contains non-finite values")
    if n is not None and len(scores) != n:
        raise ValueError(f"score vector has length {len(scores)}, expected {n}")
    return scores
