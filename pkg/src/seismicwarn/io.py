"""Reading and writing the competition-style CSV files.

Column order is driven by a layout (list of column names). The default
layout is ``id, location, chrono``, the 13 scalars, the 22 hourly series as
``<series>.<hour>`` for hours 1..24, and ``label`` when labeled. Parsing maps
columns by name, so files with a permuted column order read the same.
"""
from __future__ import annotations

import io
from pathlib import Path
from typing import IO, Sequence

import numpy as np
import pandas as pd

from .schema import (
    ASSESSMENTS,
    GENERAL_FEATURES,
    HOURS,
    INTEGER_SERIES,
    SERIES_NAMES,
    Dataset,
    LocationMetadata,
    SchemaError,
    assessment_letter,
    remap_geological_assessment,
)

METADATA_COLUMNS = (
    "main_working_id",
    "main_working_name",
    "region_name",
    "bed_name",
    "main_working_type",
    "main_working_height",
    "geological_assessment",
)


class ParseError(SchemaError):
    """A cell that could not be parsed; ``row`` is 1-based, excluding the header."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


def hourly_columns() -> list[str]:
    return [f"{name}.{h}" for name in SERIES_NAMES for h in range(1, HOURS + 1)]


def default_layout(labeled: bool = True, chrono: bool = True) -> list[str]:
    cols = ["id", "location"]
    if chrono:
        cols.append("chrono")
    cols += ["main_working_id", *GENERAL_FEATURES, *ASSESSMENTS]
    cols += hourly_columns()
    if labeled:
        cols.append("label")
    return cols


def _read_frame(source) -> pd.DataFrame:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    return pd.read_csv(source, dtype=str, keep_default_na=False, encoding="utf-8")


def _numeric(frame: pd.DataFrame, columns: Sequence[str], dtype=float) -> np.ndarray:
    block = frame.loc[:, list(columns)].to_numpy()
    try:
        out = block.astype(float)
    except ValueError:
        out = None
    if out is None or not np.isfinite(out).all():
        for j, col in enumerate(columns):
            for i, cell in enumerate(block[:, j]):
                try:
                    ok = np.isfinite(float(cell))
                except ValueError:
                    ok = False
                if not ok:
                    raise ParseError(
                        f"non-numeric cell {cell!r} at row {i + 1}, column {col!r}",
                        row=i + 1,
                        column=col,
                    )
    if dtype is int:
        whole = out == np.round(out)
        if not whole.all():
            i, j = np.argwhere(~whole)[0]
            raise ParseError(
                f"expected integer at row {i + 1}, column {columns[j]!r}",
                row=int(i) + 1,
                column=columns[j],
            )
        return out.astype(np.int64)
    return out


def parse_dataset_csv(
    source: str | Path | IO[bytes] | bytes,
    layout: Sequence[str] | None = None,
    labeled: bool = True,
    mode: str | None = None,
) -> Dataset:
    """Parse a dataset CSV.

    ``layout`` lists the columns the file must carry (default:
    :func:`default_layout`). A missing ``chrono`` column is tolerated: the
    chronological index is then the row order within each location.
    ``mode`` defaults to ``contiguous`` for labeled and ``independent`` for
    unlabeled files.
    """
    frame = _read_frame(source)
    required = list(layout) if layout is not None else default_layout(labeled)
    has_chrono = "chrono" in frame.columns
    if not has_chrono and "chrono" in required:
        required.remove("chrono")
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}")
    if len(frame) == 0:
        raise SchemaError("dataset file has no rows")

    ids = _numeric(frame, ["id"], int)[:, 0]
    locations = _numeric(frame, ["location"], int)[:, 0]
    if has_chrono:
        chrono = _numeric(frame, ["chrono"], int)[:, 0]
    else:
        chrono = np.zeros(len(frame), dtype=np.int64)
        for loc in np.unique(locations):
            idx = np.flatnonzero(locations == loc)
            chrono[idx] = np.arange(len(idx))
    general = _numeric(frame, GENERAL_FEATURES)
    main_id = _numeric(frame, ["main_working_id"], int)[:, 0]

    assessments = np.zeros((len(frame), len(ASSESSMENTS)), dtype=np.int64)
    for j, col in enumerate(ASSESSMENTS):
        for i, letter in enumerate(frame[col].to_numpy()):
            if letter not in ("a", "b", "c", "d"):
                raise ParseError(
                    f"unknown assessment letter {letter!r} at row {i + 1}, column {col!r}",
                    row=i + 1,
                    column=col,
                )
        assessments[:, j] = frame[col].map({"a": 1, "b": 2, "c": 3, "d": 4}).to_numpy()

    hcols = hourly_columns()
    hourly = _numeric(frame, hcols).reshape(len(frame), len(SERIES_NAMES), HOURS)
    for s, name in enumerate(SERIES_NAMES):
        block = hourly[:, s, :]
        if name in INTEGER_SERIES:
            bad = (block < 0) | (block != np.round(block))
        elif name.startswith("sum_") or name == "highest_bump_energy":
            bad = block < 0
        else:
            continue
        if bad.any():
            i, h = np.argwhere(bad)[0]
            raise ParseError(
                f"invalid value {block[i, h]!r} at row {i + 1}, column '{name}.{h + 1}'",
                row=int(i) + 1,
                column=f"{name}.{h + 1}",
            )

    labels = None
    if labeled:
        labels = _numeric(frame, ["label"], int)[:, 0]
        bad = ~np.isin(labels, (0, 1))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ParseError(f"label must be 0 or 1 at row {i + 1}", row=i + 1, column="label")

    dataset = Dataset(
        ids=ids,
        locations=locations,
        chrono=chrono,
        general=general,
        assessments=assessments,
        main_working_id=main_id,
        hourly=hourly,
        labels=labels,
        mode=mode or ("contiguous" if labeled else "independent"),
    )
    problems = dataset.check()
    if problems:
        raise SchemaError("; ".join(problems))
    return dataset


def parse_labeled_csv(source, layout: Sequence[str] | None = None) -> Dataset:
    return parse_dataset_csv(source, layout=layout, labeled=True)


def dataset_frame(dataset: Dataset, layout: Sequence[str] | None = None) -> pd.DataFrame:
    data: dict[str, np.ndarray] = {
        "id": dataset.ids,
        "location": dataset.locations,
        "chrono": dataset.chrono,
        "main_working_id": dataset.main_working_id,
    }
    for j, name in enumerate(GENERAL_FEATURES):
        data[name] = dataset.general[:, j]
    for j, name in enumerate(ASSESSMENTS):
        data[name] = np.array([assessment_letter(int(c)) for c in dataset.assessments[:, j]])
    for s, name in enumerate(SERIES_NAMES):
        block = dataset.hourly[:, s, :]
        if name in INTEGER_SERIES:
            block = block.astype(np.int64)
        for h in range(HOURS):
            data[f"{name}.{h + 1}"] = block[:, h]
    if dataset.labels is not None:
        data["label"] = dataset.labels
    cols = list(layout) if layout is not None else default_layout(dataset.labeled)
    return pd.DataFrame(data, columns=cols)


def write_dataset_csv(dataset: Dataset, path, layout: Sequence[str] | None = None) -> None:
    dataset_frame(dataset, layout).to_csv(path, index=False, lineterminator="\n")


def parse_metadata_csv(source) -> dict[int, LocationMetadata]:
    """Parse the per-location metadata file, applying the assessment remap."""
    frame = _read_frame(source)
    missing = [c for c in METADATA_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"missing metadata column(s): {', '.join(missing)}")
    ids = _numeric(frame, ["main_working_id"], int)[:, 0]
    heights = _numeric(frame, ["main_working_height"])[:, 0]
    out: dict[int, LocationMetadata] = {}
    for i, row in enumerate(frame.itertuples(index=False)):
        loc = int(ids[i])
        if loc in out:
            raise SchemaError(f"duplicate metadata for location {loc}")
        if heights[i] <= 0:
            raise SchemaError(
                f"location {loc}: main_working_height must be positive, got {heights[i]!r}"
            )
        meta = LocationMetadata(
            main_working_id=loc,
            main_working_name=row.main_working_name,
            region_name=row.region_name,
            bed_name=row.bed_name,
            main_working_type=row.main_working_type,
            main_working_height=float(heights[i]),
            geological_assessment=row.geological_assessment,
        )
        out[loc] = remap_geological_assessment(meta)
    return out


def write_metadata_csv(metadata: dict[int, LocationMetadata], path) -> None:
    rows = [
        [getattr(metadata[k], c) for c in METADATA_COLUMNS] for k in sorted(metadata)
    ]
    pd.DataFrame(rows, columns=list(METADATA_COLUMNS)).to_csv(
        path, index=False, lineterminator="\n"
    )


def read_labels(path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``(ids, labels)`` from any CSV carrying ``id`` and ``label`` columns."""
    frame = pd.read_csv(path, usecols=["id", "label"], dtype=str, keep_default_na=False)
    return _numeric(frame, ["id"], int)[:, 0], _numeric(frame, ["label"], int)[:, 0]


def read_scores(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column ``id,score`` file."""
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(frame.columns) != ["id", "score"]:
        raise SchemaError(f"{path}: expected columns id,score, got {list(frame.columns)}")
    return _numeric(frame, ["id"], int)[:, 0], _numeric(frame, ["score"])[:, 0]


def write_scores(ids, scores, path) -> None:
    pd.DataFrame({"id": np.asarray(ids, dtype=np.int64), "score": np.asarray(scores, dtype=float)}).to_csv(
        path, index=False, lineterminator="\n"
    )
