"""Window statistics over hourly series.

All functions take a block of shape (n, 24), one row per instance, and return
one value per row. Hour 24 is the most recent; a window of length ``g`` with
offset ``o`` covers hours ``24-o-g+1 .. 24-o``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..schema import HOURS

KINDS = (
    "min",
    "max",
    "mean",
    "std",
    "abs_mean",
    "abs_max",
    "quantile",
    "nonzero",
    "hours_since_nonzero",
    "count_increases",
    "count_positive",
    "ols_slope",
    "ols_intercept",
    "ols_r2",
    "last",
)


@dataclass(frozen=True)
class WindowSpec:
    length: int
    offset: int = 0

    def __post_init__(self):
        if not 1 <= self.length <= HOURS:
            raise ValueError(f"window length {self.length} outside 1..{HOURS}")
        if self.offset < 0 or self.offset + self.length > HOURS:
            raise ValueError(f"window offset {self.offset} does not fit length {self.length}")

    @property
    def stop(self) -> int:
        return HOURS - self.offset

    @property
    def start(self) -> int:
        return self.stop - self.length

    def hours(self) -> np.ndarray:
        """1-based hour indices covered by the window."""
        return np.arange(self.start + 1, self.stop + 1, dtype=float)

    def take(self, block: np.ndarray) -> np.ndarray:
        return np.asarray(block, dtype=float)[:, self.start : self.stop]

    def tag(self) -> str:
        return f"w{self.length}" if self.offset == 0 else f"w{self.length}o{self.offset}"


def _ols(w: np.ndarray, hours: np.ndarray):
    x = hours - hours.mean()
    sxx = (x**2).sum()
    ybar = w.mean(axis=1)
    if sxx == 0:
        slope = np.zeros(len(w))
    else:
        # elementwise sum keeps each row independent of the batch, unlike BLAS
        slope = ((w - ybar[:, None]) * x).sum(axis=1) / sxx
    intercept = ybar - slope * hours.mean()
    resid = w - (intercept[:, None] + slope[:, None] * hours[None, :])
    ss_tot = ((w - ybar[:, None]) ** 2).sum(axis=1)
    ss_res = (resid**2).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(np.ptp(w, axis=1) > 0, 1 - ss_res / ss_tot, 0.0)
    return slope, intercept, r2


def window_stats(block, spec: WindowSpec, kind: str, q: float | None = None) -> np.ndarray:
    """Statistic ``kind`` of every row of ``block`` over the window ``spec``.

    Conventions: ``std`` is the population std; ``quantile`` interpolates
    linearly between order statistics; ``hours_since_nonzero`` is 0 when the
    last hour of the window is nonzero and equals the window length when the
    whole window is zero; ``count_increases`` compares consecutive hours
    inside the window (strictly greater); ``ols_*`` regress values on the
    1-based hour index, with ``ols_r2`` = 0 for a constant window.
    """
    w = spec.take(np.atleast_2d(block))
    if kind == "min":
        return w.min(axis=1)
    if kind == "max":
        return w.max(axis=1)
    if kind == "mean":
        return w.mean(axis=1)
    if kind == "std":
        return w.std(axis=1)
    if kind == "abs_mean":
        return np.abs(w).mean(axis=1)
    if kind == "abs_max":
        return np.abs(w).max(axis=1)
    if kind == "quantile":
        if q is None or not 0 <= q <= 1:
            raise ValueError("quantile needs q in [0, 1]")
        return np.quantile(w, q, axis=1, method="linear")
    if kind == "nonzero":
        return (w != 0).any(axis=1).astype(float)
    if kind == "hours_since_nonzero":
        nz = w != 0
        last = spec.length - 1 - np.argmax(nz[:, ::-1], axis=1)
        return np.where(nz.any(axis=1), spec.length - 1 - last, spec.length).astype(float)
    if kind == "count_increases":
        return (np.diff(w, axis=1) > 0).sum(axis=1).astype(float)
    if kind == "count_positive":
        return (w > 0).sum(axis=1).astype(float)
    if kind in ("ols_slope", "ols_intercept", "ols_r2"):
        slope, intercept, r2 = _ols(w, spec.hours())
        return {"ols_slope": slope, "ols_intercept": intercept, "ols_r2": r2}[kind]
    if kind == "last":
        return w[:, -1].copy()
    raise ValueError(f"unknown statistic {kind!r}")


def window_stat(series, spec: WindowSpec, kind: str, q: float | None = None) -> float:
    """Scalar version of :func:`window_stats` for a single length-24 series."""
    series = np.asarray(series, dtype=float)
    if series.shape != (HOURS,):
        raise ValueError(f"series must have {HOURS} entries")
    return float(window_stats(series[None, :], spec, kind, q)[0])


def mean_energy(sum_block, count_block, spec: WindowSpec = WindowSpec(HOURS)) -> np.ndarray:
    """Summed energy over summed bump count in the window; 0 when no bumps."""
    total = spec.take(np.atleast_2d(sum_block)).sum(axis=1)
    count = spec.take(np.atleast_2d(count_block)).sum(axis=1)
    out = np.zeros_like(total)
    np.divide(total, count, out=out, where=count > 0)
    return out


def row_correlation(a, b) -> np.ndarray:
    """Pearson correlation between matching rows; 0 if either row is constant."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    da = a - a.mean(axis=1, keepdims=True)
    db = b - b.mean(axis=1, keepdims=True)
    denom = np.sqrt((da**2).sum(axis=1) * (db**2).sum(axis=1))
    out = np.zeros(len(a))
    varying = (np.ptp(a, axis=1) > 0) & (np.ptp(b, axis=1) > 0)
    np.divide((da * db).sum(axis=1), denom, out=out, where=varying & (denom > 0))
    return np.clip(out, -1.0, 1.0)
