"""Schema-identical synthetic data with known ground truth.

Each location gets an hourly stream. A latent log-intensity follows a
stationary AR(1) process; bump counts per energy band are Poisson with rate
``band_rate * activity * exp(latent)`` and bump energies are log-uniform
inside the band. All bump-derived series are exact aggregates of the event
list, so labels can be recomputed by brute force from ``events``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import pandas as pd

from .io import write_dataset_csv, write_metadata_csv
from .schema import (
    BANDS,
    SERIES_INDEX,
    SERIES_NAMES,
    Dataset,
    LocationMetadata,
    remap_geological_assessment,
)

# band e6plus has no upper bound in the data; energies are drawn up to 1e7 J
BAND_EDGES = ((1e1, 1e2), (1e2, 1e3), (1e3, 1e4), (1e4, 1e5), (1e5, 1e7))


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic generator.

    ``band_rates`` are hourly Poisson rates per band (e2..e6plus) for a
    location of activity 1. ``activity`` scales them per location; by default
    activities are log-spaced from ``activity_range[0]`` to
    ``activity_range[1]``. ``rates`` overrides both with explicit per-location
    band rates.
    """

    n_locations: int = 8
    hours: int = 2000
    band_rates: tuple = (2.0, 0.6, 0.15, 0.03, 0.01)
    activity: tuple | None = None
    activity_range: tuple = (0.002, 1.0)
    rates: tuple | None = None
    location_ids: tuple | None = None
    persistence: float = 0.97
    volatility: float = 1.0
    blast_rate: float = 0.05
    rock_burst_energy: float = 1e6
    geophone_noise: float = 0.3
    threshold: float = 50_000.0
    horizon: int = 8
    window: int = 24
    seed: int = 0

    def __post_init__(self):
        for name in ("band_rates", "activity", "activity_range", "rates", "location_ids"):
            value = getattr(self, name)
            if value is not None:
                if name == "rates":
                    value = tuple(tuple(float(r) for r in row) for row in value)
                else:
                    value = tuple(value)
                object.__setattr__(self, name, value)
        if self.n_locations < 1:
            raise ValueError("n_locations must be at least 1")
        if self.window != 24:
            raise ValueError("the record schema fixes the window at 24 hours")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.window + self.horizon > self.hours:
            raise ValueError(
                f"stream of {self.hours} hours cannot host a {self.window}h window "
                f"plus {self.horizon}h horizon"
            )
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if len(self.band_rates) != len(BANDS) or min(self.band_rates) < 0:
            raise ValueError("band_rates needs 5 non-negative rates")
        if self.activity is not None:
            if len(self.activity) != self.n_locations or min(self.activity) < 0:
                raise ValueError("activity needs one non-negative value per location")
        if self.rates is not None:
            if len(self.rates) != self.n_locations:
                raise ValueError("rates needs one row per location")
            for row in self.rates:
                if len(row) != len(BANDS) or min(row) < 0:
                    raise ValueError("each rates row needs 5 non-negative rates")
        if self.location_ids is not None:
            if len(self.location_ids) != self.n_locations or len(set(self.location_ids)) != self.n_locations:
                raise ValueError("location_ids needs one unique id per location")
        if not 0 <= self.persistence < 1:
            raise ValueError("persistence must be in [0, 1)")
        if self.volatility < 0 or self.geophone_noise < 0 or self.blast_rate < 0:
            raise ValueError("volatility, geophone_noise and blast_rate must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> SynthConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown synth config key(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def ids(self) -> tuple[int, ...]:
        if self.location_ids is not None:
            return tuple(int(i) for i in self.location_ids)
        return tuple(range(101, 101 + self.n_locations))

    def location_rates(self) -> np.ndarray:
        """Band rates per location, shape (n_locations, 5)."""
        if self.rates is not None:
            return np.array(self.rates, dtype=float)
        if self.activity is not None:
            act = np.array(self.activity, dtype=float)
        elif self.n_locations == 1:
            act = np.array([self.activity_range[1]], dtype=float)
        else:
            act = np.geomspace(*self.activity_range, self.n_locations)
        return act[:, None] * np.array(self.band_rates)[None, :]


@dataclass(frozen=True)
class SynthResult:
    dataset: Dataset
    metadata: dict[int, LocationMetadata]
    events: pd.DataFrame
    config: SynthConfig


def _ar1(rng, n, phi, sigma):
    eps = rng.standard_normal(n)
    z = np.empty(n)
    z[0] = sigma * eps[0]
    scale = sigma * np.sqrt(1 - phi**2)
    for t in range(1, n):
        z[t] = phi * z[t - 1] + scale * eps[t]
    return z


def _simulate_location(config: SynthConfig, loc: int, rates: np.ndarray):
    rng = np.random.default_rng([config.seed, loc])
    T = config.hours
    z = _ar1(rng, T, config.persistence, config.volatility)
    intensity = np.exp(z - config.volatility**2 / 2)

    counts = rng.poisson(rates[None, :] * intensity[:, None])  # (T, 5)
    hour_of = np.repeat(np.tile(np.arange(T), len(BANDS)), counts.T.ravel())
    band_of = np.repeat(np.repeat(np.arange(len(BANDS)), T), counts.T.ravel())
    lo = np.log10([BAND_EDGES[b][0] for b in band_of]) if len(band_of) else np.zeros(0)
    hi = np.log10([BAND_EDGES[b][1] for b in band_of]) if len(band_of) else np.zeros(0)
    energy = 10 ** rng.uniform(lo, hi)
    order = np.lexsort((band_of, hour_of))
    hour_of, band_of, energy = hour_of[order], band_of[order], energy[order]

    sums = np.zeros((T, len(BANDS)))
    np.add.at(sums, (hour_of, band_of), energy)
    highest = np.zeros(T)
    np.maximum.at(highest, hour_of, energy)
    bursts = np.bincount(hour_of[energy >= config.rock_burst_energy], minlength=T)
    hourly_energy = sums.sum(axis=1)

    blasts = rng.poisson(config.blast_rate, T)
    blast_energy = np.zeros(T)
    for t in np.flatnonzero(blasts):
        blast_energy[t] = (10 ** rng.uniform(3, 5, blasts[t])).sum()

    # geophones respond to the latent intensity and to realised energy
    level = 0.2 + rates.sum() * intensity
    noise = config.geophone_noise
    avg_gact = 40 * np.sqrt(level) * np.exp(noise * rng.standard_normal(T))
    avg_gene = 1500 * level * (1 + 0.1 * np.log1p(hourly_energy)) * np.exp(
        noise * rng.standard_normal(T)
    )
    max_gact = avg_gact * (1.5 + np.abs(rng.normal(0, 0.5, T)))
    max_gene = avg_gene * (1.5 + np.abs(rng.normal(0, 0.5, T)))

    def pct_change(x):
        prev = np.concatenate([[x[0]], x[:-1]])
        return np.round(100 * (x / prev - 1))

    avg_dgact = pct_change(avg_gact)
    avg_dgene = pct_change(avg_gene)
    max_dgact = avg_dgact + np.round(np.abs(rng.normal(0, 20, T)))
    max_dgene = avg_dgene + np.round(np.abs(rng.normal(0, 20, T)))

    stream = np.zeros((T, len(SERIES_NAMES)))
    stream[:, 0:5] = counts
    stream[:, 5:10] = sums
    stream[:, SERIES_INDEX["total_number_of_bumps"]] = counts.sum(axis=1)
    stream[:, SERIES_INDEX["number_of_rock_bursts"]] = bursts
    stream[:, SERIES_INDEX["number_of_destressing_blasts"]] = blasts
    stream[:, SERIES_INDEX["highest_bump_energy"]] = highest
    for name, values in (
        ("max_gactivity", max_gact),
        ("max_genergy", max_gene),
        ("avg_gactivity", avg_gact),
        ("avg_genergy", avg_gene),
        ("max_difference_in_gactivity", max_dgact),
        ("max_difference_in_genergy", max_dgene),
        ("avg_difference_in_gactivity", avg_dgact),
        ("avg_difference_in_genergy", avg_dgene),
    ):
        stream[:, SERIES_INDEX[name]] = values

    W, H = config.window, config.horizon
    n = T - W - H + 1
    starts = np.arange(n)
    windows = np.lib.stride_tricks.sliding_window_view(stream, W, axis=0)[:n]  # (n, 22, W)

    csum = np.concatenate([[0.0], np.cumsum(hourly_energy)])
    future = csum[starts + W + H] - csum[starts + W]
    labels = (future > config.threshold).astype(np.int64)

    def window_sum(x):
        c = np.concatenate([[0.0], np.cumsum(x)])
        return c[starts + W] - c[starts]

    bumps_e = window_sum(hourly_energy)
    tremors_e = window_sum(sums[:, 3:].sum(axis=1))
    blasts_e = window_sum(blast_energy)
    progress_l = np.abs(3 + _ar1(rng, T, 0.999, 1.0))
    progress_r = np.abs(progress_l + 0.3 * rng.standard_normal(T))
    max_yield = np.abs(40 + _ar1(rng, T, 0.99, 10.0))
    max_meter = np.abs(10 + _ar1(rng, T, 0.99, 3.0))
    last = starts + W - 1
    general = np.column_stack(
        [
            bumps_e,
            tremors_e,
            blasts_e,
            bumps_e + blasts_e,
            np.round(progress_l[last], 1),
            np.round(progress_r[last], 1),
            np.round(max_yield[last], 1),
            np.round(max_meter[last], 1),
        ]
    )

    seismic = 1 + np.searchsorted([1e4, 1e5, 1e6], bumps_e, side="right")
    acoustic = 1 + np.searchsorted(
        [60.0, 120.0, 200.0], window_sum(avg_gact) / W, side="right"
    )
    comprehensive = np.maximum(seismic, acoustic)
    geo = "a" if rates.sum() < 0.5 else ("b" if rng.random() < 0.8 else "c")
    hazards = np.maximum(comprehensive, 1 + "abc".index(geo))
    assessments = np.column_stack([seismic, acoustic, comprehensive, hazards])

    meta = remap_geological_assessment(
        LocationMetadata(
            main_working_id=loc,
            main_working_name=f"LW-{loc}",
            region_name=f"region-{loc % 3}",
            bed_name=f"bed-{loc % 5}",
            main_working_type="longwall",
            main_working_height=float(np.round(rng.uniform(1.5, 4.0), 1)),
            geological_assessment=geo,
        )
    )
    events = pd.DataFrame({"location": loc, "hour": hour_of, "energy": energy})
    return windows, general, assessments, labels, starts, meta, events


def synth_generate(config: SynthConfig) -> SynthResult:
    """Simulate every location and cut its stream into labeled 24-hour windows.

    Record ``k`` of a location covers stream hours ``k .. k+23`` (chrono
    index ``k``); its label is 1 iff the bump energy over hours
    ``k+24 .. k+31`` exceeds ``config.threshold``.
    """
    rates = config.location_rates()
    parts = []
    metadata = {}
    events = []
    for loc, loc_rates in zip(config.ids(), rates):
        out = _simulate_location(config, loc, loc_rates)
        parts.append((loc, *out[:5]))
        metadata[loc] = out[5]
        events.append(out[6])

    ids, locations, chrono, hourly, general, assessments, labels = [], [], [], [], [], [], []
    next_id = 1
    for loc, windows, gen, ass, lab, starts in parts:
        n = len(starts)
        ids.append(np.arange(next_id, next_id + n))
        next_id += n
        locations.append(np.full(n, loc))
        chrono.append(starts)
        hourly.append(windows)
        general.append(gen)
        assessments.append(ass)
        labels.append(lab)
    locations = np.concatenate(locations)
    dataset = Dataset(
        ids=np.concatenate(ids),
        locations=locations,
        chrono=np.concatenate(chrono),
        general=np.concatenate(general),
        assessments=np.concatenate(assessments),
        main_working_id=locations,
        hourly=np.concatenate(hourly),
        labels=np.concatenate(labels),
        mode="contiguous",
    )
    events = pd.concat(events, ignore_index=True)
    events["hour"] = events["hour"].astype(np.int64)
    return SynthResult(dataset, metadata, events, config)


def brute_force_labels(
    events: pd.DataFrame, dataset: Dataset, window: int = 24, horizon: int = 8, threshold: float = 50_000.0
) -> np.ndarray:
    """Recompute labels by summing event energies in each forecast horizon."""
    out = np.zeros(len(dataset), dtype=np.int64)
    by_loc = {loc: g for loc, g in events.groupby("location")}
    for i in range(len(dataset)):
        g = by_loc.get(int(dataset.locations[i]))
        if g is None:
            continue
        k = int(dataset.chrono[i])
        hours = g["hour"].to_numpy()
        mask = (hours >= k + window) & (hours < k + window + horizon)
        out[i] = int(g["energy"].to_numpy()[mask].sum() > threshold)
    return out


def read_events(path) -> pd.DataFrame:
    events = pd.read_csv(path, dtype={"location": np.int64, "hour": np.int64}, float_precision="round_trip")
    if list(events.columns) != ["location", "hour", "energy"]:
        raise ValueError(f"{path}: expected columns location,hour,energy")
    return events


def write_synth(result: SynthResult, outdir) -> dict[str, Path]:
    """Write dataset, metadata, event stream and manifest into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "dataset": outdir / "dataset.csv",
        "metadata": outdir / "metadata.csv",
        "events": outdir / "events.csv",
        "manifest": outdir / "manifest.json",
    }
    write_dataset_csv(result.dataset, paths["dataset"])
    write_metadata_csv(result.metadata, paths["metadata"])
    result.events.to_csv(paths["events"], index=False, lineterminator="\n")
    manifest = {
        "generator": "seismicwarn.synth",
        "config": result.config.to_dict(),
        "seed": result.config.seed,
        "instances": len(result.dataset),
        "events": len(result.events),
        "files": {k: p.name for k, p in paths.items() if k != "manifest"},
    }
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths

