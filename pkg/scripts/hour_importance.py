"""Split-count importance of each hour of the raw hourly series.

Trains boosted trees on the FS2 features (which include every raw hourly
value as its own column) and sums split counts over series for each hour,
so hour 24 is the most recent one.

    python3 scripts/hour_importance.py --out hour_importance.csv
"""
from __future__ import annotations

import argparse
import re

import numpy as np

from seismicwarn.features import ExtractorConfig, extract
from seismicwarn.learners import ClassifierSpec, feature_importance, fit
from seismicwarn.schema import HOURS
from seismicwarn.synth import SynthConfig, synth_generate

RAW = re.compile(r"^(?P<series>[a-z0-9_]+)\.(?P<hour>\d+)$")


def hour_counts(importance: dict[str, int]) -> np.ndarray:
    """Split counts per hour (index 0 is hour 1), summed over raw hourly columns."""
    counts = np.zeros(HOURS, dtype=np.int64)
    for name, c in importance.items():
        m = RAW.match(name)
        if m:
            counts[int(m["hour"]) - 1] += c
    return counts


def main(argv=None) -> np.ndarray:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--locations", type=int, default=8)
    parser.add_argument("--hours", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--trees", type=int, default=300)
    parser.add_argument("--out", help="write hour,splits CSV")
    args = parser.parse_args(argv)

    res = synth_generate(SynthConfig(n_locations=args.locations, hours=args.hours, seed=args.seed))
    X = extract(res.dataset, None, ExtractorConfig(feature_set="FS2"))
    spec = ClassifierSpec("gbt", {"n_estimators": args.trees, "max_depth": 2, "learning_rate": 0.08}, args.seed)
    counts = hour_counts(feature_importance(fit(spec, X, res.dataset.labels)))
    top = counts.max() or 1
    for h, c in enumerate(counts, start=1):
        print(f"hour {h:2d} {c:5d} {'#' * int(round(40 * c / top))}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("hour,splits\n")
            for h, c in enumerate(counts, start=1):
                fh.write(f"{h},{c}\n")
    return counts


if __name__ == "__main__":
    main()
