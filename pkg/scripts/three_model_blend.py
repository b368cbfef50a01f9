"""Three-model pipeline with a weighted rank-average blend.

The synthetic roster is split like a competition: a few whole locations
plus the last part of every other location form the test set.

* model 1: FS1 features, boosted trees and extra trees, rank-averaged;
  optionally a blend over the best random feature subsets.
* model 2: shrinkage LDA on FS2, L1 logistic regression and weighted extra
  trees on FS3, blended after scaling each to unit standard deviation.
* model 3: FS4 features, extra trees, boosted trees and logistic
  regression, rank-averaged.

The final score rank-averages models 1, 2 and 3 with weights 1, 3 and 2.
``--scale`` multiplies every ensemble size (1.0 uses the full sizes).

    python3 scripts/three_model_blend.py --scale 0.05
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from seismicwarn.ensemble import blend_standardized, rank_average
from seismicwarn.evaluation import ProtocolConfig, trts2_split
from seismicwarn.features import ExtractorConfig, extract
from seismicwarn.learners import ClassifierSpec, fit, predict_score
from seismicwarn.learners.search import random_subset_search
from seismicwarn.metrics import auc_rank, metrics_report
from seismicwarn.synth import SynthConfig, synth_generate


def competition_split(dataset, n_test_locations, test_frac, seed):
    """Whole held-out locations plus the chronological tail of the others."""
    rng = np.random.default_rng(seed)
    groups = dataset.groups()
    held = set(rng.choice(sorted(groups), n_test_locations, replace=False).tolist())
    train, test = [], []
    for loc, rows in groups.items():
        if loc in held:
            test.append(rows)
        else:
            cut = int(np.floor((1 - test_frac) * len(rows)))
            train.append(rows[:cut])
            test.append(rows[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def features(dataset, metadata, train, test, feature_set):
    cfg = ExtractorConfig(feature_set=feature_set)
    tr = extract(dataset.subset(train), metadata, cfg)
    # FS3 prunes columns, so the test side reuses the training columns
    te = extract(dataset.subset(test), metadata, cfg, keep=tr.columns if feature_set == "FS3" else None)
    return tr, te


def scores(spec, Xtr, ytr, Xte):
    return predict_score(fit(spec, Xtr, ytr), Xte)


def model_1(data, ytr, scale, trials, seed):
    Xtr, Xte = data["FS1"]
    gbt = ClassifierSpec("gbt", {"n_estimators": 100, "max_depth": 2, "learning_rate": 0.08}, seed)
    etc = ClassifierSpec("etc", {"n_estimators": max(10, int(10_000 * scale)), "max_depth": 7, "criterion": "entropy"}, seed)
    parts = [scores(gbt, Xtr, ytr, Xte), scores(etc, Xtr, ytr, Xte)]
    if trials:
        config = ProtocolConfig(protocol="trts2", excluded=(), tse_filter=(), sides={}, holdout=2, repeats=3)
        plan = trts2_split(data["train_dataset"], config, seed)
        best = random_subset_search(Xtr, None, gbt, ytr, plan, trials, seed, base_bounds=(20, 40))
        top = best[: max(1, min(20, trials // 5))]
        parts.append(rank_average([scores(gbt, Xtr.select(r.columns), ytr, Xte.select(r.columns)) for r in top]))
    return rank_average(parts)


def model_2(data, ytr, scale, seed):
    (f2tr, f2te), (f3tr, f3te) = data["FS2"], data["FS3"]
    lda = ClassifierSpec("lda", {"shrinkage": "auto"})
    lr = ClassifierSpec("logreg", {"penalty": "l1", "C": 0.003})
    etc = ClassifierSpec(
        "etc",
        {"n_estimators": max(10, int(1000 * scale)), "max_depth": 3, "max_features": min(200, f3tr.shape[1]),
         "min_samples_split": 3, "class_weight": 10},
        seed,
    )
    return blend_standardized(
        [scores(lda, f2tr, ytr, f2te), scores(lr, f3tr, ytr, f3te), scores(etc, f3tr, ytr, f3te)]
    )


def model_3(data, ytr, scale, seed):
    Xtr, Xte = data["FS4"]
    etc = ClassifierSpec("etc", {"n_estimators": max(10, int(40_000 * scale)), "min_samples_leaf": 5}, seed)
    gbt = ClassifierSpec(
        "gbt",
        {"subsample": 1.0, "num_round": 200, "max_depth": 10, "objective": "binary:logistic",
         "base_score": 0.05, "eta": 0.04, "colsample_bytree": 0.8},
        seed,
    )
    lr = ClassifierSpec("logreg", {"C": 1.0})
    return rank_average([scores(s, Xtr, ytr, Xte) for s in (etc, gbt, lr)])


def main(argv=None) -> dict:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--locations", type=int, default=10)
    parser.add_argument("--hours", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--test-locations", type=int, default=2)
    parser.add_argument("--test-frac", type=float, default=0.2)
    parser.add_argument("--scale", type=float, default=0.05, help="fraction of the full ensemble sizes")
    parser.add_argument("--search-trials", type=int, default=0, help="random subset trials for model 1")
    parser.add_argument("--out", help="write the results as JSON")
    args = parser.parse_args(argv)

    res = synth_generate(SynthConfig(n_locations=args.locations, hours=args.hours, seed=args.seed))
    ds = res.dataset
    train, test = competition_split(ds, args.test_locations, args.test_frac, args.seed)
    ytr, yte = ds.labels[train], ds.labels[test]
    print(f"train {len(train)} windows ({ytr.sum()} warnings), test {len(test)} ({yte.sum()} warnings)")
    data = {fs: features(ds, res.metadata, train, test, fs) for fs in ("FS1", "FS2", "FS3", "FS4")}
    data["train_dataset"] = ds.subset(train)

    out = {}
    runs = [
        ("model_1", lambda: model_1(data, ytr, args.scale, args.search_trials, args.seed)),
        ("model_2", lambda: model_2(data, ytr, args.scale, args.seed)),
        ("model_3", lambda: model_3(data, ytr, args.scale, args.seed)),
    ]
    for name, run in runs:
        start = time.perf_counter()
        out[name] = run()
        print(f"{name}: test AUC {auc_rank(out[name], yte):.4f} ({time.perf_counter() - start:.1f}s)")
    final = rank_average([out["model_1"], out["model_2"], out["model_3"]], [1, 3, 2])
    report = metrics_report(final, yte)
    m = report["metrics"]
    print(
        f"blend 1/3/2: test AUC {report['auc']:.4f}; at threshold {report['threshold']:.4g} "
        f"precision {m['precision']:.2f} recall {m['recall']:.2f} specificity {m['specificity']:.2f} "
        f"class-gain {m['class_gain']:.2f}"
    )
    summary = {name: auc_rank(s, yte) for name, s in out.items()} | {"blend": report}
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"config": vars(args), "results": summary}, fh, indent=2)
    return summary


if __name__ == "__main__":
    main()
