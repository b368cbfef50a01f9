"""Command-line driver: ``seismicwarn <command> [options]``.

Every command reads its inputs from files, takes all randomness from
``--seed`` and writes deterministic outputs. Errors go to stderr with a
nonzero exit code.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import blend_standardized, rank_average
from .evaluation import PROTOCOLS, ProtocolConfig, evaluate, make_plan
from .features import FEATURE_SETS, ExtractorConfig, extract, read_feature_matrix, write_feature_matrix
from .io import parse_dataset_csv, parse_metadata_csv, read_labels, read_scores, write_scores
from .learners import ClassifierSpec, feature_importance, fit, load_model, predict_score, save_model
from .metrics import metrics_report, pr_curve, write_pr_curve, write_report
from .schema import FeatureMatrix, SchemaError
from .synth import SynthConfig, synth_generate, write_synth


class CLIError(Exception):
    pass


def _load_json(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise CLIError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise CLIError(f"{path}: invalid JSON ({err})") from None
    if not isinstance(data, dict):
        raise CLIError(f"{path}: expected a JSON object")
    return data


def _extractor(args) -> ExtractorConfig:
    """``--extractor`` is a feature-set name or a JSON config; ``--config`` overrides fields."""
    data = {}
    value = args.extractor
    if value in FEATURE_SETS:
        data["feature_set"] = value
    elif value is not None:
        data.update(_load_json(value))
    if getattr(args, "config", None):
        data.update(_load_json(args.config))
    if "feature_set" not in data:
        raise CLIError("choose a feature set with --extractor FS1|FS2|FS3|FS4")
    return ExtractorConfig.from_dict(data)


def _protocol(value: str) -> ProtocolConfig:
    if value in PROTOCOLS:
        return ProtocolConfig(protocol=value)
    return ProtocolConfig.from_dict(_load_json(value))


def _labels_for(ids: np.ndarray, args) -> np.ndarray:
    """Labels aligned to ``ids`` from ``--labels`` (id,label CSV) or a labeled ``--dataset``."""
    if args.labels:
        lab_ids, labels = read_labels(args.labels)
    elif args.dataset:
        ds = parse_dataset_csv(args.dataset)
        if not ds.labeled:
            raise CLIError(f"{args.dataset} has no label column")
        lab_ids, labels = ds.ids, ds.labels
    else:
        raise CLIError("labels are needed: pass --labels or a labeled --dataset")
    lookup = dict(zip(lab_ids.tolist(), labels.tolist()))
    missing = [i for i in ids.tolist() if i not in lookup]
    if missing:
        raise CLIError(f"no label for {len(missing)} instance(s), e.g. id {missing[0]}")
    return np.array([lookup[i] for i in ids.tolist()], dtype=np.int64)


def _weights(text: str | None, k: int) -> list[float] | None:
    if text is None:
        return None
    try:
        w = [float(v) for v in text.split(",")]
    except ValueError:
        raise CLIError(f"--weights must be comma-separated numbers, got {text!r}") from None
    if len(w) != k:
        raise CLIError(f"{len(w)} weights given for {k} score files")
    return w


def _out(args) -> Path:
    if not args.out:
        raise CLIError("--out is required")
    return Path(args.out)


def cmd_synth(args) -> None:
    data = _load_json(args.config) if args.config else {}
    if args.seed is not None:
        data["seed"] = args.seed
    config = SynthConfig.from_dict(data)
    paths = write_synth(synth_generate(config), _out(args))
    print(f"wrote {paths['dataset']}")


def cmd_extract(args) -> None:
    config = _extractor(args)
    dataset = parse_dataset_csv(args.dataset)
    metadata = parse_metadata_csv(args.metadata) if args.metadata else None
    keep = None
    if args.columns:
        manifest = _load_json(args.columns)
        n_inter = len(config.interactions)
        keep = manifest["columns"][: len(manifest["columns"]) - n_inter]
    matrix = extract(dataset, metadata, config, keep)
    write_feature_matrix(matrix, _out(args), config)
    print(f"wrote {args.out} ({matrix.shape[1]} columns)")


def cmd_evaluate(args) -> None:
    spec = ClassifierSpec.from_dict(_load_json(args.model))
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    extractor = _extractor(args)
    protocol = _protocol(args.protocol)
    dataset = parse_dataset_csv(args.dataset)
    metadata = parse_metadata_csv(args.metadata) if args.metadata else None
    seed = args.seed if args.seed is not None else 0
    plan = make_plan(dataset, protocol, seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = evaluate(spec, extractor, plan, dataset, metadata, args.tie_mode)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = {
        "report": report.to_dict(),
        "model": spec.to_dict(),
        "extractor": extractor.to_dict(),
        "protocol": protocol.to_dict(),
        "seed": seed,
        "tie_mode": args.tie_mode,
    }
    write_report(out, _out(args))
    if args.plan_out:
        plan.save(args.plan_out, dataset)
    print(f"mean AUC {report.mean:.4f} (std {report.std:.4f}) over {len(plan) - len(report.skipped)} folds")


def cmd_train(args) -> None:
    spec = ClassifierSpec.from_dict(_load_json(args.model))
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    X = read_feature_matrix(args.features)
    y = _labels_for(X.ids, args)
    model = fit(spec, X, y)
    save_model(model, _out(args))
    if args.importance and model.split_counts is not None:
        counts = feature_importance(model)
        Path(args.importance).write_text(json.dumps(counts, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out}")


def cmd_predict(args) -> None:
    model = load_model(args.model)
    X = read_feature_matrix(args.features)
    write_scores(X.ids, predict_score(model, X), _out(args))
    print(f"wrote {args.out}")


def cmd_blend(args) -> None:
    ids0 = None
    vectors = []
    for path in args.scores:
        ids, scores = read_scores(path)
        if ids0 is None:
            ids0 = ids
        elif not np.array_equal(ids, ids0):
            raise CLIError(f"{path}: instance ids differ from {args.scores[0]}")
        vectors.append(scores)
    weights = _weights(args.weights, len(vectors))
    blend = rank_average if args.method == "rank" else blend_standardized
    write_scores(ids0, blend(vectors, weights), _out(args))
    print(f"wrote {args.out}")


def cmd_report(args) -> None:
    ids, scores = read_scores(args.scores)
    labels = _labels_for(ids, args)
    report = metrics_report(scores, labels, args.threshold, args.tie_mode)
    write_report(report, _out(args))
    if args.pr_curve:
        write_pr_curve(pr_curve(scores, labels), args.pr_curve)
    m = report["metrics"]
    print(
        f"AUC {report['auc']:.4f}; threshold {report['threshold']:.6g}: "
        f"precision {m['precision']:.2f} recall {m['recall']:.2f} "
        f"specificity {m['specificity']:.2f} F1 {m['f1']:.2f} class-gain {m['class_gain']:.2f}"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seismicwarn", description="Seismic hazard warning pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        p.add_argument("--out", help="output path")
        p.add_argument("--seed", type=int, help="seed for all randomness")
        return p

    p = add("synth", cmd_synth, "generate a synthetic dataset, metadata and event stream")
    p.add_argument("--config", help="JSON generator config")

    p = add("extract", cmd_extract, "compute a feature matrix")
    p.add_argument("--dataset", required=True)
    p.add_argument("--metadata")
    p.add_argument("--extractor", help="FS1..FS4 or a JSON extractor config")
    p.add_argument("--config", help="JSON extractor config overriding --extractor fields")
    p.add_argument("--columns", help="feature manifest whose columns to reuse (skips FS3 pruning)")

    p = add("evaluate", cmd_evaluate, "cross-validate a learner under a split protocol")
    p.add_argument("--dataset", required=True)
    p.add_argument("--metadata")
    p.add_argument("--extractor", help="FS1..FS4 or a JSON extractor config")
    p.add_argument("--config", help="JSON extractor config overriding --extractor fields")
    p.add_argument("--model", required=True, help="JSON model spec")
    p.add_argument("--protocol", default="trts1", help=f"one of {', '.join(PROTOCOLS)} or a JSON protocol config")
    p.add_argument("--tie-mode", default="half", choices=("half", "strict"))
    p.add_argument("--plan-out", help="also write the split plan here")

    p = add("train", cmd_train, "fit a model on a feature matrix")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True, help="JSON model spec")
    p.add_argument("--labels", help="CSV with id,label columns")
    p.add_argument("--dataset", help="labeled dataset CSV (alternative to --labels)")
    p.add_argument("--importance", help="also write split counts per column here")

    p = add("predict", cmd_predict, "score a feature matrix with a trained model")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True, help="trained model file")

    p = add("blend", cmd_blend, "combine score files")
    p.add_argument("--scores", nargs="+", required=True)
    p.add_argument("--weights", help="comma-separated weights, one per score file")
    p.add_argument("--method", default="rank", choices=("rank", "standardized"))

    p = add("report", cmd_report, "AUC, class-gain threshold and confusion metrics")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", help="CSV with id,label columns")
    p.add_argument("--dataset", help="labeled dataset CSV (alternative to --labels)")
    p.add_argument("--threshold", type=float, help="fixed threshold instead of the best class-gain one")
    p.add_argument("--tie-mode", default="half", choices=("half", "strict"))
    p.add_argument("--pr-curve", help="also write the precision-recall curve CSV here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CLIError, SchemaError, ValueError, KeyError, FileNotFoundError) as err:
        msg = err.args[0] if isinstance(err, KeyError) and err.args else err
        print(f"seismicwarn {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
