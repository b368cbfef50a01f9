import statistics
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_dataset
from seismicwarn.features import (
    ExtractorConfig,
    WindowSpec,
    add_height_noise,
    all_pairs,
    expected_arity,
    extract,
    fs3_raw,
    make_interactions,
    mean_energy,
    prune_columns,
    read_feature_matrix,
    row_correlation,
    window_stat,
    window_stats,
    write_feature_matrix,
)
from seismicwarn.schema import HOURS, SERIES_INDEX, SERIES_NAMES, FeatureMatrix, LocationMetadata, SchemaError

# --- independent per-window oracles --------------------------------------------


def oracle_quantile(values, q):
    s = sorted(values)
    pos = q * (len(s) - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (s[hi] - s[lo]) * (pos - lo)


def oracle(series, length, offset, kind, q=None):
    w = list(series[HOURS - offset - length : HOURS - offset])
    hours = list(range(HOURS - offset - length + 1, HOURS - offset + 1))
    if kind == "min":
        return min(w)
    if kind == "max":
        return max(w)
    if kind == "mean":
        return statistics.fmean(w)
    if kind == "std":
        return statistics.pstdev(w)
    if kind == "abs_mean":
        return statistics.fmean(abs(v) for v in w)
    if kind == "abs_max":
        return max(abs(v) for v in w)
    if kind == "quantile":
        return oracle_quantile(w, q)
    if kind == "nonzero":
        return float(any(v != 0 for v in w))
    if kind == "hours_since_nonzero":
        for back, v in enumerate(reversed(w)):
            if v != 0:
                return float(back)
        return float(length)
    if kind == "count_increases":
        return float(sum(b > a for a, b in zip(w, w[1:])))
    if kind == "count_positive":
        return float(sum(v > 0 for v in w))
    if kind == "last":
        return w[-1]
    if kind.startswith("ols"):
        if length == 1:
            slope, intercept = 0.0, w[0] - 0.0
            intercept = w[0]
            return {"ols_slope": 0.0, "ols_intercept": intercept, "ols_r2": 0.0}[kind]
        slope, intercept = np.polyfit(hours, w, 1)
        if max(w) == min(w):
            r2 = 0.0
        else:
            fit = [intercept + slope * h for h in hours]
            ss_res = sum((a - b) ** 2 for a, b in zip(w, fit))
            mu = statistics.fmean(w)
            r2 = 1 - ss_res / sum((a - mu) ** 2 for a in w)
        return {"ols_slope": slope, "ols_intercept": intercept, "ols_r2": r2}[kind]
    raise ValueError(kind)


series24 = st.lists(st.integers(-5, 20).map(float), min_size=HOURS, max_size=HOURS)
windows = st.integers(1, HOURS).flatmap(lambda g: st.tuples(st.just(g), st.integers(0, HOURS - g)))
kinds = st.sampled_from(
    ["min", "max", "mean", "std", "abs_mean", "abs_max", "quantile", "nonzero", "hours_since_nonzero",
     "count_increases", "count_positive", "last", "ols_slope", "ols_intercept", "ols_r2"]
)


@given(series24, windows, kinds, st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]))
@settings(max_examples=400, deadline=None)
def test_window_stat_matches_oracle(series, window, kind, q):
    g, o = window
    got = window_stat(series, WindowSpec(g, o), kind, q if kind == "quantile" else None)
    assert got == pytest.approx(oracle(series, g, o, kind, q), abs=1e-7, rel=1e-7)


@given(st.lists(series24, min_size=1, max_size=8), windows, kinds)
@settings(max_examples=100, deadline=None)
def test_window_stats_rowwise(rows, window, kind):
    spec = WindowSpec(*window)
    q = 0.25 if kind == "quantile" else None
    block = np.array(rows)
    batch = window_stats(block, spec, kind, q)
    assert batch == pytest.approx([window_stat(r, spec, kind, q) for r in rows], abs=1e-12)


def test_window_stat_examples():
    assert window_stat(np.zeros(24), WindowSpec(24), "mean") == 0.0
    spike = np.zeros(24)
    spike[-1] = 5
    assert window_stat(spike, WindowSpec(24), "hours_since_nonzero") == 0
    assert window_stat(np.zeros(24), WindowSpec(6), "hours_since_nonzero") == 6
    line = np.zeros(24)
    line[19:] = [1, 2, 3, 4, 5]
    assert window_stat(line, WindowSpec(5), "ols_slope") == pytest.approx(1.0)
    w = np.zeros(24)
    w[20:] = [1, 3, 2, 4]
    assert window_stat(w, WindowSpec(4), "quantile", 0.5) == 2.5
    assert window_stat(np.arange(24.0), WindowSpec(24), "ols_r2") == pytest.approx(1.0)
    assert window_stat(np.full(24, 3.0), WindowSpec(24), "ols_r2") == 0.0


def test_r2_noisy_series_closed_form():
    y = np.array([3.0, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9, 3, 2, 3, 8, 4, 6, 2, 6, 4])
    x = np.arange(1, 25.0)
    X = np.column_stack([np.ones(24), x])
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    r2 = 1 - ((y - X @ beta) ** 2).sum() / ((y - y.mean()) ** 2).sum()
    assert window_stat(y, WindowSpec(24), "ols_r2") == pytest.approx(r2, rel=1e-12)
    assert window_stat(y, WindowSpec(24), "ols_slope") == pytest.approx(beta[1], rel=1e-12)
    assert window_stat(y, WindowSpec(24), "ols_intercept") == pytest.approx(beta[0], rel=1e-12)


@pytest.mark.parametrize("length, offset", [(0, 0), (25, 0), (8, 17), (1, -1)])
def test_window_spec_bounds(length, offset):
    with pytest.raises(ValueError):
        WindowSpec(length, offset)


def test_unknown_stat_and_bad_quantile():
    with pytest.raises(ValueError):
        window_stat(np.zeros(24), WindowSpec(4), "median")
    with pytest.raises(ValueError):
        window_stat(np.zeros(24), WindowSpec(4), "quantile", 1.5)


def test_mean_energy():
    zeros = np.zeros((1, 24))
    assert mean_energy(zeros, zeros)[0] == 0.0
    sums, counts = zeros.copy(), zeros.copy()
    sums[0, 10], counts[0, 10] = 300.0, 1
    assert mean_energy(sums, counts)[0] == 300.0
    sums[0, [3, 5]], counts[0, [3, 5]] = [200.0, 400.0], [1, 1]
    assert mean_energy(sums, counts)[0] == pytest.approx(900 / 3)
    assert mean_energy(sums, counts, WindowSpec(4))[0] == 0.0


def test_row_correlation():
    a = np.arange(24.0)[None, :]
    assert row_correlation(a, a)[0] == pytest.approx(1.0)
    assert row_correlation(a, -2 * a)[0] == pytest.approx(-1.0)
    assert row_correlation(a, np.ones((1, 24)))[0] == 0.0


# --- extractors ------------------------------------------------------------------


def metadata_for(dataset, height=2.0, level="b"):
    return {
        int(loc): LocationMetadata(int(loc), "w", "r", "b", "longwall", height, level)
        for loc in np.unique(dataset.locations)
    }


# arities enumerated by hand from the column grid of each set
ARITY = {
    # 8 general + 4 assessments + mean + 5 bands x 3 + 4 summed + 8 geophone x (3 + 6 + 1)
    # + 4 difference series x 2 + 2 x 5 recent std + height
    "FS1": 8 + 4 + 1 + 15 + 4 + 80 + 8 + 10 + 1,
    # 14 series x 24 raw + 14 x 5 stats x 4 windows + 2 x 2 abs-max + 8 general + 4 x 4 one-hot
    "FS2": 14 * 24 + 14 * 5 * 4 + 4 + 8 + 16,
    # 19 series x (5 x 4 + 5 x 3) + 4 abs-max + 3 x 3 fit + 2 corr + 8 general + 4 ordinal
    "FS3": 19 * 35 + 4 + 9 + 2 + 8 + 4,
    # 13 series x 2 stats x 5 offsets + 8 general + 4 assessments + geological
    "FS4": 13 * 2 * 5 + 8 + 4 + 1,
}


@pytest.mark.parametrize("fs", ["FS1", "FS2", "FS3", "FS4"])
def test_arity_matches_grid(fs, small_synth):
    cfg = ExtractorConfig(feature_set=fs)
    assert expected_arity(cfg) == ARITY[fs]
    ds = small_synth.dataset
    out = fs3_raw(ds, cfg) if fs == "FS3" else extract(ds, small_synth.metadata, cfg)
    assert out.shape == (len(ds), ARITY[fs])


def test_onehot_and_ordinal_arity():
    assert expected_arity(ExtractorConfig(feature_set="FS2", encoding="ordinal")) == ARITY["FS2"] - 12
    assert expected_arity(ExtractorConfig(feature_set="FS3", encoding="onehot")) == ARITY["FS3"] + 12


@pytest.mark.parametrize("fs", ["FS1", "FS2", "FS4"])
def test_all_zero_instance(fs):
    ds = make_dataset(3, hourly=np.zeros((3, len(SERIES_NAMES), HOURS)))
    out = extract(ds, metadata_for(ds), ExtractorConfig(feature_set=fs, height_noise=0))
    # scalar inputs from make_dataset are nonzero; recency saturates at the window length
    skip = ("latest_", "assessment", "total_", "geological", "main_working_height")
    for name in out.columns:
        if name.startswith(skip) or "=" in name or "hours_since" in name:
            continue
        assert (out.column(name) == 0).all(), name


def test_all_zero_recency_is_window_length():
    ds = make_dataset(2, hourly=np.zeros((2, len(SERIES_NAMES), HOURS)))
    out = extract(ds, None, ExtractorConfig(feature_set="FS2"))
    assert (out.column("count_e2_hours_since_nonzero_w8") == 8).all()


def test_fs1_slope_of_linear_series():
    hourly = np.zeros((1, len(SERIES_NAMES), HOURS))
    hourly[0, SERIES_INDEX["avg_genergy"]] = np.arange(1, 25)
    ds = make_dataset(1, hourly=hourly)
    out = extract(ds, metadata_for(ds), ExtractorConfig(feature_set="FS1"))
    assert out.column("avg_genergy_slope_last5")[0] == pytest.approx(1.0)
    assert out.column("avg_genergy_mean_last1")[0] == 24.0


def test_fs1_assessments_and_mean():
    ds = make_dataset(5)
    out = extract(ds, metadata_for(ds), ExtractorConfig(feature_set="FS1"))
    assert np.array_equal(out.column("latest_seismic_assessment"), ds.assessments[:, 0])
    assert out.column("assessment_mean") == pytest.approx(ds.assessments.mean(axis=1))


def test_fs1_missing_metadata():
    ds = make_dataset(2)
    with pytest.raises(SchemaError):
        extract(ds, {}, ExtractorConfig(feature_set="FS1"))
    with pytest.raises(SchemaError):
        extract(ds, None, ExtractorConfig(feature_set="FS4"))


def test_fs2_indicator_flips_with_single_hour():
    hourly = np.zeros((2, len(SERIES_NAMES), HOURS))
    hourly[1, SERIES_INDEX["count_e4"], 22] = 1
    ds = make_dataset(2, hourly=hourly)
    out = extract(ds, None, ExtractorConfig(feature_set="FS2"))
    assert out.column("count_e4_nonzero_w2").tolist() == [0.0, 1.0]
    assert out.column("count_e4_hours_since_nonzero_w24").tolist() == [24.0, 1.0]
    assert "max_gactivity.1" not in out.columns


def test_fs3_correlation_of_identical_series():
    rng = np.random.default_rng(0)
    hourly = rng.uniform(0, 10, (3, len(SERIES_NAMES), HOURS))
    hourly[:, SERIES_INDEX["avg_genergy"]] = hourly[:, SERIES_INDEX["avg_gactivity"]]
    ds = make_dataset(3, hourly=np.round(hourly))
    raw = fs3_raw(ds, ExtractorConfig(feature_set="FS3"))
    assert raw.column("corr_avg_gactivity__avg_genergy") == pytest.approx(1.0)


def test_fs3_linear_r2():
    hourly = np.zeros((1, len(SERIES_NAMES), HOURS))
    hourly[0, SERIES_INDEX["avg_gactivity"]] = 3 + 2 * np.arange(24)
    ds = make_dataset(1, hourly=hourly)
    raw = fs3_raw(ds, ExtractorConfig(feature_set="FS3"))
    assert raw.column("avg_gactivity_lm_r2")[0] == pytest.approx(1.0)
    assert raw.column("avg_gactivity_lm_coef")[0] == pytest.approx(2.0)


def test_fs3_pruned_has_no_constant_or_correlated_columns(small_synth):
    out = extract(small_synth.dataset, None, ExtractorConfig(feature_set="FS3"))
    assert out.shape[1] < ARITY["FS3"]
    assert (np.ptp(out.values, axis=0) > 0).all()
    corr = np.corrcoef(out.values.T)
    np.fill_diagonal(corr, 0)
    assert np.abs(corr).max() <= 0.99 + 1e-12


def test_prune_keeps_one_of_duplicate_pair():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(50, 3))
    m = FeatureMatrix(np.column_stack([x, x[:, 1], np.ones(50)]), ("a", "b", "c", "b_copy", "const"))
    assert prune_columns(m, 0.99) == ["a", "b", "c"]


def test_fs3_keep_reuses_columns(small_synth):
    ds = small_synth.dataset
    cfg = ExtractorConfig(feature_set="FS3")
    train = extract(ds.subset(np.arange(200)), None, cfg)
    test = extract(ds.subset(np.arange(200, 300)), None, cfg, keep=train.columns)
    assert test.columns == train.columns


def test_fs4_spike_only_in_offset_zero(small_synth):
    hourly = np.zeros((1, len(SERIES_NAMES), HOURS))
    hourly[0, SERIES_INDEX["count_e3"], 23] = 2
    ds = make_dataset(1, hourly=hourly)
    out = extract(ds, metadata_for(ds), ExtractorConfig(feature_set="FS4"))
    assert out.column("count_e3_max_w8o0")[0] == 2
    for o in (4, 8, 12, 16):
        assert out.column(f"count_e3_max_w8o{o}")[0] == 0
    assert "main_working_id" not in out.columns
    assert out.column("geological_assessment")[0] == 2


@pytest.mark.parametrize("fs", ["FS1", "FS2", "FS3", "FS4"])
def test_extractors_are_rowwise_and_label_free(fs, small_synth):
    ds = small_synth.dataset.subset(np.arange(0, 300, 7))
    cfg = ExtractorConfig(feature_set=fs)
    base = fs3_raw(ds, cfg) if fs == "FS3" else extract(ds, small_synth.metadata, cfg)
    perm = np.random.default_rng(0).permutation(len(ds))
    shuffled = ds.subset(perm)
    again = fs3_raw(shuffled, cfg) if fs == "FS3" else extract(shuffled, small_synth.metadata, cfg)
    assert np.array_equal(again.values, base.values[perm])
    unlabeled = ds.with_labels(None)
    plain = fs3_raw(unlabeled, cfg) if fs == "FS3" else extract(unlabeled, small_synth.metadata, cfg)
    assert np.array_equal(plain.values, base.values)


def test_full_window_equals_whole_series_stat(small_synth):
    ds = small_synth.dataset
    out = extract(ds, None, ExtractorConfig(feature_set="FS2"))
    block = ds.series("sum_e3")
    assert np.array_equal(out.column("sum_e3_max_w24"), block.max(axis=1))
    assert np.allclose(out.column("sum_e3_std_w24"), block.std(axis=1))


def test_interactions():
    x = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    m = FeatureMatrix(np.column_stack([x, np.ones(3)]), ("x", "y", "one"))
    out = make_interactions(m, [("x", "x"), ("x", "one"), ("y", "x")])
    assert out.columns[3:] == ("x*x", "one*x", "x*y")
    assert out.column("x*x").tolist() == [1.0, 9.0, 25.0]
    assert out.column("one*x").tolist() == [1.0, 3.0, 5.0]
    with pytest.raises(KeyError):
        make_interactions(m, [("x", "nope")])


def test_all_pairs_count():
    cols = [f"c{i}" for i in range(10)]
    m = FeatureMatrix(np.ones((2, 10)), tuple(cols))
    pairs = all_pairs(cols)
    assert len(pairs) == len(list(combinations(range(10), 2))) == 45
    assert make_interactions(m, pairs).shape[1] == 55


def test_height_noise():
    h = np.full(100_000, 2.5)
    assert np.array_equal(add_height_noise(h, 0.0, 1), h)
    noisy = add_height_noise(h, 0.2, 7)
    assert 0.19 <= (noisy - h).std(ddof=1) <= 0.21
    assert np.array_equal(add_height_noise(h[:50], 0.2, 7), noisy[:50])
    assert not np.array_equal(add_height_noise(h[:50], 0.2, 8), noisy[:50])


def test_height_noise_keyed_by_instance_id():
    h = np.full(4, 2.0)
    a = add_height_noise(h, 0.2, 3, ids=[10, 11, 12, 13])
    b = add_height_noise(h[::-1], 0.2, 3, ids=[13, 12, 11, 10])
    assert np.array_equal(a, b[::-1])


def test_extractor_config_validation():
    for bad in ({"feature_set": "FS9"}, {"encoding": "binary"}, {"height_noise": -1}, {"prune_threshold": 0}):
        with pytest.raises(ValueError):
            ExtractorConfig(**bad)
    with pytest.raises(ValueError):
        ExtractorConfig.from_dict({"feature_set": "FS1", "extra": 1})
    cfg = ExtractorConfig(feature_set="fs4")
    assert cfg.feature_set == "FS4"
    assert ExtractorConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.config_hash() == ExtractorConfig(feature_set="FS4").config_hash()
    assert cfg.config_hash() != ExtractorConfig(feature_set="FS4", height_noise=0.3).config_hash()


def test_feature_matrix_file_roundtrip(tmp_path, small_synth):
    cfg = ExtractorConfig(feature_set="FS1")
    m = extract(small_synth.dataset, small_synth.metadata, cfg)
    path = tmp_path / "f.csv"
    write_feature_matrix(m, path, cfg)
    back = read_feature_matrix(path)
    assert back.columns == m.columns
    assert np.array_equal(back.values, m.values)
    assert np.array_equal(back.ids, m.ids)
    assert back.config_hash == cfg.config_hash()
