import json

import numpy as np
import pytest

from hedgefuzzy.data import (
    DataError,
    Dataset,
    apply_normalization,
    fit_normalization,
    kfold,
    load_csv,
    load_dataset,
    normalize,
    save_dataset,
    stratified_split,
)


def test_thyroid_shape(thyroid):
    assert thyroid.n_samples == 215
    assert thyroid.n_features == 5
    assert thyroid.class_count == 3
    assert thyroid.class_counts().tolist() == [150, 35, 30]
    assert thyroid.feature_names[3] == "Basal TSH"


def test_empty_file(tmp_path):
    f = tmp_path / "empty.csv"
    f.write_text("")
    with pytest.raises(DataError, match="no rows"):
        load_csv(f)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="file not found"):
        load_csv(tmp_path / "nope.csv")


def test_header_and_label_last(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("a,b,label\n0.1,0.2,1\n0.3,0.4,2\n")
    ds = load_csv(f, label_column="last")
    assert ds.feature_names == ("a", "b")
    assert ds.labels.tolist() == [1, 2]
    assert ds.features[1].tolist() == [0.3, 0.4]


@pytest.mark.parametrize(
    "body, message",
    [
        ("1,0.5\n2,x\n", "line 2: non-numeric"),
        ("1,0.5\n2,0.1,0.2\n", "line 2: expected 2 fields"),
        ("1,0.5\n1.5,0.1\n", "not an integer"),
        ("1,0.5\n3,0.1\n", "outside 1..2"),
    ],
)
def test_malformed_rows(tmp_path, body, message):
    f = tmp_path / "bad.csv"
    f.write_text(body)
    with pytest.raises(DataError, match=message):
        load_csv(f)


def test_dataset_is_read_only(thyroid):
    with pytest.raises(ValueError):
        thyroid.features[0, 0] = 1.0


def test_minmax_examples():
    X = np.array([[10.0, 5.0], [20.0, 5.0], [30.0, 5.0]])
    p = fit_normalization(X, "minmax")
    Z = p.apply(X)
    assert Z[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert Z[:, 1].tolist() == [0.5, 0.5, 0.5]
    assert p.degenerate.tolist() == [False, True]
    # train params applied verbatim to unseen data
    assert p.apply(np.array([[35.0, 5.0]]))[0, 0] == pytest.approx(1.25)


def test_zscore():
    X = np.array([[1.0], [2.0], [3.0]])
    Z = fit_normalization(X, "zscore").apply(X)
    assert Z.mean() == pytest.approx(0.0)
    assert Z.std() == pytest.approx(1.0)


def test_normalize_records_params(thyroid):
    ds, p = normalize(thyroid)
    assert ds.norm_params is p
    assert ds.features.min() == 0.0 and ds.features.max() == 1.0


def test_split_matches_published_partition(thyroid):
    plan = stratified_split(thyroid, 0.6, seed=42)
    assert plan.train_indices.size == 129
    assert plan.test_indices.size == 86
    tr = thyroid.subset(plan.train_indices).class_counts()
    assert tr.tolist() == [90, 21, 18]
    assert thyroid.subset(plan.test_indices).class_counts().tolist() == [60, 14, 12]
    assert np.intersect1d(plan.train_indices, plan.test_indices).size == 0


def test_split_is_seeded(thyroid):
    a = stratified_split(thyroid, 0.6, 1)
    b = stratified_split(thyroid, 0.6, 1)
    c = stratified_split(thyroid, 0.6, 2)
    assert np.array_equal(a.train_indices, b.train_indices)
    assert not np.array_equal(a.train_indices, c.train_indices)


@pytest.mark.parametrize("frac", [0.0, 1.0, 1.5])
def test_split_fraction_bounds(thyroid, frac):
    with pytest.raises(DataError):
        stratified_split(thyroid, frac, 0)


def test_split_needs_two_per_class():
    ds = Dataset(np.zeros((4, 1)), [1, 1, 1, 2], 2)
    with pytest.raises(DataError, match="at least 2"):
        stratified_split(ds, 0.5, 0)


def test_kfold_sizes(thyroid):
    plan = kfold(thyroid, 4, seed=0)
    sizes = sorted(np.bincount(plan.folds).tolist(), reverse=True)
    assert sizes == [54, 54, 54, 53]
    for f in range(4):
        tr, va = plan.fold(f)
        assert tr.size + va.size == 215
        counts = thyroid.subset(va).class_counts()
        assert np.all(np.abs(counts - thyroid.class_counts() / 4) <= 1)


def test_kfold_too_many_folds(thyroid):
    with pytest.raises(DataError, match="smallest class"):
        kfold(thyroid, 31, 0)
    # k = N is leave-one-out and allowed
    assert kfold(thyroid, 215, 0).k == 215


def test_leave_one_out_toy():
    ds = Dataset(np.arange(10.0)[:, None], [1] * 5 + [2] * 5, 2)
    plan = kfold(ds, 10, seed=3)
    assert plan.k == 10
    for f in range(10):
        assert plan.fold(f)[1].size == 1


def test_kfold_seed_determinism(thyroid):
    assert np.array_equal(kfold(thyroid, 4, 7).folds, kfold(thyroid, 4, 7).folds)
    assert not np.array_equal(kfold(thyroid, 4, 7).folds, kfold(thyroid, 4, 8).folds)


def test_save_load_roundtrip(tmp_path, thyroid):
    ds, _ = normalize(thyroid)
    path = save_dataset(ds, tmp_path / "d.csv", seed=5, train_indices=np.arange(3))
    back, meta = load_dataset(path)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
    assert meta["seed"] == 5 and meta["train_indices"] == [0, 1, 2]
    assert np.array_equal(back.norm_params.offset, ds.norm_params.offset)
    json.loads((tmp_path / "d.csv.meta.json").read_text())


def test_roundtrip_subset_missing_a_class(tmp_path, thyroid):
    sub = thyroid.subset(np.flatnonzero(thyroid.labels != 3))
    path = save_dataset(sub, tmp_path / "s.csv")
    back, _ = load_dataset(path)
    assert back.class_count == 3


def test_apply_normalization_extrapolates(thyroid):
    train = thyroid.subset(np.arange(100))
    _, p = normalize(train)
    test = apply_normalization(thyroid.subset(np.arange(100, 215)), p)
    assert test.norm_params is p
