import numpy as np
import pytest
from sklearn.cluster import KMeans

from hedgefuzzy.data import Dataset, normalize, stratified_split
from hedgefuzzy.initialize import InitConfig, init_rulebase, kmeans
from hedgefuzzy.network import forward


def test_exact_fit_two_points():
    res = kmeans([[0.0], [10.0]], 2, seed=0)
    assert sorted(res.centers.ravel().tolist()) == [0.0, 10.0]
    assert res.wcss == 0.0


def test_single_cluster_is_mean():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(40, 3))
    res = kmeans(pts, 1)
    np.testing.assert_allclose(res.centers[0], pts.mean(axis=0))


def test_too_few_points():
    with pytest.raises(ValueError):
        kmeans([[0.0], [1.0]], 3)


def _blobs(seed):
    rng = np.random.default_rng(seed)
    means = np.array([[0, 0], [4, 0], [0, 4], [4, 4]], dtype=float)
    return np.vstack([m + rng.normal(0, 0.8, (50, 2)) for m in means])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_wcss_close_to_brute_force_best(seed):
    pts = _blobs(seed)
    ours = kmeans(pts, 4, seed=seed, restarts=10).wcss
    # independent oracle: best of 200 single random-start runs
    best = min(
        KMeans(4, init="random", n_init=1, random_state=r).fit(pts).inertia_ for r in range(200)
    )
    assert ours <= best * 1.01


def test_plusplus_also_converges():
    pts = _blobs(4)
    a = kmeans(pts, 4, seed=1, plusplus=True).wcss
    b = kmeans(pts, 4, seed=1).wcss
    assert a == pytest.approx(b, rel=0.01)


@pytest.fixture(scope="module")
def thyroid_train(thyroid):
    plan = stratified_split(thyroid, 0.6, 42)
    return normalize(thyroid.subset(plan.train_indices))[0]


@pytest.mark.parametrize("clusters, rules", [(1, 3), (4, 12)])
def test_rule_counts(thyroid_train, clusters, rules):
    rb = init_rulebase(thyroid_train, InitConfig(clusters_per_class=clusters))
    assert rb.n_rules == rules
    assert rb.rule_class.tolist() == sorted(rb.rule_class.tolist())
    assert np.all(rb.hedges == 1.0)
    assert np.all(rb.widths >= rb.sigma_min)


def test_identity_hedges_equal_unhedged_classifier(thyroid_train):
    rb = init_rulebase(thyroid_train, InitConfig())
    X = thyroid_train.features
    tr = forward(rb, X)
    z = (X[:, None, :] - rb.centers[None]) / rb.widths[None]
    beta = np.exp(-0.5 * (z * z).sum(axis=2))
    O = beta @ rb.weights
    np.testing.assert_allclose(tr.h, O / O.sum(axis=1, keepdims=True), atol=1e-12)


def test_single_cluster_centers_are_class_means(thyroid_train):
    rb = init_rulebase(thyroid_train, InitConfig())
    for k in range(3):
        np.testing.assert_allclose(rb.centers[k], thyroid_train.features[thyroid_train.labels == k + 1].mean(axis=0))


def test_degenerate_cluster_gets_floor():
    X = np.array([[0.5, 0.1], [0.5, 0.2], [0.1, 0.9], [0.3, 0.8]])
    ds = Dataset(X, [1, 1, 2, 2], 2)
    rb = init_rulebase(ds, InitConfig())
    assert rb.widths[0, 0] == rb.sigma_min


def test_class_too_small_is_named():
    ds = Dataset(np.arange(6.0)[:, None], [1, 1, 1, 1, 2, 2], 2, class_names=("a", "b"))
    with pytest.raises(ValueError, match="class 2 \\(b\\)"):
        init_rulebase(ds, InitConfig(clusters_per_class=3))


def test_feature_subset_masks_others(thyroid_train):
    rb = init_rulebase(thyroid_train, InitConfig(), features=[0, 1, 2, 4])
    assert rb.feature_mask.tolist() == [True, True, True, False, True]


def test_seeded(thyroid_train):
    a = init_rulebase(thyroid_train, InitConfig(clusters_per_class=3, seed=5))
    b = init_rulebase(thyroid_train, InitConfig(clusters_per_class=3, seed=5))
    assert np.array_equal(a.centers, b.centers)


def test_report(thyroid_train):
    rep = []
    init_rulebase(thyroid_train, InitConfig(clusters_per_class=2), report=rep)
    assert [r["class"] for r in rep] == [1, 2, 3]
    assert sum(sum(r["sizes"]) for r in rep) == thyroid_train.n_samples


def test_config_validation():
    with pytest.raises(ValueError):
        InitConfig(clusters_per_class=0)
    with pytest.raises(ValueError):
        InitConfig(width_rule="bogus")


def test_nearest_center_half_width(thyroid_train):
    rb = init_rulebase(thyroid_train, InitConfig(width_rule="nearest-center-half"))
    assert rb.n_rules == 3 and np.all(rb.widths >= rb.sigma_min)
