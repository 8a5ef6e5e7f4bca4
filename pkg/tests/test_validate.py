import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn import metrics as skm

from localshare.distance import CondensedDistanceMatrix, SeriesMatrix
from localshare.errors import CoincidentCentroids, SingleCluster, ZeroDiameter, ZeroWithinScatter
from localshare.validate import (
    DETAIL_COLUMNS,
    METRICS_COLUMNS,
    ValidityReport,
    adjusted_rand,
    calinski_harabasz,
    davies_bouldin,
    dunn,
    gini,
    silhouette,
    validity_report,
    write_metrics_details,
    write_metrics_table,
)

from oracles import ari_bf, calinski_harabasz_bf, davies_bouldin_bf, dunn_bf, gini_bf, silhouette_bf


def _euclid(X):
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    return X, D, CondensedDistanceMatrix.from_square(D, "euclidean")


LINE = [0.0, 1.0, 4.0, 5.0]
TWO = [0, 0, 1, 1]


def test_hand_values():
    X, _, cd = _euclid(LINE)
    assert silhouette(cd, TWO) == pytest.approx((7 / 9 + 5 / 7) / 2, abs=1e-12)
    assert davies_bouldin(X, TWO) == pytest.approx(0.25, abs=1e-12)
    assert dunn(cd, TWO) == pytest.approx(3.0, abs=1e-12)
    assert calinski_harabasz(X, TWO) == pytest.approx(32.0, abs=1e-12)


def test_singleton_clusters():
    X, _, cd = _euclid([0.0, 1.0, 3.0])
    assert davies_bouldin(X, [0, 1, 2]) == 0.0
    # singletons contribute 0 to the silhouette mean
    assert silhouette(cd, [0, 0, 1]) == pytest.approx((2 / 3 + 1 / 2) / 3, abs=1e-12)


def test_ari_examples():
    assert adjusted_rand([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5, abs=1e-12)
    assert adjusted_rand([0, 0, 1, 1], [5, 5, 2, 2]) == 1.0
    assert adjusted_rand([0, 0, 0], [1, 1, 1]) == 1.0
    with pytest.raises(ValueError):
        adjusted_rand([0, 1], [0, 1, 2])


def test_gini_examples():
    assert gini([1, 3]) == pytest.approx(0.25, abs=1e-15)
    assert gini([4, 4, 4]) == 0.0
    assert gini([7]) == 0.0
    with pytest.raises(ValueError):
        gini([3, 0])


def test_undefined_cases():
    X, _, cd = _euclid(LINE)
    for fn, arg in ((silhouette, cd), (dunn, cd), (davies_bouldin, X), (calinski_harabasz, X)):
        with pytest.raises(SingleCluster):
            fn(arg, [0, 0, 0, 0])
    Xc, _, _ = _euclid([-1.0, 1.0, 0.0, 0.0])
    with pytest.raises(CoincidentCentroids):
        davies_bouldin(Xc, [0, 0, 1, 1])
    Xs, _, cds = _euclid([0.0, 0.0, 2.0, 2.0])
    with pytest.raises(ZeroDiameter):
        dunn(cds, [0, 0, 1, 1])
    with pytest.raises(ZeroWithinScatter):
        calinski_harabasz(Xs, [0, 0, 1, 1])
    with pytest.raises(ValueError):
        calinski_harabasz(X, [0, 1, 2, 3])


def test_report_records_undefined_indices():
    Xs, _, cds = _euclid([0.0, 0.0, 2.0, 2.0])
    r = validity_report(cds, SeriesMatrix(np.hstack([Xs, Xs]), list("abcd")), [0, 0, 1, 1])
    assert r.dunn is None and r.calinski_harabasz is None
    assert r.silhouette == 1.0 and r.davies_bouldin == 0.0 and r.gini == 0.0
    assert set(r.undefined) == {"dunn", "calinski_harabasz"}
    assert r.undefined["dunn"].startswith("ZeroDiameter")
    assert r.metric_space == "precomputed-euclidean|vector"
    assert r.as_dict()["undefined"] == r.undefined


@st.composite
def labelled_points(draw, min_k=2):
    n = draw(st.integers(4, 14))
    dim = draw(st.integers(1, 3))
    seed = draw(st.integers(0, 10_000))
    k = draw(st.integers(min_k, min(4, n - 1)))
    labels = list(range(k)) + draw(st.lists(st.integers(0, k - 1), min_size=n - k, max_size=n - k))
    X = np.random.default_rng(seed).standard_normal((n, dim))
    return X, np.array(labels)


@settings(max_examples=60, deadline=None)
@given(labelled_points())
def test_indices_match_brute_force_and_sklearn(case):
    X, labels = case
    _, D, cd = _euclid(X)
    sil = silhouette(cd, labels)
    assert sil == pytest.approx(silhouette_bf(D, labels), abs=1e-10)
    assert davies_bouldin(X, labels) == pytest.approx(davies_bouldin_bf(X, labels), rel=1e-9)
    assert dunn(cd, labels) == pytest.approx(dunn_bf(D, labels), rel=1e-12)
    assert calinski_harabasz(X, labels) == pytest.approx(calinski_harabasz_bf(X, labels), rel=1e-9)
    # sklearn expands |x - y|^2 as x.x + y.y - 2 x.y, so it only agrees to ~1e-8
    assert davies_bouldin(X, labels) == pytest.approx(skm.davies_bouldin_score(X, labels), rel=1e-6)
    assert calinski_harabasz(X, labels) == pytest.approx(skm.calinski_harabasz_score(X, labels), rel=1e-6)
    assert sil == pytest.approx(skm.silhouette_score(D, labels, metric="precomputed"), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(labelled_points(), st.randoms(use_true_random=False))
def test_permutation_invariance(case, rnd):
    X, labels = case
    perm = list(range(len(labels)))
    rnd.shuffle(perm)
    _, _, cd = _euclid(X)
    _, _, cdp = _euclid(X[perm])
    assert silhouette(cdp, labels[perm]) == pytest.approx(silhouette(cd, labels), abs=1e-10)
    assert dunn(cdp, labels[perm]) == pytest.approx(dunn(cd, labels), rel=1e-12)
    assert davies_bouldin(X[perm], labels[perm]) == pytest.approx(davies_bouldin(X, labels), rel=1e-9)
    assert calinski_harabasz(X[perm], labels[perm]) == pytest.approx(calinski_harabasz(X, labels), rel=1e-9)
    relabel = (labels + 1) % (labels.max() + 1)
    assert silhouette(cd, relabel) == pytest.approx(silhouette(cd, labels), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(labelled_points(), st.floats(0.01, 100), st.floats(-50, 50))
def test_scale_and_translation_invariance(case, alpha, offset):
    X, labels = case
    _, D, cd = _euclid(X)
    scaled = CondensedDistanceMatrix(cd.n, cd.entries * alpha, "euclidean")
    assert silhouette(scaled, labels) == pytest.approx(silhouette(cd, labels), abs=1e-9)
    assert dunn(scaled, labels) == pytest.approx(dunn(cd, labels), rel=1e-9)
    assert davies_bouldin(X + offset, labels) == pytest.approx(davies_bouldin(X, labels), rel=1e-6)
    assert calinski_harabasz(X + offset, labels) == pytest.approx(calinski_harabasz(X, labels), rel=1e-6)
    assert calinski_harabasz(X * alpha, labels) == pytest.approx(calinski_harabasz(X, labels), rel=1e-9)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 15).flatmap(lambda n: st.tuples(*[st.lists(st.integers(0, 3), min_size=n, max_size=n)] * 2)))
def test_ari_matches_pair_counting_and_sklearn(pair):
    a, b = pair
    assert adjusted_rand(a, b) == pytest.approx(ari_bf(a, b), abs=1e-12)
    assert adjusted_rand(a, b) == pytest.approx(adjusted_rand(b, a), abs=1e-12)
    assert adjusted_rand(a, a) == 1.0
    assert adjusted_rand(a, b) == pytest.approx(skm.adjusted_rand_score(a, b), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=1, max_size=12))
def test_gini_matches_brute_force(sizes):
    g = gini(sizes)
    assert g == pytest.approx(gini_bf(sizes), abs=1e-12)
    assert 0.0 <= g < 1.0
    if len(set(sizes)) == 1:
        assert g == 0.0


def _rows():
    full = ValidityReport(0.5, 1.25, 0.1, 42.0, 0.125, "precomputed-dtw|vector")
    part = ValidityReport(0.25, None, None, 7.0, 0.0, "precomputed-sbd|vector", {"dunn": "ZeroDiameter: x", "davies_bouldin": "y"})
    return [
        {"method": "HC (DTW)", "clusters": "5", "normalized": False, "report": full},
        {"method": "k-Shape", "clusters": "5 (4)", "normalized": True, "report": part},
    ]


def test_metrics_table_layout():
    buf = io.StringIO()
    write_metrics_table(_rows(), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(METRICS_COLUMNS)
    assert lines[1] == "HC (DTW),5,No,0.5000,1.2500,0.1000,42.0000"
    assert lines[2] == "k-Shape,5 (4),Yes,0.2500,,,7.0000"


def test_metrics_details_layout():
    buf = io.StringIO()
    write_metrics_details(_rows(), buf, delimiter="\t")
    lines = buf.getvalue().splitlines()
    assert lines[0] == "\t".join(DETAIL_COLUMNS)
    assert lines[1].split("\t") == ["HC (DTW)", "5", "No", "0.1250", "precomputed-dtw|vector", ""]
    assert lines[2].split("\t")[-1] == "davies_bouldin: y; dunn: ZeroDiameter: x"
