"""
The ten acceptance criteria, each with its stated tolerance and time limit.
Every test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary.
"""

from __future__ import annotations

import csv
import io
import json
import re
import time
from pathlib import Path

import numpy as np
import pytest

from localshare.cluster import (
    cut_tree,
    dba,
    gmm_fit,
    hierarchical,
    kshape,
    relabel_by_appearance,
    som,
    tskmeans_dba,
    two_step_ap_hc,
    two_step_kmeans_gmm,
)
from localshare.cluster.result import make_rng
from localshare.distance import CondensedDistanceMatrix, SeriesMatrix, dtw, normalize_by_max, pairwise_condensed, sbd, shift
from localshare.ingest import MarketItineraryRecord, accumulate_leg_counts
from localshare.pipeline import RunConfig, run, comparison_grid
from localshare.pipeline.config import DISPLAY_NAMES
from localshare.shares import ODKey, build_quarterly_series, transfer_share, zscore
from localshare.synthetic import FIXTURE_SHAPES, shape_dataset
from localshare.validate import (
    METRICS_COLUMNS,
    adjusted_rand,
    calinski_harabasz,
    davies_bouldin,
    dunn,
    gini,
    silhouette,
)

from oracles import (
    calinski_harabasz_bf,
    davies_bouldin_bf,
    dendrogram_sets,
    dtw_exhaustive,
    dunn_bf,
    naive_ward,
    silhouette_bf,
)

# seeds used by the recovery check: data seed 7, every method seed 0
RECOVERY_DATA_SEED = 7
RECOVERY_METHOD_SEED = 0


def test_criterion_01_local_and_transfer_share(criterion):
    with criterion(1, "local/transfer share on the four-itinerary example", 1.0) as c:
        records = [
            MarketItineraryRecord(2023, 1, ("ATL", "MEM"), 20),
            MarketItineraryRecord(2023, 1, ("ANC", "SEA", "ATL", "MEM"), 30),
            MarketItineraryRecord(2023, 1, ("DCA", "ATL", "MEM"), 40),
            MarketItineraryRecord(2023, 1, ("MCO", "ATL", "MEM"), 10),
        ]
        ledger = accumulate_leg_counts(records)
        c.check(ledger[("ATL", "MEM", 2023, 1)] == (20.0, 80.0), f"ledger {ledger[('ATL', 'MEM', 2023, 1)]}")
        s = build_quarterly_series(ledger, ODKey("ATL", "MEM"), ((2023, 1), (2023, 1)))
        c.check(s.share[0] == 0.2, f"local share {s.share[0]!r}")
        c.check(transfer_share(s)[0] == 0.8, f"transfer share {transfer_share(s)[0]!r}")
        c.note("local 0.2, transfer 0.8")


def test_criterion_02_dtw_matches_path_enumeration(criterion):
    with criterion(2, "DTW equals exhaustive alignment enumeration", 10.0) as c:
        rng = make_rng(2)
        worst = 0.0
        for _ in range(500):
            x = rng.integers(-2, 3, size=int(rng.integers(1, 7))).astype(float)
            y = rng.integers(-2, 3, size=int(rng.integers(1, 7))).astype(float)
            worst = max(worst, abs(dtw(x, y) - dtw_exhaustive(x, y)))
        c.check(worst <= 1e-9, f"max abs error {worst:.3e}")
        c.note(f"500 pairs, max abs error {worst:.1e}")


def test_criterion_03_sbd_properties(criterion):
    with criterion(3, "SBD range, scale invariance, shift robustness", 10.0) as c:
        rng = make_rng(3)
        lo, hi, scale_err = np.inf, -np.inf, 0.0
        for _ in range(1000):
            T = int(rng.integers(2, 65))
            x = rng.standard_normal(T) * rng.uniform(0.1, 10)
            y = rng.standard_normal(T) * rng.uniform(0.1, 10)
            d = sbd(x, y)
            lo, hi = min(lo, d), max(hi, d)
            for alpha in (0.5, 3.0):
                scale_err = max(scale_err, sbd(x, alpha * x))
        c.check(lo >= 0.0 and hi <= 2 + 1e-12, f"sbd range [{lo:.3g}, {hi:.3g}]")
        c.check(scale_err <= 1e-12, f"sbd(x, a x) up to {scale_err:.3e}")

        T = 64
        x = zscore(np.sin(2 * np.pi * np.arange(T) / T))
        shifted = {s: sbd(x, shift(x, s)) for s in range(-T // 4, T // 4 + 1)}
        bad = sorted(s for s, v in shifted.items() if v > 0.05)
        c.check(not bad, f"shift robustness: sbd > 0.05 at shifts {bad} (max {max(shifted.values()):.4f})")
        c.note(f"range [{lo:.3f}, {hi:.3f}], scale error {scale_err:.1e}, max shifted sbd {max(shifted.values()):.4f}")


def test_criterion_04_ward_matches_naive_oracle(criterion):
    with criterion(4, "Ward Lance-Williams equals naive recomputation", 30.0) as c:
        rng = make_rng(4)
        worst = 0.0
        for case in range(50):
            n = int(rng.integers(2, 13))
            pts = rng.standard_normal((n, int(rng.integers(1, 5))))
            D = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
            got = dendrogram_sets(hierarchical(CondensedDistanceMatrix.from_square(D, "euclidean"), "ward"))
            want = naive_ward(pts)
            for (a, b, h), (a2, b2, h2) in zip(got, want):
                c.check({a, b} == {a2, b2}, f"case {case}: merge order differs")
                worst = max(worst, abs(h - h2))
        c.check(worst <= 1e-9, f"max height error {worst:.3e}")
        c.note(f"50 sets, max height error {worst:.1e}")


def test_criterion_05_synthetic_shape_recovery(criterion):
    with criterion(5, "synthetic three-shape recovery, ARI >= 0.9 per method", 120.0) as c:
        data, truth = shape_dataset(n_per_shape=20, T=19, sigma=0.05, seed=RECOVERY_DATA_SEED)
        seed = RECOVERY_METHOD_SEED
        labels = {}
        D = normalize_by_max(pairwise_condensed(data, "dtw"))
        labels["hc-dtw + cut k=3"] = cut_tree(hierarchical(D, "ward"), 3).labels
        labels["kshape k=3"] = kshape(data, 3, seed=seed).labels
        labels["tskmeans_dba + gmm k=3"] = two_step_kmeans_gmm(data, 3, seed=seed).labels
        labels["two_step_ap_hc target 3"] = two_step_ap_hc(data, 3, seed=seed).labels
        labels["SOM 2x2"] = relabel_by_appearance(som(data, 2, 2, seed=seed).labels)
        scores = {name: adjusted_rand(truth, lab) for name, lab in labels.items()}
        for name, s in scores.items():
            c.check(s >= 0.9, f"{name}: ARI {s:.3f}")
        c.note(", ".join(f"{k} {v:.2f}" for k, v in scores.items()))


def _random_partition(rng, n, k):
    while True:
        labels = rng.integers(0, k, size=n)
        if np.unique(labels).size >= 2:
            return labels


def test_criterion_06_validity_indices_match_brute_force(criterion):
    with criterion(6, "validity indices equal brute-force oracles; hand values", 30.0) as c:
        rng = make_rng(6)
        errs = {"silhouette": 0.0, "db": 0.0, "dunn": 0.0, "ch_rel": 0.0}
        for _ in range(100):
            n = int(rng.integers(3, 21))
            k = int(rng.integers(2, min(4, n - 1) + 1))
            X = rng.standard_normal((n, int(rng.integers(1, 6))))
            labels = _random_partition(rng, n, k)
            D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
            cd = CondensedDistanceMatrix.from_square(D, "euclidean")
            Dl, Xl, ll = D.tolist(), X.tolist(), labels.tolist()
            errs["silhouette"] = max(errs["silhouette"], abs(silhouette(cd, labels) - silhouette_bf(Dl, ll)))
            errs["db"] = max(errs["db"], abs(davies_bouldin(X, labels) - davies_bouldin_bf(Xl, ll)))
            errs["dunn"] = max(errs["dunn"], abs(dunn(cd, labels) - dunn_bf(Dl, ll)))
            ref = calinski_harabasz_bf(Xl, ll)
            errs["ch_rel"] = max(errs["ch_rel"], abs(calinski_harabasz(X, labels) - ref) / abs(ref))
        for name in ("silhouette", "db", "dunn"):
            c.check(errs[name] <= 1e-9, f"{name} error {errs[name]:.3e}")
        c.check(errs["ch_rel"] <= 1e-6, f"CH relative error {errs['ch_rel']:.3e}")

        X = np.array([[0.0], [0.1], [10.0], [10.1]])
        lab = np.array([0, 0, 1, 1])
        cd = pairwise_condensed(SeriesMatrix(np.hstack([X, X]) / np.sqrt(2), list("abcd")), "euclidean")
        hand = {
            "silhouette": (silhouette(cd, lab), 0.990, 1e-3),
            "db": (davies_bouldin(X, lab), 0.01, 1e-9),
            "dunn": (dunn(cd, lab), 99.0, 1e-9),
            "ch": (calinski_harabasz(X, lab), 20000.0, 1.0),
        }
        for name, (got, want, tol) in hand.items():
            c.check(abs(got - want) <= tol, f"hand {name}: {got!r} vs {want}")
        c.note("max errors " + ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))


def test_criterion_07_monotone_objectives(criterion):
    with criterion(7, "GMM log-likelihood, k-means inertia and DBA objective monotone", 60.0) as c:
        worst = {"gmm": 0.0, "inertia": 0.0, "dba": 0.0}
        for i in range(20):
            rng = make_rng(700 + i)
            shapes = tuple(rng.choice(FIXTURE_SHAPES, size=3, replace=False))
            data, _ = shape_dataset(n_per_shape=8, T=int(rng.integers(8, 16)), sigma=0.2, seed=700 + i, shapes=shapes)
            k = int(rng.integers(2, 5))
            km = tskmeans_dba(data, k, seed=i)
            inertia = np.diff(km.extras["inertia_trace"])
            worst["inertia"] = max(worst["inertia"], float(inertia.max(initial=0.0)))
            _, g = gmm_fit(data, k, km.labels)
            ll = np.diff(g.extras["log_likelihood_trace"])
            worst["gmm"] = min(worst["gmm"], float(ll.min(initial=0.0)))
            members = data.values[km.labels == 0]
            _, trace = dba(list(members), return_trace=True)
            worst["dba"] = max(worst["dba"], float(np.diff(trace).max(initial=0.0)))
        c.check(worst["gmm"] >= -1e-8, f"log-likelihood dropped by {-worst['gmm']:.3e}")
        c.check(worst["inertia"] <= 1e-9, f"inertia rose by {worst['inertia']:.3e}")
        c.check(worst["dba"] <= 0.0, f"DBA objective rose by {worst['dba']:.3e}")
        c.note("20 datasets, worst steps " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_08_gini(criterion):
    with criterion(8, "Gini of cluster sizes") as c:
        c.check(gini([10, 10, 10]) == 0.0, "equal sizes")
        c.check(gini([3, 1]) == 0.25, f"[3,1] -> {gini([3, 1])!r}")
        rng = make_rng(8)
        for _ in range(1000):
            sizes = rng.integers(1, 200, size=int(rng.integers(1, 30)))
            g = gini(sizes)
            c.check(0.0 <= g < 1.0, f"gini {g} out of [0,1) for {sizes.tolist()}")
        c.note("equal -> 0, [3,1] -> 0.25, 1000 random vectors in [0, 1)")


_RUNS: dict = {}


def _fixture_runs(fixture_dir: Path, tmp: Path):
    if "a" not in _RUNS:
        cfg = RunConfig.load(fixture_dir / "fixture_config.json")
        start = time.perf_counter()
        _RUNS["a"] = (tmp / "a", run(cfg, tmp / "a").manifest)
        _RUNS["b"] = (tmp / "b", run(cfg, tmp / "b").manifest)
        _RUNS["elapsed"] = time.perf_counter() - start
    return _RUNS


@pytest.fixture(scope="module")
def run_root(tmp_path_factory):
    return tmp_path_factory.mktemp("fixture_runs")


def test_criterion_09_end_to_end_determinism(criterion, fixture_dir, run_root):
    with criterion(9, "fixture run twice gives byte-identical artifacts", 120.0) as c:
        runs = _fixture_runs(fixture_dir, run_root)
        (a, ma), (b, mb) = runs["a"], runs["b"]
        c.check(ma["artifacts"] == mb["artifacts"], "manifest artifact hashes differ")
        c.check((a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes(), "manifest bytes differ")
        kinds = {"membership": 0, "metrics": 0, "svg": 0}
        for art in ma["artifacts"]:
            rel = art["path"]
            c.check((a / rel).read_bytes() == (b / rel).read_bytes(), f"{rel} differs")
            if rel.endswith("membership.json"):
                kinds["membership"] += 1
            elif rel.startswith("metrics"):
                kinds["metrics"] += 1
            elif rel.endswith(".svg"):
                kinds["svg"] += 1
        c.check(all(kinds.values()), f"missing artifact kinds {kinds}")
        c.note(f"{len(ma['artifacts'])} artifacts identical ({kinds}), two runs {runs['elapsed']:.1f} s")


CLUSTER_CELL = {
    "HC with DynTW": r"(5|10)( \(\d+\))?",
    "k-shape": r"(5|10)( \(\d+\))?",
    "SOM": r"(4 × 4 = 16|10 × 10 = 100)( \(\d+\))?",
    "SBD with AP (+ HC)": r"\d+( → 10)?( \(\d+\))?",
    "DBA with GMM": r"(10|30 → 10)( \(\d+\))?",
}


def test_criterion_10_comparison_grid_on_fixture(criterion, fixture_dir, run_root):
    with criterion(10, "every comparison-table row runs on the fixture") as c:
        runs = _fixture_runs(fixture_dir, run_root)
        out, manifest = runs["a"]
        cfg = RunConfig.load(fixture_dir / "fixture_config.json")
        expected = comparison_grid()
        c.check(
            [(m.name, m.k, m.rows, m.normalize, m.params) for m in cfg.methods]
            == [(m.name, m.k, m.rows, m.normalize, m.params) for m in expected],
            "bundled config does not list the 20 comparison rows",
        )
        rows = list(csv.reader(io.StringIO((out / "metrics.csv").read_text(encoding="utf-8"))))
        c.check(rows[0] == METRICS_COLUMNS, f"header {rows[0]}")
        body = rows[1:]
        c.check(len(body) == 20, f"{len(body)} rows")
        for spec, row in zip(expected, body):
            c.check(row[0] == DISPLAY_NAMES[spec.name], f"method cell {row[0]}")
            c.check(row[2] == ("Yes" if spec.normalize else "No"), f"norm cell {row[2]}")
            c.check(re.fullmatch(CLUSTER_CELL[row[0]], row[1]) is not None, f"clusters cell {row[1]!r} for {row[0]}")
            if spec.name == "ap-sbd" and spec.k:
                c.check(row[1].split(" → ")[1].startswith("10"), f"AP two-step target {row[1]}")
            for cell in row[3:]:
                c.check(cell == "" or np.isfinite(float(cell)), f"bad index cell {cell!r}")
        memberships = [a for a in manifest["artifacts"] if a["path"].endswith("membership.json")]
        c.check(len(memberships) == 20, f"{len(memberships)} membership documents")
        for art in memberships:
            doc = json.loads((out / art["path"]).read_text(encoding="utf-8"))
            c.check(len(doc["labels"]) == manifest["n_pairs_clustered"], f"{art['path']}: label count")
        c.note(f"20 rows, columns {', '.join(METRICS_COLUMNS)}")
