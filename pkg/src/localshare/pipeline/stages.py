"""
End-to-end orchestration: ingest -> shares -> cluster -> validate -> report.

Every stage is a plain function so the CLI subcommands can run them one at a
time against files on disk; :func:`run` chains them and writes a manifest
with SHA-256 hashes of every artifact.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import ingest as ing
from ..cluster import (
    ClusteringResult,
    cut_height,
    cut_tree,
    hierarchical,
    kshape,
    som,
    two_step_ap_hc,
    two_step_kmeans_gmm,
)
from ..cluster.twostep import ap_sbd
from ..distance import CondensedDistanceMatrix, SeriesMatrix, normalize_by_max, pairwise_condensed
from ..errors import ConfigError, LocalShareError, SelectionEmpty, StageError
from ..shares import (
    ODKey,
    SelectionCriteria,
    ShareSeries,
    aggregate_yearly,
    build_all_series,
    select_od_pairs,
    write_series_table,
    zscore,
)
from ..validate import ValidityReport, validity_report, write_metrics_details, write_metrics_table
from . import figures
from .config import DISPLAY_NAMES, MethodSpec, RunConfig

log = logging.getLogger(__name__)

# metric each method's silhouette/Dunn are computed in
METHOD_METRIC = {"hc-dtw": "dtw", "kshape": "sbd", "som": "euclidean", "ap-sbd": "sbd", "dba-gmm": "dtw"}


class _stage:
    """Re-raise package errors tagged with the stage they came from."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, (LocalShareError, ValueError, OSError)) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


# ---------------------------------------------------------------- stages


def ingest_files(cfg: RunConfig) -> tuple[ing.LegCountLedger, dict]:
    ledger = ing.LegCountLedger()
    stats = {}
    for path in cfg.market_files:
        errors: list = []
        records = ing.parse_market_file(
            cfg.resolve(path), cfg.market_schema, delimiter=cfg.delimiter, strict=cfg.strict, errors=errors
        )
        ledger = ledger.merge(ing.accumulate_leg_counts(records))
        stats[Path(path).name] = {"records": len(records), "skipped": len(errors)}
    return ledger, stats


def load_categories(cfg: RunConfig) -> ing.AirportCategoryTable:
    if cfg.categories is None:
        return ing.AirportCategoryTable()
    return ing.AirportCategoryTable.from_file(cfg.resolve(cfg.categories))


def select_pairs(quarterly: dict, cfg: RunConfig, categories: ing.AirportCategoryTable) -> list[ODKey]:
    criteria = SelectionCriteria(tuple(cfg.activity_start), cfg.require_large_hub, cfg.min_share_exclusive)
    keys = select_od_pairs(quarterly, criteria, categories)
    if not keys:
        raise SelectionEmpty(
            f"no O&D pair satisfies the selection criteria {asdict(criteria)} "
            f"(out of {len(quarterly)} pairs)"
        )
    return keys


def analysis_series(quarterly: dict, keys: list[ODKey], cfg: RunConfig) -> tuple[dict, list[str]]:
    """Series used for clustering (yearly by default). Pairs with missing
    points anywhere in the span are set aside and reported."""
    out, excluded = {}, []
    for k in keys:
        s = aggregate_yearly(quarterly[k], cfg.drop_partial_final_year) if cfg.yearly else quarterly[k]
        if np.any(s.missing):
            excluded.append(str(k))
            continue
        out[k] = s
    if not out:
        raise SelectionEmpty("every selected pair has missing points in the analysis span")
    return out, excluded


def series_matrices(series: dict) -> tuple[SeriesMatrix, SeriesMatrix]:
    keys = sorted(series)
    raw = np.array([series[k].share for k in keys])
    return SeriesMatrix(raw, keys), SeriesMatrix(np.array([zscore(r) for r in raw]), keys)


class DistanceCache:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._cache: dict = {}

    def get(self, data: SeriesMatrix, metric: str, normalized_data: bool, normalize: bool) -> CondensedDistanceMatrix:
        key = (metric, normalized_data, normalize)
        if key not in self._cache:
            window = self.cfg.dtw_window if metric == "dtw" else None
            m = pairwise_condensed(data, metric, window=window, zero_norm="uncorrelated")
            self._cache[key] = normalize_by_max(m) if normalize else m
        return self._cache[key]


def run_method(spec: MethodSpec, raw: SeriesMatrix, std: SeriesMatrix, cfg: RunConfig, cache: DistanceCache) -> ClusteringResult:
    data = std if spec.normalize else raw
    p = dict(spec.params)
    if spec.name == "hc-dtw":
        d = cache.get(data, "dtw", spec.normalize, cfg.normalize_distances)
        tree = hierarchical(d, p.get("linkage", "ward"))
        if "cut_height" in p:
            res = cut_height(tree, float(p["cut_height"]), spec.k)
        else:
            res = cut_tree(tree, spec.k)
        res.method = "hc-dtw"
        res.seed = spec.seed
        res.params.update({"k": spec.k, "normalize_distances": cfg.normalize_distances})
    elif spec.name == "kshape":
        res = kshape(
            data,
            spec.k,
            seed=spec.seed,
            max_iter=p.get("max_iter", 100),
            n_init=p.get("n_init", 10),
            require_normalized=spec.normalize,
        )
    elif spec.name == "som":
        res = som(data, spec.rows, spec.cols, epochs=p.get("epochs", 1000), lr0=p.get("lr0", 0.5), seed=spec.seed)
    elif spec.name == "ap-sbd":
        ap_kw = {
            "damping": p.get("damping", 0.9),
            "preference": p.get("preference"),
            "max_iter": p.get("max_iter", 1000),
            "convergence_iter": p.get("convergence_iter", 50),
            "seed": spec.seed,
            "zero_norm": "uncorrelated",
        }
        res = two_step_ap_hc(data, spec.k, **ap_kw) if spec.k else ap_sbd(data, **ap_kw)
    elif spec.name == "dba-gmm":
        res = two_step_kmeans_gmm(data, spec.k, seed=spec.seed, init_k=p.get("init_k"))
    else:  # pragma: no cover - validated earlier
        raise ConfigError(spec.name)
    res.params["normalize"] = spec.normalize
    return res


def clusters_label(spec: MethodSpec, res: ClusteringResult) -> str:
    """The metrics table's Clusters cell, e.g. ``5 (3)`` or ``190 → 10``."""
    if spec.name == "som":
        n = spec.rows * spec.cols
        return f"{spec.rows} × {spec.cols} = {n}" + (f" ({res.k_actual})" if res.k_actual < n else "")
    if spec.name == "ap-sbd":
        if spec.k:
            return f"{res.extras['ap_clusters']} → {spec.k}" + (f" ({res.k_actual})" if res.k_actual < spec.k else "")
        return str(res.k_actual)
    base = str(res.k_requested)
    if spec.name == "dba-gmm" and spec.params.get("init_k"):
        base = f"{spec.params['init_k']} → {spec.k}"
    return base + (f" ({res.k_actual})" if res.k_actual < res.k_requested else "")


def evaluate_result(
    spec: MethodSpec, res: ClusteringResult, raw: SeriesMatrix, std: SeriesMatrix, cfg: RunConfig, cache: DistanceCache
) -> ValidityReport:
    data = std if spec.normalize else raw
    metric = METHOD_METRIC[spec.name]
    normalize = cfg.normalize_distances and metric == "dtw"
    d = cache.get(data, metric, spec.normalize, normalize)
    return validity_report(d, data, res.labels)


# ---------------------------------------------------------------- outputs


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class ArtifactWriter:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.paths: list[Path] = []

    def text(self, rel: str, content: str) -> Path:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8", newline="")
        self.paths.append(path)
        return path

    def manifest(self, extra: dict) -> dict:
        artifacts = [
            {"path": p.relative_to(self.root).as_posix(), "sha256": sha256_file(p), "bytes": p.stat().st_size}
            for p in self.paths
        ]
        return {**extra, "artifacts": artifacts}


def _csv(write, *args) -> str:
    buf = io.StringIO()
    write(*args, buf)
    return buf.getvalue()


def _time_labels(series: ShareSeries) -> list[str]:
    return [f"{p[0]}" if len(p) == 1 else f"{p[0]}Q{p[1]}" for p in series.index]


def segment_summary(cfg: RunConfig, keys: set) -> str:
    """Yearly T100-style totals per selected leg."""
    totals: dict = {}
    for path in cfg.segment_files:
        for r in ing.parse_segment_file(cfg.resolve(path), cfg.segment_schema, delimiter=cfg.delimiter, strict=cfg.strict):
            if ODKey(r.origin, r.dest) not in keys:
                continue
            acc = totals.setdefault((r.origin, r.dest, r.year), [0.0, 0.0, 0.0])
            acc[0] += r.passengers
            acc[1] += r.departures
            acc[2] += r.seats
    lines = ["origin,dest,year,passengers,departures,seats"]
    for (o, d, y), (p, dep, s) in sorted(totals.items()):
        lines.append(f"{o},{d},{y},{p!r},{dep!r},{s!r}")
    return "\n".join(lines) + "\n"


def cluster_stage(cfg: RunConfig, raw: SeriesMatrix, std: SeriesMatrix, cache: DistanceCache) -> list:
    runs = []
    for idx, spec in enumerate(cfg.methods):
        with _stage(f"cluster:{spec.slug}"):
            runs.append((idx, spec, run_method(spec, raw, std, cfg, cache)))
    return runs


def evaluate_stage(cfg: RunConfig, runs: list, raw: SeriesMatrix, std: SeriesMatrix, cache: DistanceCache) -> list[dict]:
    """Metrics table rows, one per clustering run."""
    rows = []
    for _, spec, res in runs:
        with _stage(f"validate:{spec.slug}"):
            report = evaluate_result(spec, res, raw, std, cfg, cache)
        rows.append(
            {"method": DISPLAY_NAMES[spec.name], "clusters": clusters_label(spec, res), "normalized": spec.normalize, "report": report}
        )
    return rows


def membership_path(idx: int, spec: MethodSpec) -> str:
    return f"methods/{idx:02d}_{spec.slug}/membership.json"


def membership_document(spec: MethodSpec, res: ClusteringResult, keys) -> str:
    doc = res.to_document(keys)
    doc["spec"] = asdict(spec)
    doc["clusters"] = clusters_label(spec, res)
    return _dump_json(doc)


def read_memberships(root: str | Path, keys) -> list:
    """Load ``methods/*/membership.json`` under ``root`` as (idx, spec, result)
    triples, with labels reordered to match ``keys``."""
    runs = []
    for path in sorted(Path(root).glob("methods/*/membership.json")):
        doc = json.loads(path.read_text(encoding="utf-8"))
        res, doc_keys = ClusteringResult.from_document(doc)
        pos = {str(k): i for i, k in enumerate(doc_keys)}
        missing = [str(k) for k in keys if str(k) not in pos]
        if missing or len(doc_keys) != len(keys):
            raise ConfigError(f"{path}: memberships do not match the series table")
        res.labels = res.labels[[pos[str(k)] for k in keys]]
        if res.soft is not None:
            res.soft = res.soft[[pos[str(k)] for k in keys]]
        runs.append((int(path.parent.name.split("_", 1)[0]), MethodSpec(**doc["spec"]), res))
    return runs


def render_figures(
    writer: ArtifactWriter,
    runs: list[tuple[int, MethodSpec, ClusteringResult]],
    series: dict,
    raw: SeriesMatrix,
    std: SeriesMatrix,
    cfg: RunConfig,
) -> None:
    keys = raw.keys
    x_labels = _time_labels(series[keys[0]])
    totals = {k: float(series[k].total.sum()) for k in keys}
    highlight = [ODKey.parse(h) for h in cfg.highlight]
    raw_by_key = {k: raw.values[i] for i, k in enumerate(keys)}
    sizes = []
    for idx, spec, res in runs:
        data = std if spec.normalize else raw
        name = f"{DISPLAY_NAMES[spec.name]} {clusters_label(spec, res)}{' norm.' if spec.normalize else ''}"
        groups = {int(c): data.values[res.labels == c] for c in np.unique(res.labels)}
        prefix = f"figures/{idx:02d}_{spec.slug}"
        writer.text(f"{prefix}_means.svg", figures.plot_cluster_means(groups, x_labels, f"{name}: mean with 95% CI"))
        writer.text(
            f"{prefix}_representatives.svg",
            figures.plot_representatives(
                res.labels, keys, data.values, totals, cfg.top_n, highlight, x_labels, f"{name}: top total pax O&D pairs"
            ),
        )
        if spec.normalize:
            row = {k: i for i, k in enumerate(keys)}
            hits = [h for h in highlight if h in row]
            chosen = int(res.labels[row[hits[0]]]) if hits else int(np.bincount(res.labels).argmax())
            writer.text(
                f"{prefix}_overlay.svg",
                figures.plot_original_magnitude_overlay(res.labels, keys, raw_by_key, chosen, x_labels, highlight),
            )
        sizes.append((name, res.sizes()))
    writer.text("figures/size_distribution.svg", figures.plot_size_distribution(sizes))


@dataclass
class RunOutcome:
    manifest: dict
    results: list = field(default_factory=list)
    reports: list = field(default_factory=list)


def run(cfg: RunConfig, out_dir: str | Path | None = None) -> RunOutcome:
    """Execute the configured pipeline and write all artifacts under ``out_dir``."""
    cfg.validate()
    out = Path(out_dir if out_dir is not None else cfg.resolve(cfg.out_dir))
    writer = ArtifactWriter(out)

    with _stage("ingest"):
        ledger, parse_stats = ingest_files(cfg)
        categories = load_categories(cfg)
    with _stage("shares"):
        span = (tuple(cfg.span[0]), tuple(cfg.span[1]))
        quarterly = build_all_series(ledger, span)
        keys = select_pairs(quarterly, cfg, categories)
        series, excluded = analysis_series(quarterly, keys, cfg)
        raw, std = series_matrices(series)
        known = set(raw.keys)
        for h in cfg.highlight:
            if ODKey.parse(h) not in known:
                raise ConfigError(f"highlight key {h} is not among the clustered O&D pairs")
    writer.text("series_quarterly.csv", _csv(write_series_table, [quarterly[k] for k in keys]))
    writer.text("series_yearly.csv" if cfg.yearly else "series_analysis.csv", _csv(write_series_table, [series[k] for k in raw.keys]))
    writer.text("selected.csv", "origin,dest\n" + "".join(f"{k.origin},{k.dest}\n" for k in keys))
    if cfg.segment_files:
        with _stage("ingest"):
            writer.text("segments_yearly.csv", segment_summary(cfg, known))

    cache = DistanceCache(cfg)
    runs = cluster_stage(cfg, raw, std, cache)
    for idx, spec, res in runs:
        writer.text(membership_path(idx, spec), membership_document(spec, res, raw.keys))
    rows = evaluate_stage(cfg, runs, raw, std, cache)
    writer.text("metrics.csv", _csv(write_metrics_table, rows))
    writer.text("metrics_details.csv", _csv(write_metrics_details, rows))
    with _stage("report"):
        render_figures(writer, runs, series, raw, std, cfg)

    manifest = writer.manifest(
        {
            "config_sha256": hashlib.sha256(cfg.dumps().encode()).hexdigest(),
            "inputs": parse_stats,
            "n_pairs_total": len(quarterly),
            "n_pairs_selected": len(keys),
            "n_pairs_clustered": len(raw.keys),
            "excluded_incomplete": excluded,
        }
    )
    (out / "manifest.json").write_text(_dump_json(manifest), encoding="utf-8")
    return RunOutcome(manifest, [r for _, _, r in runs], [row["report"] for row in rows])
