"""
Command-line entry point.

Subcommands mirror the pipeline stages and exchange plain CSV/JSON files::

    localshare ingest   MARKET.csv... -o out/        -> out/ledger.csv
    localshare series   out/ledger.csv -o out/       -> out/series_quarterly.csv
    localshare select   out/series_quarterly.csv --categories cats.csv -o out/
                                                     -> out/selected.csv, out/series_yearly.csv
    localshare cluster  out/series_yearly.csv --config cfg.json -o out/
    localshare evaluate out/series_yearly.csv -o out/   -> out/metrics.csv
    localshare report   out/series_yearly.csv -o out/   -> out/figures/*.svg
    localshare run      --config cfg.json -o out/     (all of the above plus manifest.json)
    localshare fixture  -o dir/                        (write the bundled synthetic extract)
"""

from __future__ import annotations

import argparse
import io
import logging
import shutil
import sys
from importlib import resources
from pathlib import Path

from . import ingest as ing
from .errors import LocalShareError
from .pipeline import RunConfig, comparison_grid
from .pipeline import stages as pl
from .shares import ODKey, build_all_series, read_series_table, write_series_table

log = logging.getLogger("localshare")

FIXTURE_FILES = ("fixture_market.csv", "fixture_categories.csv", "fixture_segments.csv", "fixture_config.json")


def _span(text: str):
    try:
        a, b = text.split(":")
        return [[int(p) for p in s.upper().split("Q")] for s in (a, b)]
    except ValueError:
        raise argparse.ArgumentTypeError("span must look like 2006Q1:2024Q3") from None


def _load_config(args, **overrides) -> RunConfig:
    if args.config:
        cfg = RunConfig.load(args.config)
    else:
        cfg = RunConfig(market_files=overrides.pop("market_files", None) or [], methods=comparison_grid())
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    if args.strict:
        cfg.strict = True
    if args.tab:
        cfg.delimiter = "\t"
    if args.seed is not None:
        for m in cfg.methods:
            m.seed = args.seed
    if getattr(args, "cut_height", None) is not None:
        for m in cfg.methods:
            if m.name == "hc-dtw":
                m.params["cut_height"] = args.cut_height
    return cfg


def _out(args, cfg: RunConfig | None = None) -> Path:
    if args.out:
        return Path(args.out)
    return cfg.resolve(cfg.out_dir) if cfg is not None else Path("run")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    print(path)


def _read_analysis(path: str):
    with open(path, encoding="utf-8", newline="") as fh:
        series = read_series_table(fh)
    return series, *pl.series_matrices(series)


def cmd_ingest(args) -> None:
    # command-line paths are relative to the working directory, not the config
    cfg = _load_config(args, market_files=[str(Path(m).resolve()) for m in args.market] or None)
    if not cfg.market_files:
        raise LocalShareError("no market files given")
    ledger, stats = pl.ingest_files(cfg)
    for name, s in stats.items():
        log.info("%s: %d records, %d skipped", name, s["records"], s["skipped"])
    buf = io.StringIO()
    ledger.write_csv(buf)
    _write(_out(args, cfg) / "ledger.csv", buf.getvalue())


def cmd_series(args) -> None:
    cfg = _load_config(args, market_files=["-"], span=args.span)
    with open(args.ledger, encoding="utf-8", newline="") as fh:
        ledger = ing.LegCountLedger.read_csv(fh)
    series = build_all_series(ledger, (tuple(cfg.span[0]), tuple(cfg.span[1])))
    buf = io.StringIO()
    write_series_table(series.values(), buf)
    _write(_out(args, cfg) / "series_quarterly.csv", buf.getvalue())


def cmd_select(args) -> None:
    cfg = _load_config(args, market_files=["-"], categories=args.categories and str(Path(args.categories).resolve()))
    with open(args.series, encoding="utf-8", newline="") as fh:
        quarterly = read_series_table(fh)
    keys = pl.select_pairs(quarterly, cfg, pl.load_categories(cfg))
    series, excluded = pl.analysis_series(quarterly, keys, cfg)
    for k in excluded:
        log.warning("%s excluded: missing points in the analysis span", k)
    out = _out(args, cfg)
    _write(out / "selected.csv", "origin,dest\n" + "".join(f"{k.origin},{k.dest}\n" for k in keys))
    buf = io.StringIO()
    write_series_table([series[k] for k in sorted(series)], buf)
    _write(out / ("series_yearly.csv" if cfg.yearly else "series_analysis.csv"), buf.getvalue())


def cmd_cluster(args) -> None:
    cfg = _load_config(args, market_files=["-"])
    _, raw, std = _read_analysis(args.series)
    runs = pl.cluster_stage(cfg, raw, std, pl.DistanceCache(cfg))
    out = _out(args, cfg)
    for idx, spec, res in runs:
        _write(out / pl.membership_path(idx, spec), pl.membership_document(spec, res, raw.keys))


def cmd_evaluate(args) -> None:
    cfg = _load_config(args, market_files=["-"])
    _, raw, std = _read_analysis(args.series)
    out = _out(args, cfg)
    runs = pl.read_memberships(args.run or out, raw.keys)
    if not runs:
        raise LocalShareError(f"no memberships under {args.run or out}/methods")
    rows = pl.evaluate_stage(cfg, runs, raw, std, pl.DistanceCache(cfg))
    _write(out / "metrics.csv", pl._csv(pl.write_metrics_table, rows))
    _write(out / "metrics_details.csv", pl._csv(pl.write_metrics_details, rows))


def cmd_report(args) -> None:
    cfg = _load_config(args, market_files=["-"])
    if args.highlight:
        cfg.highlight = args.highlight
    series, raw, std = _read_analysis(args.series)
    out = _out(args, cfg)
    runs = pl.read_memberships(args.run or out, raw.keys)
    if not runs:
        raise LocalShareError(f"no memberships under {args.run or out}/methods")
    known = set(raw.keys)
    for h in cfg.highlight:
        if ODKey.parse(h) not in known:
            raise LocalShareError(f"highlight key {h} is not among the clustered O&D pairs")
    writer = pl.ArtifactWriter(out)
    pl.render_figures(writer, runs, series, raw, std, cfg)
    for p in writer.paths:
        print(p)


def cmd_run(args) -> None:
    if not args.config:
        raise LocalShareError("run needs --config")
    cfg = _load_config(args)
    outcome = pl.run(cfg, _out(args, cfg))
    print(_out(args, cfg) / "manifest.json")
    log.info("%d artifacts", len(outcome.manifest["artifacts"]))


def cmd_fixture(args) -> None:
    out = Path(args.out or "fixture")
    out.mkdir(parents=True, exist_ok=True)
    data = resources.files("localshare") / "data"
    for name in FIXTURE_FILES:
        with resources.as_file(data / name) as src:
            shutil.copyfile(src, out / name)
        print(out / name)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("-o", "--out", help="output directory")
    common.add_argument("--seed", type=int, help="override every method's seed")
    common.add_argument("--strict", action="store_true", help="abort on the first malformed row")
    common.add_argument("--tab", action="store_true", help="input files are tab-delimited")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="localshare", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="itinerary files -> final-leg count ledger")
    p.add_argument("market", nargs="*")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("series", parents=[common], help="ledger -> quarterly local-share series")
    p.add_argument("ledger")
    p.add_argument("--span", type=_span, help="e.g. 2006Q1:2024Q3")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("select", parents=[common], help="filter pairs and aggregate to years")
    p.add_argument("series")
    p.add_argument("--categories", help="airport category table")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("cluster", parents=[common], help="run the configured methods")
    p.add_argument("series", help="analysis series table (series_yearly.csv)")
    p.add_argument("--cut-height", type=float, help="cut HC trees at this height instead of at k clusters")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", parents=[common], help="validity indices -> metrics.csv")
    p.add_argument("series")
    p.add_argument("--run", help="directory holding methods/*/membership.json (default: --out)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", parents=[common], help="SVG figures")
    p.add_argument("series")
    p.add_argument("--run", help="directory holding methods/*/membership.json (default: --out)")
    p.add_argument("--highlight", nargs="*", help="O&D keys to draw in the accent colour")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", parents=[common], help="whole pipeline with manifest")
    p.add_argument("--cut-height", type=float, help="cut HC trees at this height instead of at k clusters")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fixture", parents=[common], help="copy the bundled synthetic extract and config")
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (LocalShareError, OSError) as exc:
        print(f"localshare {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
