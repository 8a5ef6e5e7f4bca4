import json

import pytest

from localshare.cli import FIXTURE_FILES, main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    fx = root / "fx"
    assert main(["fixture", "-o", str(fx)]) == 0
    cfg = json.loads((fx / "fixture_config.json").read_text())
    cfg["methods"] = [
        {"name": "hc-dtw", "k": 4},
        {"name": "som", "rows": 2, "cols": 2, "params": {"epochs": 30}},
    ]
    (fx / "small.json").write_text(json.dumps(cfg))
    return root, fx


def test_fixture_copies_bundled_files(workspace):
    _, fx = workspace
    assert all((fx / name).is_file() for name in FIXTURE_FILES)


def test_staged_commands_match_single_run(workspace):
    root, fx = workspace
    cfg = str(fx / "small.json")
    staged = root / "staged"
    whole = root / "whole"
    o = ["--config", cfg, "-o", str(staged)]
    assert main(["ingest", str(fx / "fixture_market.csv"), *o]) == 0
    assert main(["series", str(staged / "ledger.csv"), *o]) == 0
    assert main(["select", str(staged / "series_quarterly.csv"), *o]) == 0
    yearly = str(staged / "series_yearly.csv")
    assert main(["cluster", yearly, *o]) == 0
    assert main(["evaluate", yearly, *o]) == 0
    assert main(["report", yearly, *o]) == 0
    assert main(["run", "--config", cfg, "-o", str(whole)]) == 0
    # the staged quarterly table covers every pair; the single run keeps the selected ones
    staged_rows = set((staged / "series_quarterly.csv").read_text().splitlines())
    whole_rows = (whole / "series_quarterly.csv").read_text().splitlines()
    assert set(whole_rows) < staged_rows
    for name in (
        "series_yearly.csv",
        "selected.csv",
        "metrics.csv",
        "metrics_details.csv",
        "methods/00_hc-dtw_k4_raw/membership.json",
        "methods/01_som_2x2_raw/membership.json",
        "figures/size_distribution.svg",
    ):
        assert (staged / name).read_bytes() == (whole / name).read_bytes(), name
    assert (whole / "manifest.json").is_file()


def test_seed_override_and_cut_height(workspace, capsys):
    root, fx = workspace
    out = root / "over"
    assert main(["run", "--config", str(fx / "small.json"), "-o", str(out), "--seed", "11", "--cut-height", "0.5"]) == 0
    doc = json.loads((out / "methods/00_hc-dtw_k4_raw/membership.json").read_text())
    assert doc["spec"]["seed"] == 11
    assert doc["spec"]["params"]["cut_height"] == 0.5
    assert str(out / "manifest.json") in capsys.readouterr().out


def test_errors_exit_with_status_one(workspace, capsys):
    root, fx = workspace
    assert main(["run", "-o", str(root / "x")]) == 1
    assert "run needs --config" in capsys.readouterr().err
    assert main(["series", str(root / "missing.csv"), "-o", str(root / "x")]) == 1
    assert main(["report", str(root / "staged/series_yearly.csv"), "-o", str(root / "empty")]) == 1
    assert main(["report", str(root / "staged/series_yearly.csv"), "-o", str(root / "staged"), "--highlight", "ZZZ-YYY"]) == 1
    assert "ZZZ-YYY" in capsys.readouterr().err


def test_bad_span_is_an_argument_error(workspace):
    root, _ = workspace
    with pytest.raises(SystemExit):
        main(["series", "x.csv", "--span", "2006-2024"])


def test_command_line_paths_resolve_from_working_directory(workspace, monkeypatch):
    root, fx = workspace
    monkeypatch.chdir(root)
    o = ["--config", "fx/small.json", "-o", "rel"]
    assert main(["ingest", "fx/fixture_market.csv", *o]) == 0
    assert main(["series", "rel/ledger.csv", *o]) == 0
    assert main(["select", "rel/series_quarterly.csv", "--categories", "fx/fixture_categories.csv", *o]) == 0
    assert (root / "rel/series_yearly.csv").read_bytes() == (root / "staged/series_yearly.csv").read_bytes()
