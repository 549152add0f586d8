import argparse
import json
import math
import re

import pytest

from splitlock.bench import structurally_equal
from splitlock.cli import (
    CSV_COLUMNS,
    _parse_grid,
    _parse_thresholds,
    main,
)
from splitlock.layout import BEOLSecret, FEOLView, recombine
from splitlock.locking import load_locked_design

from conftest import C17_TEXT


# -- argument parsing helpers ------------------------------------------------------


def test_parse_grid():
    assert _parse_grid("auto") is None
    assert _parse_grid("8x6") == (8, 6)
    for bad in ("8", "0x4", "ax2", "4x-1"):
        with pytest.raises(argparse.ArgumentTypeError):
            _parse_grid(bad)


def test_parse_thresholds():
    assert _parse_thresholds("default") is None
    assert _parse_thresholds("2,4,inf") == (2.0, 4.0, math.inf)
    assert _parse_thresholds("1.5, 3, inf") == (1.5, 3.0, math.inf)
    with pytest.raises(argparse.ArgumentTypeError):
        _parse_thresholds("2,none")


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_subcommand_required():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


# -- single stages -----------------------------------------------------------------


def run_lock(out_dir, k=4, seed=3, name="c17"):
    return main(
        ["lock", "--input", name, "--k", str(k), "--seed", str(seed),
         "--out-dir", str(out_dir)]
    )


def test_lock_writes_loadable_design(tmp_path, capsys):
    assert run_lock(tmp_path) == 0
    design = load_locked_design(
        tmp_path / "locked.bench", tmp_path / "locked.json"
    )
    assert design.k == 4
    out = capsys.readouterr().out
    assert "locked c17" in out
    assert "k=4" in out


def test_lock_accepts_bench_path(tmp_path):
    source = tmp_path / "mine.bench"
    source.write_text(C17_TEXT)
    assert run_lock(tmp_path, name=str(source)) == 0
    design = load_locked_design(
        tmp_path / "locked.bench", tmp_path / "locked.json"
    )
    assert design.netlist.name == "mine_locked"


def stage_args(tmp_path, extra):
    return extra + [
        "--locked", str(tmp_path / "locked.bench"),
        "--sidecar", str(tmp_path / "locked.json"),
        "--out-dir", str(tmp_path),
    ]


def test_stage_chain(tmp_path, capsys):
    assert run_lock(tmp_path) == 0
    assert main(stage_args(tmp_path, ["layout", "--split-layer", "2"])) == 0
    assert main(
        stage_args(tmp_path, ["split", "--layout", str(tmp_path / "layout.json")])
    ) == 0
    assert main(
        ["attack", "--feol", str(tmp_path / "feol.json"),
         "--out-dir", str(tmp_path)]
    ) == 0
    assert main(
        ["eval", "--input", "c17",
         "--locked", str(tmp_path / "locked.bench"),
         "--sidecar", str(tmp_path / "locked.json"),
         "--feol", str(tmp_path / "feol.json"),
         "--beol", str(tmp_path / "beol.json"),
         "--inferred", str(tmp_path / "inferred.json"),
         "--out-dir", str(tmp_path)]
    ) == 0
    for name in (
        "layout.json", "feol.json", "beol.json", "inferred.json",
        "report.json", "report.csv",
    ):
        assert (tmp_path / name).is_file()
    design = load_locked_design(
        tmp_path / "locked.bench", tmp_path / "locked.json"
    )
    feol = FEOLView.from_dict(json.loads((tmp_path / "feol.json").read_text()))
    secret = BEOLSecret.from_dict(
        json.loads((tmp_path / "beol.json").read_text())
    )
    assert structurally_equal(recombine(feol, secret), design.netlist)
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2
    fields = lines[1].split(",")
    assert fields[0] == "c17"
    assert fields[1] == "secure"
    for value in fields[4:]:
        assert re.fullmatch(r"\d+\.\d{6}", value)
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["row"]["ccr_regular"] == float(fields[4])
    assert report["config"]["unresolved_fill"] == "TIE0"


def test_split_layer_override(tmp_path):
    assert run_lock(tmp_path) == 0
    assert main(stage_args(tmp_path, ["layout", "--split-layer", "2"])) == 0
    assert main(
        stage_args(tmp_path, ["split", "--layout", str(tmp_path / "layout.json")])
    ) == 0
    deep = json.loads((tmp_path / "beol.json").read_text())
    assert main(
        stage_args(
            tmp_path,
            ["split", "--layout", str(tmp_path / "layout.json"),
             "--split-layer", "1"],
        )
    ) == 0
    shallow = json.loads((tmp_path / "beol.json").read_text())
    feol = FEOLView.from_dict(json.loads((tmp_path / "feol.json").read_text()))
    assert feol.split_layer == 1
    assert set(map(tuple, deep["edges"])) <= set(map(tuple, shallow["edges"]))


# -- error handling ----------------------------------------------------------------


def test_unknown_benchmark_fails_cleanly(tmp_path, capsys):
    assert run_lock(tmp_path, name="c9999") == 1
    assert "error:" in capsys.readouterr().err


def test_too_small_grid_fails_cleanly(tmp_path, capsys):
    assert run_lock(tmp_path) == 0
    code = main(stage_args(tmp_path, ["layout", "--grid", "3x3"]))
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_missing_artifact_fails_cleanly(tmp_path, capsys):
    code = main(
        ["attack", "--feol", str(tmp_path / "feol.json"),
         "--out-dir", str(tmp_path)]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_oversized_key_fails_cleanly(tmp_path, capsys):
    assert run_lock(tmp_path, k=500) == 1
    assert "error:" in capsys.readouterr().err


# -- the pipeline ------------------------------------------------------------------


def pipeline_args(out_dir, extra=()):
    return [
        "pipeline", "--input", "c17", "--k", "4", "--seeds", "2",
        "--split-layer", "2", "--samples", "256",
        "--out-dir", str(out_dir), *extra,
    ]


def test_pipeline_report_and_runs(tmp_path, capsys):
    code = main(
        pipeline_args(tmp_path, ["--random-trials", "5", "--keep-runs"])
    )
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert len(report["runs"]) == 2
    assert report["config"]["benchmark"] == "c17"
    assert report["config"]["seeds"] == 2
    assert set(report["aggregate"]) == {
        "ccr_regular_mean", "ccr_key_phys_mean", "ccr_key_log_mean",
        "hd_mean", "oer_percent", "pnr_mean",
    }
    random_key = report["random_key"]
    assert random_key["trials"] == 5
    assert 0.0 <= random_key["oer_percent"] <= 100.0
    assert random_key["full_physical_recoveries"] <= 5
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert len(lines) == 3
    for r in range(2):
        run_dir = tmp_path / f"run{r:03d}"
        for name in (
            "locked.bench", "locked.json", "layout.json",
            "feol.json", "beol.json", "inferred.json",
        ):
            assert (run_dir / name).is_file()


def test_pipeline_is_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(pipeline_args(a)) == 0
    assert main(pipeline_args(b)) == 0
    assert (a / "report.json").read_text() == (b / "report.json").read_text()
    assert (a / "report.csv").read_text() == (b / "report.csv").read_text()
