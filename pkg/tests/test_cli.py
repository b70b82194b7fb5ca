import csv
import hashlib
import json

import pytest

from spinecho.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    build_parser,
    git_blob_sha1,
    main,
    resolve_runs,
)
from spinecho.inspect import ArtifactKind, detect_artifact_kind
from spinecho.result import CSV_COLUMNS

BASE = {
    "lattice": {"name": "diamond"},
    "disorder": {"abundance": 0.0467, "n_spins": 3, "gamma_scale": 5.0,
                 "offset_fwhm": 290.0},
    "sequence": {"builder": "cpmg", "tau": 20e-6, "n_echoes": 4},
    "model": {"kind": "exact_finite", "omega1_over_2pi": 40000.0},
    "n_dr": 2,
    "master_seed": 7,
}


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(BASE))
    return str(path)


def read_rows(path):
    with path.open(newline="") as f:
        return list(csv.reader(f))


def test_git_blob_sha1():
    data = b"hello\n"
    expected = hashlib.sha1(b"blob 6\0hello\n").hexdigest()
    assert git_blob_sha1(data) == expected


def test_run_writes_csv_and_sidecar(config, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", config, "--out", str(out)]) == EXIT_OK

    rows = read_rows(out / "small.csv")
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4"]
    assert detect_artifact_kind(out / "small.csv").kind \
        is ArtifactKind.ECHO_CSV

    meta = json.loads((out / "small.json").read_text())
    assert meta["command"] == "run"
    assert meta["n_realizations"] == 2
    assert len(meta["seeds"]) == 2
    assert len(meta["input_sha1"]) == 40
    assert meta["config"]["model"]["kind"] == "exact_finite"


def test_run_is_reproducible(config, tmp_path):
    for name in ("a", "b"):
        assert main(["run", "--config", config,
                     "--out", str(tmp_path / name)]) == EXIT_OK
    first = (tmp_path / "a" / "small.csv").read_text()
    assert first == (tmp_path / "b" / "small.csv").read_text()

    assert main(["run", "--config", config, "--seed", "8",
                 "--out", str(tmp_path / "c")]) == EXIT_OK
    assert first != (tmp_path / "c" / "small.csv").read_text()


def test_overrides_and_csv_name(config, tmp_path):
    argv = ["run", "--config", config, "--out", str(tmp_path),
            "--set", "model.kind=delta", "--set", "output.csv=delta.csv"]
    assert main(argv) == EXIT_OK
    meta = json.loads((tmp_path / "delta.json").read_text())
    assert meta["config"]["model"]["kind"] == "delta"
    assert meta["csv"] == "delta.csv"


def test_resolve_runs_applies_flags(config):
    args = build_parser().parse_args(
        ["run", "--config", config, "--workers", "3", "--seed", "11"])
    (run,) = resolve_runs(args)
    assert run.workers == 3
    assert run.master_seed == 11


@pytest.mark.parametrize("extra", [
    ["--set", "n_dr=0"],
    ["--set", "disorder.bogus=1"],
    ["--set", "disorder.n_spins=13"],
    ["--run", "nope"],
    ["--set", "output.snapshot_echoes=[9]"],
])
def test_config_errors_exit_2(config, tmp_path, extra):
    argv = ["run", "--config", config, "--out", str(tmp_path)] + extra
    assert main(argv) == EXIT_CONFIG


def test_missing_preset_exits_2(tmp_path):
    assert main(["run", "--config", "no_such_preset",
                 "--out", str(tmp_path)]) == EXIT_CONFIG


def test_runtime_errors_exit_3(tmp_path):
    bad = tmp_path / "bad.seq"
    bad.write_text("90(X) ; [ d(10u) 180(Q) echo ]*2")
    data = dict(BASE, sequence={"builder": "dsl", "dsl_file": str(bad)})
    path = tmp_path / "dsl.json"
    path.write_text(json.dumps(data))
    assert main(["run", "--config", str(path),
                 "--out", str(tmp_path)]) == EXIT_RUNTIME


def test_list_presets(capsys):
    assert main(["list-presets"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in ("fig1a_sim", "fig2", "fig3", "fig4", "ostroff_waugh"):
        assert name in out


def test_aht_report(config, tmp_path):
    assert main(["aht", "--config", config, "--out", str(tmp_path)]) \
        == EXIT_OK
    report = json.loads((tmp_path / "small_aht.json").read_text())
    assert report["sequence"] == "CPMG"
    assert report["unroll"] == 1
    assert [row["scale"] for row in report["defect_scaling"]] == \
        [1.0, 0.5, 0.25]
    residuals = report["closed_form_residuals"]
    assert residuals["h0"] < 1e-10
    assert residuals["h1"] < 1e-5


def test_aht_report_for_ostroff_waugh(config, tmp_path):
    argv = ["aht", "--config", config, "--out", str(tmp_path),
            "--set", "sequence.builder=ostroff_waugh"]
    assert main(argv) == EXIT_OK
    report = json.loads((tmp_path / "small_aht.json").read_text())
    assert report["half_yy_residual"] < 1e-10


def test_snapshot_files(config, tmp_path):
    argv = ["snapshot", "--config", config, "--out", str(tmp_path),
            "--set", "output.snapshot_echoes=[2]"]
    assert main(argv) == EXIT_OK
    meta = json.loads((tmp_path / "small_snapshots.json").read_text())
    assert len(meta["files"]) == 8
    for name in meta["files"]:
        assert (tmp_path / name).is_file()
    assert "small_exact_echo0002_averaged.ppm" in meta["files"]
    assert "small_delta_echo0002_0.json" in meta["files"]


def test_snapshot_with_empty_schedule(config, tmp_path):
    assert main(["snapshot", "--config", config,
                 "--out", str(tmp_path)]) == EXIT_OK
    assert not list(tmp_path.glob("*.ppm"))


def test_analytic_command(tmp_path):
    data = dict(BASE, detection="central",
                analytic={"t_max": 2e-3, "points": 5})
    data["disorder"] = dict(BASE["disorder"], n_spins=40)
    path = tmp_path / "ising.json"
    path.write_text(json.dumps(data))
    out = tmp_path / "out"
    assert main(["analytic", "--config", str(path),
                 "--out", str(out)]) == EXIT_OK
    rows = read_rows(out / "ising.csv")
    assert len(rows) == 6
    assert float(rows[-1][1]) == pytest.approx(2e-3)
    meta = json.loads((out / "ising.json").read_text())
    assert meta["command"] == "analytic"
