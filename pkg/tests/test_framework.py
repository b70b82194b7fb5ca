import math

import pytest

from spinecho.assertions import (
    AssertError,
    assert_above,
    assert_below,
    assert_within,
)
from spinecho.errors import ConfigError, SnapshotError, SpinEchoError
from spinecho.framework import CheckCase, CheckSuite, ConsoleReporter
from spinecho.inspect import ArtifactKind, detect_artifact_kind, read_ppm
from spinecho.result import CSV_COLUMNS


def test_assertion_factories():
    values = {"a": 1.0, "bad": math.nan}
    assert_below("a", 2.0).check(values)
    assert_above("a", 0.5).check(values)
    assert_within("a", 1.0, 1.0).check(values)

    with pytest.raises(AssertError):
        assert_below("a", 1.0).check(values)
    with pytest.raises(AssertError):
        assert_below("bad", 1.0).check(values)
    with pytest.raises(AssertError, match="not measured"):
        assert_above("missing", 0.0).check(values)


def test_assertion_names():
    assert assert_below("trace_drift", 1e-10).name == \
        "trace_drift_below_1e-10"
    assert assert_within("r", 6.0, 10.0).name == "r_in_6_10"


def test_case_collects_failures():
    case = CheckCase("demo", lambda: {"x": 3.0},
                     [assert_below("x", 1.0), assert_above("x", 0.0)])
    report = case.run()
    assert not report.ok
    assert report.values == {"x": 3.0}
    assert len(report.errors) == 1
    assert report.errors[0].startswith("[x_below_1]")


def test_case_reports_measure_errors():
    def broken():
        raise SpinEchoError("no couplings")

    report = CheckCase("broken", broken, [assert_below("x", 1.0)]).run()
    assert not report.ok
    assert report.errors == ["[measure] SpinEchoError: no couplings"]


def test_suite_and_reporter(capsys):
    suite = CheckSuite("demo", [
        CheckCase("good", lambda: {"x": 0.5}, [assert_below("x", 1.0)]),
        CheckCase("bad", lambda: {"x": 2.0, "y": 0.125},
                  [assert_below("x", 1.0)]),
    ])
    report = suite.run()
    assert not report.ok()
    assert [r.name for r in report.failures()] == ["bad"]
    assert suite.run(only=["good"]).ok()

    assert ConsoleReporter().render(report) == 1
    out = capsys.readouterr().out
    assert "== Suite: demo ==" in out
    assert "- PASS good" in out
    assert "- FAIL bad" in out
    assert "x = 2" in out
    assert "x = 0.5" not in out
    assert "== Result: 1/2 passed ==" in out
    assert out.rstrip().endswith("failed bad: x=2, y=0.125")

    assert ConsoleReporter(verbose=True).render(suite.run(["good"])) == 0
    out = capsys.readouterr().out
    assert "x = 0.5" in out
    assert "failed" not in out


def test_suite_rejects_unknown_names():
    suite = CheckSuite("demo", [
        CheckCase("good", lambda: {"x": 0.5}, [assert_below("x", 1.0)]),
    ])
    with pytest.raises(ConfigError) as info:
        suite.run(only=["good", "nope"])
    assert info.value.path == "--only"
    assert "nope" in str(info.value)


def test_reporter_names_checks_without_values(capsys):
    def broken():
        raise SpinEchoError("no couplings")

    report = CheckSuite("demo", [
        CheckCase("broken", broken, [assert_below("x", 1.0)]),
    ]).run()
    assert ConsoleReporter().render(report) == 1
    out = capsys.readouterr().out
    assert "failed broken: no values measured" in out


def test_detect_csv_and_unknown(tmp_path):
    csv_path = tmp_path / "a.csv"
    csv_path.write_text(",".join(CSV_COLUMNS) + "\n1,0,1,0,1\n")
    assert detect_artifact_kind(csv_path).kind is ArtifactKind.ECHO_CSV
    other = tmp_path / "b.txt"
    other.write_text("hello")
    assert detect_artifact_kind(other).kind is ArtifactKind.UNKNOWN


def test_read_ppm(tmp_path):
    path = tmp_path / "img.ppm"
    path.write_bytes(b"P6\n# two by one\n2 1\n255\n" + bytes(range(6)))
    pixels = read_ppm(path)
    assert pixels.shape == (1, 2, 3)
    assert list(pixels[0, 1]) == [3, 4, 5]


@pytest.mark.parametrize("data", [
    b"P6\n2 1\n255\n" + bytes(5),
    b"P3\n2 1\n255\n" + bytes(6),
    b"P6\n2 1\n65535\n" + bytes(12),
    b"P6\n2 x\n255\n" + bytes(6),
    b"P6\n2",
])
def test_read_ppm_rejects(tmp_path, data):
    path = tmp_path / "bad.ppm"
    path.write_bytes(data)
    with pytest.raises(SnapshotError):
        read_ppm(path)
