import math

import pytest

from spinecho.dsl import parse_sequence, render_event, render_sequence
from spinecho.errors import SequenceError, SequenceSyntaxError
from spinecho.sequence import (
    Delay,
    EchoMarker,
    Pulse,
    PulseWidth,
    build_ostroff_waugh,
    build_table1,
)
from spinecho.spinops import SpinAxis

BUILT = {
    "cpmg": build_table1("CPMG", 36e-6, 4),
    "cp": build_table1("CP", 36e-6, 4),
    "apcp": build_table1("APCP", 36e-6, 4),
    "apcpmg": build_table1("APCPMG", 36e-6, 4),
    "ostroff_waugh": build_ostroff_waugh(5e-6, 3),
}


def same_events(a, b):
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert type(x) is type(y)
        if isinstance(x, Pulse):
            assert math.isclose(x.angle, y.angle, rel_tol=1e-14)
            assert x.phase.label == y.phase.label
            assert x.width is y.width
        else:
            assert x == y


@pytest.mark.parametrize("name", sorted(BUILT))
def test_render_matches_golden(name, golden):
    text = (golden / f"{name}.seq").read_text().strip()
    assert render_sequence(BUILT[name]) == text


@pytest.mark.parametrize("name", sorted(BUILT))
def test_parse_golden(name, golden):
    seq = parse_sequence((golden / f"{name}.seq").read_text())
    built = BUILT[name]
    assert seq.repeats == built.repeats
    same_events(seq.prologue, built.prologue)
    same_events(seq.cycle, built.cycle)
    assert render_sequence(seq) == render_sequence(built)


def test_comments_units_and_degrees():
    seq = parse_sequence(
        "# a short train\n"
        "90(X) ;   # excitation\n"
        "[ d(2us) 180(-45) d(0.002ms) echo(y) ]*3\n"
    )
    assert seq.repeats == 3
    first, pulse, second, marker = seq.cycle
    assert first == Delay(2e-6)
    assert math.isclose(second.tau, 2e-6)
    assert pulse.phase.label == "315"
    assert pulse.width is PulseWidth.FINITE
    assert marker == EchoMarker(SpinAxis.parse("Y"))
    assert seq.prologue[0].width is PulseWidth.DELTA


def test_no_prologue():
    seq = parse_sequence("[ d(1u) 180(Y) d(1u) echo(+Y) ]*1")
    assert seq.prologue == ()
    assert render_sequence(seq) == "[ d(1u) 180(Y) d(1u) echo(+Y) ]*1"


def test_render_event_forms():
    assert render_event(Pulse(math.pi, SpinAxis(math.radians(45)))) == (
        "180(45)")
    assert render_event(Delay(0.0)) == "d(0)"
    assert render_event(Delay(1.5e-3)) == "d(1.5m)"
    assert render_event(EchoMarker(SpinAxis.parse("-X"))) == "echo(-X)"


def test_error_reports_position():
    with pytest.raises(SequenceSyntaxError) as info:
        parse_sequence("90(X) ; [ d(36u) 180(Q) ]*2")
    assert (info.value.line, info.value.column) == (1, 22)


def test_error_on_second_line():
    with pytest.raises(SequenceSyntaxError) as info:
        parse_sequence("90(X) ;\n[ d(1u) echo(+Y) ]*x")
    assert (info.value.line, info.value.column) == (2, 20)
    assert "repeat count" in str(info.value)


@pytest.mark.parametrize("text", [
    "[ d(3q) echo(Y) ]*1",
    "[ d(1u) @ echo(Y) ]*1",
    "d(1u) ; [ echo(Y) ]*1",
    "[ d(1u) echo(Y) ]*1 extra",
    "[ d(1u) echo(Y)",
    "[ 0(Y) echo(Y) ]*1",
])
def test_syntax_errors(text):
    with pytest.raises(SequenceSyntaxError):
        parse_sequence(text)


def test_cycle_without_echo_is_rejected():
    with pytest.raises(SequenceError):
        parse_sequence("[ d(1u) 180(Y) ]*2")
