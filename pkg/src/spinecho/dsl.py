"""Text form of pulse sequences.

    sequence := [pulse* ";"] block
    block    := "[" event* "]" "*" INT
    event    := ANGLE "(" PHASE ")" | "d(" TIME ")" | "echo(" PHASE ")"

ANGLE is in degrees, TIME takes an optional unit suffix (s, m/ms, u/us,
n/ns; seconds if omitted) and PHASE is X, Y with an optional sign or a
signed angle in degrees.  Whitespace is free and ``#`` starts a comment.

    90(X) ; [ d(36u) 180(Y) d(36u) echo(+Y) ]*48
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import Decimal
from typing import List, Optional, Tuple

from .errors import SequenceError, SequenceSyntaxError
from .sequence import (
    Delay,
    EchoMarker,
    Pulse,
    PulseWidth,
    Sequence,
    SequenceEvent,
)
from .spinops import SpinAxis

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_]+)
  | (?P<punct>[()\[\];*+-])
    """,
    re.VERBOSE,
)

_TIME_UNITS = {
    "s": Decimal(1),
    "ms": Decimal("1e-3"), "m": Decimal("1e-3"),
    "us": Decimal("1e-6"), "u": Decimal("1e-6"),
    "ns": Decimal("1e-9"), "n": Decimal("1e-9"),
}
# rendering: largest unit with value >= 1
_RENDER_UNITS = (("s", 1.0), ("m", 1e-3), ("u", 1e-6), ("n", 1e-9))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SequenceSyntaxError(
                f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Optional[Token] = None
              ) -> SequenceSyntaxError:
        tok = tok or self.tok
        found = tok.text or "end of input"
        return SequenceSyntaxError(f"{message}, found {found!r}", self.text,
                                   tok.offset)

    def advance(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            raise self.error(f"expected {text!r}")
        return self.advance()

    # sequence := [pulse* ";"] block
    def sequence(self) -> Sequence:
        prologue: List[SequenceEvent] = []
        if self.tok.text != "[":
            while self.tok.text != ";":
                if self.tok.kind != "number":
                    raise self.error("expected a prologue pulse or ';'")
                pulse = self.pulse()
                prologue.append(
                    Pulse(pulse.angle, pulse.phase, PulseWidth.DELTA))
            self.expect(";")
        cycle, repeats = self.block()
        if self.tok.kind != "end":
            raise self.error("expected end of input")
        try:
            return Sequence(tuple(prologue), tuple(cycle), repeats)
        except SequenceError as exc:
            raise SequenceSyntaxError(str(exc), self.text, 0) from exc

    def block(self) -> Tuple[List[SequenceEvent], int]:
        self.expect("[")
        events: List[SequenceEvent] = []
        while self.tok.text != "]":
            if self.tok.kind == "end":
                raise self.error("expected ']'")
            events.append(self.event())
        self.expect("]")
        self.expect("*")
        tok = self.tok
        if tok.kind != "number" or not tok.text.isdigit():
            raise self.error("expected an integer repeat count")
        self.advance()
        return events, int(tok.text)

    def event(self) -> SequenceEvent:
        tok = self.tok
        if tok.kind == "number":
            return self.pulse()
        if tok.kind == "ident" and tok.text.lower() == "d":
            self.advance()
            self.expect("(")
            tau = self.time()
            self.expect(")")
            return Delay(tau)
        if tok.kind == "ident" and tok.text.lower() == "echo":
            self.advance()
            self.expect("(")
            phase = self.phase()
            self.expect(")")
            return EchoMarker(phase)
        raise self.error("expected a pulse, 'd(...)' or 'echo(...)'")

    def pulse(self) -> Pulse:
        tok = self.advance()
        degrees = float(tok.text)
        if degrees <= 0:
            raise self.error("pulse angle must be positive", tok)
        self.expect("(")
        phase = self.phase()
        self.expect(")")
        return Pulse(math.pi * degrees / 180.0, phase)

    def phase(self) -> SpinAxis:
        sign = ""
        if self.tok.kind == "punct" and self.tok.text in ("+", "-"):
            sign = self.advance().text
        tok = self.tok
        if tok.kind == "ident" and tok.text.upper() in ("X", "Y"):
            self.advance()
            return SpinAxis.parse(f"{sign or '+'}{tok.text.upper()}")
        if tok.kind == "number":
            self.advance()
            degrees = float(tok.text)
            if sign == "-":
                degrees = -degrees
            return SpinAxis(math.radians(degrees))
        raise self.error("expected a phase (X, Y or degrees)")

    def time(self) -> float:
        tok = self.tok
        if tok.kind != "number":
            raise self.error("expected a duration")
        self.advance()
        unit = Decimal(1)
        if self.tok.kind == "ident":
            suffix = self.tok.text.lower()
            if suffix not in _TIME_UNITS:
                raise self.error(f"unknown time unit {self.tok.text!r}")
            unit = _TIME_UNITS[suffix]
            self.advance()
        return float(Decimal(tok.text) * unit)


def parse_sequence(text: str) -> Sequence:
    return _Parser(text).sequence()


def _render_phase(axis: SpinAxis, signed: bool) -> str:
    label = axis.label
    if label[0] in "+-":
        return label if signed or label[0] == "-" else label[1:]
    return label


def _render_time(tau: float) -> str:
    if tau == 0:
        return "0"
    for suffix, scale in _RENDER_UNITS:
        if tau / scale >= 1:
            return f"{tau / scale:.12g}{suffix}"
    suffix, scale = _RENDER_UNITS[-1]
    return f"{tau / scale:.12g}{suffix}"


def render_event(event: SequenceEvent) -> str:
    if isinstance(event, Pulse):
        degrees = event.angle * 180.0 / math.pi
        return f"{degrees:.12g}({_render_phase(event.phase, False)})"
    if isinstance(event, Delay):
        return f"d({_render_time(event.tau)})"
    return f"echo({_render_phase(event.expected_phase, True)})"


def render_sequence(seq: Sequence) -> str:
    body = " ".join(render_event(e) for e in seq.cycle)
    block = f"[ {body} ]*{seq.repeats}" if body else f"[ ]*{seq.repeats}"
    if not seq.prologue:
        return block
    head = " ".join(render_event(e) for e in seq.prologue)
    return f"{head} ; {block}"
