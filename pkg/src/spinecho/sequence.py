from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Iterable, Iterator, List, Tuple, Union

import numpy as np

from .errors import NonCyclicSequenceError, SequenceError, require
from .spinops import (
    MINUS_X,
    MINUS_Y,
    X,
    Y,
    SpinAxis,
    spin_half_rotation,
)

CYCLIC_TOL = 1e-10
MAX_AHT_UNROLL = 4
BB1_PHASE = math.acos(-0.25)


class PulseWidth(Enum):
    FINITE = auto()  # follows the run's pulse model
    DELTA = auto()  # always instantaneous


@dataclass(frozen=True)
class Pulse:
    angle: float
    phase: SpinAxis
    width: PulseWidth = PulseWidth.FINITE

    def __post_init__(self) -> None:
        require(self.angle > 0 and math.isfinite(self.angle),
                f"pulse angle must be > 0, got {self.angle}", SequenceError)
        require(self.phase.is_transverse,
                "pulse phase must be transverse", SequenceError)

    def duration(self, omega1: float) -> float:
        if self.width is PulseWidth.DELTA:
            return 0.0
        return self.angle / omega1


@dataclass(frozen=True)
class Delay:
    tau: float

    def __post_init__(self) -> None:
        require(self.tau >= 0 and math.isfinite(self.tau),
                f"delay must be >= 0, got {self.tau}", SequenceError)


@dataclass(frozen=True)
class EchoMarker:
    expected_phase: SpinAxis = Y

    def __post_init__(self) -> None:
        require(self.expected_phase.is_transverse,
                "echo phase must be transverse", SequenceError)


SequenceEvent = Union[Pulse, Delay, EchoMarker]


@dataclass(frozen=True)
class Sequence:
    """Prologue pulses, then ``repeats`` copies of ``cycle``."""

    prologue: Tuple[SequenceEvent, ...]
    cycle: Tuple[SequenceEvent, ...]
    repeats: int
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "prologue", tuple(self.prologue))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        require(self.repeats >= 0,
                f"repeats must be >= 0, got {self.repeats}", SequenceError)
        require(
            self.repeats == 0 or self.markers_per_cycle >= 1,
            "a repeated cycle needs at least one echo marker",
            SequenceError,
        )
        require(
            all(isinstance(e, Pulse) for e in self.prologue),
            "the prologue may only contain pulses", SequenceError,
        )

    @property
    def markers_per_cycle(self) -> int:
        return sum(isinstance(e, EchoMarker) for e in self.cycle)

    @property
    def n_echoes(self) -> int:
        return self.markers_per_cycle * self.repeats

    def events(self) -> Iterator[SequenceEvent]:
        yield from self.prologue
        for _ in range(self.repeats):
            yield from self.cycle

    def cycle_time(self, omega1: float = math.inf) -> float:
        """Delays plus finite pulse widths; ``inf`` means delta pulses."""
        return _wall_time(self.cycle, omega1)

    def total_time(self, omega1: float = math.inf) -> float:
        """Elapsed time after the prologue, which is always instantaneous.
        """
        return self.repeats * self.cycle_time(omega1)

    def pulses(self) -> List[Pulse]:
        return [e for e in self.cycle if isinstance(e, Pulse)]

    def with_repeats(self, repeats: int) -> "Sequence":
        return Sequence(self.prologue, self.cycle, repeats, self.name)


def _wall_time(events: Iterable[SequenceEvent], omega1: float) -> float:
    total = 0.0
    for e in events:
        if isinstance(e, Delay):
            total += e.tau
        elif isinstance(e, Pulse) and math.isfinite(omega1):
            total += e.duration(omega1)
    return total


def rf_rotation(events: Iterable[SequenceEvent]) -> np.ndarray:
    """Single-spin product of the rf rotations, later pulses on the left."""
    u = np.eye(2, dtype=complex)
    for e in events:
        if isinstance(e, Pulse):
            u = spin_half_rotation(e.angle, e.phase) @ u
    return u


def net_rotation(u: np.ndarray) -> Tuple[float, Tuple[float, float, float]]:
    """(angle in degrees, unit axis) of an SU(2) matrix, angle in [0, 180].
    """
    half_trace = (u[0, 0] + u[1, 1]).real / 2
    sign = -1.0 if half_trace < 0 else 1.0
    # u = cos(a/2) + 2i sin(a/2) n.I, so n_k sin(a/2) = Im tr(u sigma_k)/2
    nx = (u[0, 1] + u[1, 0]).imag / 2
    ny = (u[0, 1] - u[1, 0]).real / 2
    nz = (u[0, 0] - u[1, 1]).imag / 2
    vec = sign * np.array([nx, ny, nz])
    angle = 2.0 * math.degrees(math.acos(min(1.0, abs(half_trace))))
    norm = float(np.linalg.norm(vec))
    axis = tuple(float(c) for c in vec / norm) if norm > 0 else (
        0.0, 0.0, 1.0)
    return angle, axis


def is_rf_cyclic(events: Iterable[SequenceEvent], tol: float = CYCLIC_TOL
                 ) -> bool:
    u = rf_rotation(events)
    return abs(abs(np.trace(u)) / 2 - 1.0) < tol


def aht_unroll(cycle: Iterable[SequenceEvent],
               max_repeats: int = MAX_AHT_UNROLL) -> int:
    """Smallest k <= max_repeats with cycle**k rf-cyclic."""
    events = tuple(cycle)
    single = rf_rotation(events)
    u = np.eye(2, dtype=complex)
    for k in range(1, max_repeats + 1):
        u = single @ u
        if abs(abs(np.trace(u)) / 2 - 1.0) < CYCLIC_TOL:
            return k
    angle, axis = net_rotation(single)
    raise NonCyclicSequenceError(angle, axis)


# (pi pulse phases, echo phases)
TABLE1 = {
    "CP": ((X, X), (MINUS_Y, Y)),
    "APCP": ((MINUS_X, X), (MINUS_Y, Y)),
    "CPMG": ((Y, Y), (Y, Y)),
    "APCPMG": ((MINUS_Y, Y), (Y, Y)),
}


def _excitation() -> Tuple[Pulse, ...]:
    return (Pulse(math.pi / 2, X, PulseWidth.DELTA),)


def build_hahn(tau: float) -> Sequence:
    require(tau > 0, f"tau must be > 0, got {tau}", SequenceError)
    cycle = (Delay(tau), Pulse(math.pi, Y), Delay(tau), EchoMarker(Y))
    return Sequence(_excitation(), cycle, 1, "hahn")


def build_table1(name: str, tau: float, n_echoes: int) -> Sequence:
    key = name.upper()
    require(key in TABLE1,
            f"unknown sequence '{name}' (expected one of {sorted(TABLE1)})",
            SequenceError)
    require(tau > 0, f"tau must be > 0, got {tau}", SequenceError)
    require(n_echoes >= 2 and n_echoes % 2 == 0,
            f"n_echoes must be even and >= 2, got {n_echoes}",
            SequenceError)
    (p1, p2), (e1, e2) = TABLE1[key]
    cycle = (
        Delay(tau), Pulse(math.pi, p1), Delay(tau), EchoMarker(e1),
        Delay(tau), Pulse(math.pi, p2), Delay(tau), EchoMarker(e2),
    )
    return Sequence(_excitation(), cycle, n_echoes // 2, key)


def bb1_composite(phase: SpinAxis) -> Tuple[Pulse, ...]:
    """Broadband composite pi pulse about ``phase``."""
    side = SpinAxis(phase.phase + BB1_PHASE)
    far = SpinAxis(phase.phase + 3 * BB1_PHASE)
    return (
        Pulse(math.pi, side),
        Pulse(2 * math.pi, far),
        Pulse(math.pi, side),
        Pulse(math.pi, phase),
    )


def build_bb1(tau: float, n_echoes: int, base: str = "CPMG") -> Sequence:
    """A CP-family train with each pi pulse replaced by its BB1 composite."""
    plain = build_table1(base, tau, n_echoes)
    cycle: List[SequenceEvent] = []
    for e in plain.cycle:
        if isinstance(e, Pulse):
            cycle.extend(bb1_composite(e.phase))
        else:
            cycle.append(e)
    return Sequence(plain.prologue, tuple(cycle), plain.repeats,
                    f"BB1-{plain.name}")


def build_ostroff_waugh(tau: float, n_cycles: int) -> Sequence:
    require(tau > 0, f"tau must be > 0, got {tau}", SequenceError)
    require(n_cycles >= 1, f"n_cycles must be >= 1, got {n_cycles}",
            SequenceError)
    block = (Delay(tau), Pulse(math.pi / 2, Y), Delay(tau), EchoMarker(Y))
    return Sequence(_excitation(), block * 2, n_cycles, "ostroff_waugh")
