from __future__ import annotations

import logging
import math
from functools import reduce
from typing import (
    Dict,
    FrozenSet,
    Hashable,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from scipy import linalg

from .errors import OperatorError, require
from .sequence import Delay, Pulse, PulseWidth, SequenceEvent
from .spinops import (
    OperatorKind,
    OperatorMatrix,
    SpectralPropagator,
    SpinAxis,
    delta_pulse,
    pulse_hamiltonian,
)

logger = logging.getLogger(__name__)


class PropagatorCache:
    """Per-realization propagators for the events of a sequence.

    One eigendecomposition of H0 serves every delay; finite pulses with H0
    kept on need one more per distinct pulse phase.  With ``omega1=None``
    every pulse is an instantaneous rotation.  ``interrupt_h0`` keeps the
    pulse duration on the clock but propagates the pulse as a pure
    rotation.
    """

    def __init__(
        self,
        h0: OperatorMatrix,
        omega1: Optional[float] = None,
        interrupt_h0: bool = False,
        angle_scale: float = 1.0,
    ) -> None:
        require(omega1 is None or (omega1 > 0 and math.isfinite(omega1)),
                f"omega1 must be > 0, got {omega1}", OperatorError)
        require(angle_scale > 0, f"angle scale must be > 0, got {angle_scale}",
                OperatorError)
        self.h0 = h0
        self.n_spins = h0.n_spins
        self.omega1 = omega1
        self.interrupt_h0 = interrupt_h0
        self.angle_scale = angle_scale
        self._free = SpectralPropagator(h0)
        self.eigendecompositions = 1
        self._drives: Dict[SpinAxis, SpectralPropagator] = {}
        self._events: Dict[Hashable, OperatorMatrix] = {}
        self._products: Dict[Tuple[SequenceEvent, ...], OperatorMatrix] = {}

    def pulse_duration(self, pulse: Pulse) -> float:
        if self.omega1 is None or pulse.width is PulseWidth.DELTA:
            return 0.0
        return pulse.angle / self.omega1

    def duration(self, events: Iterable[SequenceEvent]) -> float:
        total = 0.0
        for e in events:
            if isinstance(e, Delay):
                total += e.tau
            elif isinstance(e, Pulse):
                total += self.pulse_duration(e)
        return total

    def _drive(self, phase: SpinAxis) -> SpectralPropagator:
        prop = self._drives.get(phase)
        if prop is None:
            h = pulse_hamiltonian(phase, self.omega1 * self.angle_scale,
                                  self.h0)
            prop = SpectralPropagator(h)
            self.eigendecompositions += 1
            logger.debug("pulse propagator for phase %s", phase.label)
            self._drives[phase] = prop
        return prop

    def _key(self, event: SequenceEvent) -> Optional[Hashable]:
        if isinstance(event, Delay):
            return ("delay", event.tau)
        if isinstance(event, Pulse):
            if self.pulse_duration(event) == 0.0 or self.interrupt_h0:
                return ("rotation", event.angle, event.phase)
            return ("pulse", event.angle, event.phase)
        return None

    def event(self, event: SequenceEvent) -> Optional[OperatorMatrix]:
        """Propagator of one event; ``None`` for echo markers."""
        key = self._key(event)
        if key is None:
            return None
        u = self._events.get(key)
        if u is not None:
            return u
        if isinstance(event, Delay):
            u = self._free.at(event.tau)
        elif key[0] == "rotation":
            u = delta_pulse(self.n_spins, event.angle * self.angle_scale,
                            event.phase)
        else:
            u = self._drive(event.phase).at(event.angle / self.omega1)
        self._events[key] = u
        return u

    def product(self, events: Sequence[SequenceEvent]) -> OperatorMatrix:
        """Ordered propagator of ``events``, first event rightmost."""
        key = tuple(events)
        u = self._products.get(key)
        if u is None:
            m = np.eye(2 ** self.n_spins, dtype=complex)
            for e in key:
                step = self.event(e)
                if step is not None:
                    m = step.matrix @ m
            u = OperatorMatrix(m, OperatorKind.UNITARY)
            self._products[key] = u
        return u

    def event_keys(self) -> FrozenSet[Hashable]:
        return frozenset(self._events)

    def max_unitarity_defect(self) -> float:
        ops = list(self._events.values()) + list(self._products.values())
        return max((u.unitarity_defect() for u in ops), default=0.0)


PieceHamiltonian = Union[OperatorMatrix, Sequence[OperatorMatrix]]


def trotter_oracle(
    pieces: Sequence[Tuple[PieceHamiltonian, float]],
    dt: float,
) -> OperatorMatrix:
    """First-order product of exp(-i H dt) steps over piecewise H.

    A piece given as a list of terms is split Lie-Trotter style, first
    term applied first.
    """
    require(dt > 0, f"dt must be > 0, got {dt}", OperatorError)
    mats: List[np.ndarray] = []
    for h, duration in pieces:
        steps = duration / dt
        n_steps = int(round(steps))
        require(
            abs(steps - n_steps) <= 1e-9 * max(1.0, steps),
            f"dt={dt:g} does not divide duration {duration:g}",
            OperatorError,
        )
        terms = [h] if isinstance(h, OperatorMatrix) else list(h)
        factors = [linalg.expm(-1j * t.matrix * dt) for t in terms]
        step = reduce(lambda acc, f: f @ acc, factors)
        mats.append(np.linalg.matrix_power(step, n_steps))
    dim = mats[0].shape[0] if mats else 2
    u = reduce(lambda acc, m: m @ acc, mats, np.eye(dim, dtype=complex))
    return OperatorMatrix(u, OperatorKind.GENERAL)

