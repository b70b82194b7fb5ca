"""Density-matrix propagation of one disorder realization.

Every run starts from rho(0) = I_zT and applies the prologue as ideal
rotations; the clock starts afterwards.  Cycle pulses follow the pulse
model:

- ``DELTA``: instantaneous rotations.
- ``EXACT_FINITE``: exp(-i(-omega1 I_phiT + H0) t_p), t_p = angle/omega1.
- ``INTERRUPTED_H0``: a rotation, with H0 switched off for t_p.
- ``AVG_H0`` / ``AVG_H0H1``: one step per rf-cyclic cycle under the
  zeroth (plus first) order average Hamiltonian; echoes are recorded at
  cycle boundaries only.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum, auto
from typing import Collection, List, Optional, Sequence as Seq, Tuple

import numpy as np

from .aht import magnus0, magnus_terms, toggling_frame
from .errors import OperatorError, SequenceError, require
from .lattice import CouplingTable, DisorderRealization
from .observables import Detection, EchoDetector, Snapshot
from .propagators import PropagatorCache
from .result import EchoTrain
from .sequence import EchoMarker, Pulse, Sequence, SequenceEvent
from .spinops import (
    MAX_SPINS,
    Z,
    OperatorMatrix,
    SpectralPropagator,
    collective_op,
    delta_pulse,
    free_hamiltonian,
    ising_hamiltonian,
)

logger = logging.getLogger(__name__)


class ModelKind(Enum):
    DELTA = auto()
    EXACT_FINITE = auto()
    INTERRUPTED_H0 = auto()
    AVG_H0 = auto()
    AVG_H0H1 = auto()


class Interaction(Enum):
    DIPOLAR = auto()
    ISING = auto()  # flip-flop terms dropped


_FINITE = (ModelKind.EXACT_FINITE, ModelKind.INTERRUPTED_H0)
_STROBOSCOPIC = (ModelKind.AVG_H0, ModelKind.AVG_H0H1)


@dataclass(frozen=True)
class PulseModel:
    kind: ModelKind
    omega1: Optional[float] = None  # rad/s
    angle_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind in _FINITE:
            require(self.omega1 is not None and self.omega1 > 0,
                    f"{self.label} needs omega1 > 0", SequenceError)
        if self.omega1 is not None:
            require(math.isfinite(self.omega1) and self.omega1 > 0,
                    f"omega1 must be finite and > 0, got {self.omega1}",
                    SequenceError)
        require(self.angle_scale > 0,
                f"angle_scale must be > 0, got {self.angle_scale}",
                SequenceError)
        require(
            self.kind not in _STROBOSCOPIC or self.angle_scale == 1.0,
            "average-Hamiltonian models need exact rotation angles",
            SequenceError,
        )

    @classmethod
    def delta(cls, angle_scale: float = 1.0) -> "PulseModel":
        return cls(ModelKind.DELTA, None, angle_scale)

    @classmethod
    def exact_finite(cls, omega1: float, angle_scale: float = 1.0
                     ) -> "PulseModel":
        return cls(ModelKind.EXACT_FINITE, omega1, angle_scale)

    @classmethod
    def interrupted(cls, omega1: float, angle_scale: float = 1.0
                    ) -> "PulseModel":
        return cls(ModelKind.INTERRUPTED_H0, omega1, angle_scale)

    @property
    def label(self) -> str:
        return self.kind.name.lower()

    @property
    def stroboscopic(self) -> bool:
        return self.kind in _STROBOSCOPIC

    @property
    def finite_pulses(self) -> bool:
        return self.kind is not ModelKind.DELTA and self.omega1 is not None


def free_evolution_hamiltonian(
    realization: DisorderRealization,
    interaction: Interaction = Interaction.DIPOLAR,
) -> OperatorMatrix:
    if interaction is Interaction.DIPOLAR:
        return free_hamiltonian(realization.couplings, realization.omega_z,
                                realization.spin_offsets)
    n = realization.n_spins
    offsets = free_hamiltonian(CouplingTable.zeros(n), realization.omega_z,
                               realization.spin_offsets)
    return ising_hamiltonian(realization.couplings) + offsets


def split_at_markers(
    cycle: Seq[SequenceEvent],
) -> Tuple[List[Tuple[Tuple[SequenceEvent, ...], EchoMarker]],
           Tuple[SequenceEvent, ...]]:
    """Events before each echo marker, and the events after the last one.
    """
    segments = []
    current: List[SequenceEvent] = []
    for e in cycle:
        if isinstance(e, EchoMarker):
            segments.append((tuple(current), e))
            current = []
        else:
            current.append(e)
    return segments, tuple(current)


def _cache_for(h0: OperatorMatrix, model: PulseModel) -> PropagatorCache:
    return PropagatorCache(
        h0,
        omega1=model.omega1 if model.finite_pulses else None,
        interrupt_h0=model.kind is ModelKind.INTERRUPTED_H0,
        angle_scale=model.angle_scale,
    )


def precompute_propagators(
    realization: DisorderRealization,
    sequence: Sequence,
    model: PulseModel,
    interaction: Interaction = Interaction.DIPOLAR,
) -> PropagatorCache:
    """Propagator cache with every segment product of the cycle built."""
    require(not model.stroboscopic,
            "average-Hamiltonian models do not use event propagators",
            SequenceError)
    cache = _cache_for(free_evolution_hamiltonian(realization, interaction),
                       model)
    _warm(cache, sequence)
    return cache


def _warm(cache: PropagatorCache, sequence: Sequence) -> None:
    segments, tail = split_at_markers(sequence.cycle)
    for k, (events, _) in enumerate(segments):
        cache.product(events)
        if k == 0 and tail and sequence.repeats > 1:
            cache.product(tail + events)


class _Recorder:
    def __init__(self, rho0: np.ndarray, detector: EchoDetector,
                 snapshot_echoes: Collection[int], label: str) -> None:
        self.detector = detector
        self.trace0 = float(np.trace(rho0).real)
        self.purity0 = float(np.vdot(rho0, rho0).real)
        self.snapshot_echoes = set(snapshot_echoes)
        self.label = label
        self.rows: List[Tuple[int, float, float, float]] = []
        self.snapshots: List[Snapshot] = []
        self.trace_drift = 0.0
        self.purity_drift = 0.0

    def record(self, rho: np.ndarray, echo: int, time: float,
               pulses: int, marker: EchoMarker) -> None:
        sx, sy = self.detector.read(rho)
        c, s = marker.expected_phase.components()
        self.rows.append((echo, time, c * sx + s * sy, math.hypot(sx, sy)))
        self.trace_drift = max(self.trace_drift,
                               abs(float(np.trace(rho).real) - self.trace0))
        purity = float(np.vdot(rho, rho).real)
        self.purity_drift = max(self.purity_drift,
                                abs(purity - self.purity0) / self.purity0)
        if echo in self.snapshot_echoes:
            self.snapshots.append(Snapshot(
                time=time, pulse_count=pulses, rho=rho.copy(),
                echo_index=echo, realization=self.label,
            ))

    def train(self, eigendecompositions: int) -> EchoTrain:
        cols = list(zip(*self.rows)) if self.rows else [(), (), (), ()]
        return EchoTrain(
            echo_indices=np.asarray(cols[0], dtype=int),
            times=np.asarray(cols[1], dtype=float),
            signed=np.asarray(cols[2], dtype=float),
            magnitudes=np.asarray(cols[3], dtype=float),
            n_detected=self.detector.n_detected,
            detection=self.detector.detection,
            trace_drift=self.trace_drift,
            purity_drift=self.purity_drift,
            eigendecompositions=eigendecompositions,
            snapshots=tuple(self.snapshots),
        )


def _conjugate(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u @ rho @ u.conj().T


def run_dr(
    realization: DisorderRealization,
    sequence: Sequence,
    model: PulseModel,
    detection: Detection = Detection.TOTAL,
    interaction: Interaction = Interaction.DIPOLAR,
    snapshot_echoes: Collection[int] = (),
    label: str = "0",
) -> EchoTrain:
    """Echo train of one realization under ``sequence``."""
    n = realization.n_spins
    require(n <= MAX_SPINS,
            f"{n} spins exceed the limit of {MAX_SPINS}", OperatorError)
    h0 = free_evolution_hamiltonian(realization, interaction)
    rho = collective_op(n, Z).matrix
    for p in sequence.prologue:
        u = delta_pulse(n, p.angle * model.angle_scale, p.phase).matrix
        rho = _conjugate(rho, u)
    recorder = _Recorder(rho, EchoDetector(n, detection), snapshot_echoes,
                         label)

    if model.stroboscopic:
        return _run_stroboscopic(rho, h0, sequence, model, recorder)

    cache = _cache_for(h0, model)
    segments, tail = split_at_markers(sequence.cycle)
    time = 0.0
    pulses = 0
    echo = 0
    for r in range(sequence.repeats):
        for k, (events, marker) in enumerate(segments):
            if k == 0 and r > 0:
                events = tail + events
            rho = _conjugate(rho, cache.product(events).matrix)
            time += cache.duration(events)
            pulses += sum(isinstance(e, Pulse) for e in events)
            echo += 1
            recorder.record(rho, echo, time, pulses, marker)
    logger.debug("seed %d: %d eigendecompositions, %d echoes",
                 realization.seed, cache.eigendecompositions, echo)
    return recorder.train(cache.eigendecompositions)


def _run_stroboscopic(
    rho: np.ndarray,
    h0: OperatorMatrix,
    sequence: Sequence,
    model: PulseModel,
    recorder: _Recorder,
) -> EchoTrain:
    omega1 = model.omega1 if model.omega1 is not None else math.inf
    frame = toggling_frame(sequence.cycle, h0, omega1)
    if model.kind is ModelKind.AVG_H0:
        average = magnus0(frame)
    else:
        average = magnus_terms(frame).average(1)
    step = frame.u_rf.matrix @ SpectralPropagator(average).at(
        frame.t_c).matrix

    unroll = frame.unroll
    n_cycles = sequence.repeats // unroll
    if sequence.repeats % unroll:
        logger.warning(
            "%d trailing cycle(s) dropped: the average Hamiltonian spans "
            "%d cycles", sequence.repeats % unroll, unroll,
        )
    markers = [e for e in sequence.cycle if isinstance(e, EchoMarker)]
    echoes_per_step = unroll * len(markers)
    pulses_per_step = unroll * len(sequence.pulses())
    for c in range(1, n_cycles + 1):
        rho = _conjugate(rho, step)
        recorder.record(rho, c * echoes_per_step, c * frame.t_c,
                        c * pulses_per_step, markers[-1])
    return recorder.train(eigendecompositions=1)


def analytic_ising_echo(
    couplings: CouplingTable,
    times: Seq[float],
    detection: Detection = Detection.TOTAL,
) -> np.ndarray:
    """S_i(t) = prod_{j != i} cos(2 pi B_ij t); mean over i or S_0."""
    t = np.asarray(times, dtype=float)
    require(bool(np.all(t >= 0)), "times must be >= 0", SequenceError)
    b = couplings.b_over_h
    rows = b if detection is Detection.TOTAL else b[:1]
    out = np.empty(len(t))
    for k, tk in enumerate(t):
        out[k] = np.cos(2.0 * math.pi * rows * tk).prod(axis=1).mean()
    return out
