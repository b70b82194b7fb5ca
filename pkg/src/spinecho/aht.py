"""Average-Hamiltonian analysis of rf-cyclic pulse cycles.

The toggling-frame Hamiltonian is ``U_rf(t)^dagger H0 U_rf(t)`` where
``U_rf`` collects the rf rotations applied so far.  Within a pulse of
nutation rate omega1 the frame rotates by ``theta = omega1 t`` and, H0
being at most bilinear in spin operators, the frame Hamiltonian is an
exact combination of 1, cos(theta), sin(theta), cos(2 theta) and
sin(2 theta).  Those coefficient operators are all the Magnus integrals
need.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from .errors import QuadratureError, SequenceError, require
from .lattice import CouplingTable, DisorderRealization
from .propagators import PropagatorCache
from .sequence import (
    Delay,
    Pulse,
    PulseWidth,
    Sequence,
    SequenceEvent,
    aht_unroll,
)
from .spinops import (
    TWO_PI,
    X,
    Z,
    OperatorKind,
    OperatorMatrix,
    SpectralPropagator,
    SpinAxis,
    collective_op,
    collective_rotation,
    delta_pulse,
    dipolar_hamiltonian,
    free_hamiltonian,
    rotated_dipolar_ops,
    spin_half_rotation,
)

logger = logging.getLogger(__name__)

FRAME_SAMPLES = 8
# (harmonic, is_sine) per coefficient slot
HARMONICS = ((0, False), (1, False), (1, True), (2, False), (2, True))
QUAD_START_NODES = 16
QUAD_MAX_NODES = 1024
MAGNUS1_RTOL = 1e-10
CYCLIC_TOL = 1e-10

CycleLike = Union[Sequence, Iterable[SequenceEvent]]


def _basis(slot: int, w: float, t: np.ndarray) -> np.ndarray:
    m, sine = HARMONICS[slot]
    if m == 0:
        return np.ones_like(t)
    return np.sin(m * w * t) if sine else np.cos(m * w * t)


def _antiderivative(slot: int, w: float, t: np.ndarray) -> np.ndarray:
    m, sine = HARMONICS[slot]
    if m == 0:
        return t
    if sine:
        return (1.0 - np.cos(m * w * t)) / (m * w)
    return np.sin(m * w * t) / (m * w)


def _nested_weight(a: int, b: int, w: float, duration: float,
                   rtol: float) -> float:
    """int_0^T f_a(t) F_b(t) dt, F_b the antiderivative of f_b."""

    def integrand(t: np.ndarray) -> np.ndarray:
        return _basis(a, w, t) * _antiderivative(b, w, t)

    atol = rtol * duration * duration
    previous: Optional[float] = None
    n = QUAD_START_NODES
    while n <= QUAD_MAX_NODES:
        value, _ = integrate.fixed_quad(integrand, 0.0, duration, n=n)
        if previous is not None and abs(value - previous) <= atol:
            return float(value)
        previous = float(value)
        n *= 2
    raise QuadratureError(
        f"nested pulse integral ({a}, {b}) did not converge with "
        f"{QUAD_MAX_NODES} nodes"
    )


def _comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _hermitian(m: np.ndarray) -> OperatorMatrix:
    return OperatorMatrix((m + m.conj().T) / 2, OperatorKind.HERMITIAN)


@dataclass(frozen=True, eq=False)
class FrameInterval:
    """One delay or finite pulse of the unrolled cycle.

    ``coefficients`` has one operator for a delay and five for a pulse,
    in the order of ``HARMONICS``.
    """

    duration: float
    u_start: OperatorMatrix
    coefficients: Tuple[OperatorMatrix, ...]
    omega1: float = 0.0
    phase: Optional[SpinAxis] = None
    angle: float = 0.0

    @property
    def is_pulse(self) -> bool:
        return self.phase is not None

    @property
    def tag(self) -> str:
        if not self.is_pulse:
            return "delay"
        return f"pulse {math.degrees(self.angle):.6g}({self.phase.label})"

    def weights(self, t: float) -> np.ndarray:
        tt = np.array([t])
        return np.array([
            _basis(k, self.omega1, tt)[0]
            for k in range(len(self.coefficients))
        ])

    def sample(self, t: float) -> OperatorMatrix:
        """Frame Hamiltonian at local time ``t`` in [0, duration]."""
        m = sum(w * c.matrix
                for w, c in zip(self.weights(t), self.coefficients))
        return _hermitian(m)

    def integral(self) -> np.ndarray:
        total = np.zeros_like(self.coefficients[0].matrix)
        end = np.array([self.duration])
        for k, c in enumerate(self.coefficients):
            w = _antiderivative(k, self.omega1, end)[0]
            total = total + w * c.matrix
        return total

    def self_term(self, rtol: float) -> np.ndarray:
        """Both times inside this interval: sum_ab [C_a, C_b] J_ab."""
        acc = np.zeros_like(self.coefficients[0].matrix)
        k = len(self.coefficients)
        for a in range(k):
            for b in range(a + 1, k):
                ca = self.coefficients[a].matrix
                cb = self.coefficients[b].matrix
                j_ab = _nested_weight(a, b, self.omega1, self.duration, rtol)
                j_ba = _nested_weight(b, a, self.omega1, self.duration, rtol)
                acc = acc + (j_ab - j_ba) * _comm(ca, cb)
        return acc


@dataclass(frozen=True, eq=False)
class TogglingFrame:
    intervals: Tuple[FrameInterval, ...]
    unroll: int
    u_rf: OperatorMatrix
    events: Tuple[SequenceEvent, ...]
    omega1: float

    @property
    def t_c(self) -> float:
        return sum(iv.duration for iv in self.intervals)

    def sample(self, t: float) -> OperatorMatrix:
        require(0.0 <= t <= self.t_c,
                f"time {t} outside the cycle [0, {self.t_c}]", SequenceError)
        start = 0.0
        for iv in self.intervals:
            if t <= start + iv.duration:
                return iv.sample(t - start)
            start += iv.duration
        last = self.intervals[-1]
        return last.sample(last.duration)


@dataclass(frozen=True, eq=False)
class MagnusTerms:
    h0: OperatorMatrix
    h1: OperatorMatrix
    t_c: float

    def average(self, order: int = 1) -> OperatorMatrix:
        require(order in (0, 1), f"order must be 0 or 1, got {order}",
                SequenceError)
        return self.h0 if order == 0 else self.h0 + self.h1


def _cycle_events(cycle: CycleLike) -> Tuple[SequenceEvent, ...]:
    if isinstance(cycle, Sequence):
        return cycle.cycle
    return tuple(cycle)


def _conjugate(h0: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u.conj().T @ h0 @ u


def _pulse_coefficients(
    h0: OperatorMatrix, u_start: np.ndarray, phase: SpinAxis
) -> Tuple[OperatorMatrix, ...]:
    thetas = TWO_PI * np.arange(FRAME_SAMPLES) / FRAME_SAMPLES
    n = h0.n_spins
    samples = [
        _conjugate(
            h0.matrix,
            collective_rotation(n, spin_half_rotation(theta, phase))
            @ u_start,
        )
        for theta in thetas
    ]
    coeffs = []
    for m, sine in HARMONICS:
        if m == 0:
            c = sum(samples) / FRAME_SAMPLES
        else:
            trig = np.sin(m * thetas) if sine else np.cos(m * thetas)
            c = 2.0 * sum(w * s for w, s in zip(trig, samples))
            c = c / FRAME_SAMPLES
        coeffs.append(_hermitian(c))
    return tuple(coeffs)


def toggling_frame(
    cycle: CycleLike,
    h0: OperatorMatrix,
    omega1: float = math.inf,
) -> TogglingFrame:
    """Frame intervals over the smallest rf-cyclic repetition of ``cycle``.

    ``omega1=inf`` treats every pulse as instantaneous.
    """
    events = _cycle_events(cycle)
    require(omega1 > 0, f"omega1 must be > 0, got {omega1}", SequenceError)
    unroll = aht_unroll(events)
    if unroll > 1:
        logger.debug("cycle unrolled %d times for rf cyclicity", unroll)
    unrolled = events * unroll
    n = h0.n_spins
    u = np.eye(2 ** n, dtype=complex)
    intervals = []
    for e in unrolled:
        if isinstance(e, Delay):
            if e.tau > 0:
                ustart = OperatorMatrix(u, OperatorKind.UNITARY)
                coeff = _hermitian(_conjugate(h0.matrix, u))
                intervals.append(FrameInterval(e.tau, ustart, (coeff,)))
        elif isinstance(e, Pulse):
            finite = (e.width is PulseWidth.FINITE and math.isfinite(omega1))
            if finite:
                intervals.append(FrameInterval(
                    duration=e.angle / omega1,
                    u_start=OperatorMatrix(u, OperatorKind.UNITARY),
                    coefficients=_pulse_coefficients(h0, u, e.phase),
                    omega1=omega1,
                    phase=e.phase,
                    angle=e.angle,
                ))
            u = delta_pulse(n, e.angle, e.phase).matrix @ u
    require(len(intervals) > 0, "cycle has zero duration", SequenceError)
    defect = abs(abs(np.trace(u)) / u.shape[0] - 1.0)
    require(defect < CYCLIC_TOL,
            f"rf propagator is not the identity (defect {defect:.3g})",
            SequenceError)
    return TogglingFrame(
        intervals=tuple(intervals),
        unroll=unroll,
        u_rf=OperatorMatrix(u, OperatorKind.UNITARY),
        events=unrolled,
        omega1=omega1,
    )


def magnus0(frame: TogglingFrame) -> OperatorMatrix:
    total = sum(iv.integral() for iv in frame.intervals)
    return _hermitian(total / frame.t_c)


def magnus1(frame: TogglingFrame, rtol: float = MAGNUS1_RTOL
            ) -> OperatorMatrix:
    """(-i / 2 t_c) int_0^t_c dt2 int_0^t2 dt1 [H(t2), H(t1)]."""
    prefix = np.zeros_like(frame.intervals[0].coefficients[0].matrix)
    acc = np.zeros_like(prefix)
    for iv in frame.intervals:
        integral = iv.integral()
        acc = acc + _comm(integral, prefix)
        if iv.is_pulse:
            acc = acc + iv.self_term(rtol)
        prefix = prefix + integral
    return _hermitian((-1j / (2.0 * frame.t_c)) * acc)


def magnus_terms(frame: TogglingFrame) -> MagnusTerms:
    return MagnusTerms(magnus0(frame), magnus1(frame), frame.t_c)


def cpmg_closed_forms(
    couplings: Union[CouplingTable, np.ndarray],
    omega_z: float,
    tau: float,
    t_p: float,
) -> MagnusTerms:
    """Zeroth and first order average Hamiltonians of the CPMG cycle
    tau-180_Y-2tau-180_Y-tau with finite pulses of width ``t_p``."""
    require(tau > 0 and t_p > 0, "tau and t_p must be > 0", SequenceError)
    hzz = dipolar_hamiltonian(couplings).matrix
    hyy, h_anti, h_sym = (op.matrix for op in rotated_dipolar_ops(couplings))
    n = int(round(math.log2(hzz.shape[0])))
    t_c = 4 * tau + 2 * t_p

    h0 = (4 * tau * hzz - t_p * hyy) / t_c

    offset_x = TWO_PI * omega_z * collective_op(n, X).matrix
    offset_z = TWO_PI * omega_z * collective_op(n, Z).matrix
    inner = t_p * _comm(h_anti, h_sym + hyy)
    inner = inner + (8 * tau + 2 * t_p) * _comm(offset_x, offset_z + hyy)
    h1 = (-1j / (2 * t_c)) * (t_p / math.pi) * inner
    return MagnusTerms(_hermitian(h0), _hermitian(h1), t_c)


def realization_hamiltonian(realization: DisorderRealization
                            ) -> OperatorMatrix:
    return free_hamiltonian(realization.couplings, realization.omega_z,
                            realization.spin_offsets)


def cycle_defect(
    realization: DisorderRealization,
    cycle: CycleLike,
    omega1: float,
    order: int = 1,
) -> float:
    """Spectral norm of U_exact - U_rf exp(-i Hbar t_c) over one AHT cycle.
    """
    require(order in (0, 1), f"order must be 0 or 1, got {order}",
            SequenceError)
    h0 = realization_hamiltonian(realization)
    frame = toggling_frame(cycle, h0, omega1)
    if order == 0:
        average = magnus0(frame)
    else:
        average = magnus_terms(frame).average(1)

    finite = math.isfinite(omega1)
    cache = PropagatorCache(h0, omega1 if finite else None)
    exact = cache.product(frame.events).matrix
    approx = frame.u_rf.matrix @ SpectralPropagator(average).at(
        frame.t_c).matrix
    return float(np.linalg.norm(exact - approx, 2))
