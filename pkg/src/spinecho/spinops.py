"""Spin-1/2 operators and Hamiltonians on the 2**N product basis.

Hamiltonians are stored as H/hbar in rad/s.  Couplings and offsets are
given in Hz and converted with a factor of 2*pi at construction.  Spin 0
is the most significant qubit of the basis index, so basis state ``b``
has spin ``i`` up when bit ``N-1-i`` of ``b`` is clear.

Rotations follow the rotating-frame convention of a pulse Hamiltonian
``-omega1 * I_phi``: a pulse of angle ``a`` is ``exp(+i a I_phiT)`` and
acts on a density matrix as ``rho -> U rho U^dagger``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, auto
from functools import reduce
from itertools import combinations
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from .errors import OperatorError, require
from .lattice import CouplingTable

MAX_SPINS = 12
TWO_PI = 2.0 * math.pi

HERMITIAN_RTOL = 1e-12
UNITARY_ATOL = 1e-12

_EYE2 = np.eye(2, dtype=complex)
_SPIN_HALF = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex) / 2,
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex) / 2,
    "z": np.array([[1, 0], [0, -1]], dtype=complex) / 2,
}

# exact (cos, sin) for the principal transverse axes
_PRINCIPAL = {
    0: (1.0, 0.0),
    1: (0.0, 1.0),
    2: (-1.0, 0.0),
    3: (0.0, -1.0),
}
_PRINCIPAL_LABELS = {0: "+X", 1: "+Y", 2: "-X", 3: "-Y"}


class OperatorKind(Enum):
    HERMITIAN = auto()
    UNITARY = auto()
    GENERAL = auto()


@dataclass(frozen=True)
class SpinAxis:
    """A principal axis or a transverse phase angle in radians.

    ``phase=None`` is the Z axis.
    """

    phase: Optional[float]

    def __post_init__(self) -> None:
        if self.phase is None:
            return
        require(
            math.isfinite(self.phase),
            f"axis phase must be finite, got {self.phase}",
            OperatorError,
        )
        object.__setattr__(self, "phase", float(self.phase) % TWO_PI)

    @classmethod
    def transverse(cls, phase: float) -> "SpinAxis":
        return cls(phase)

    @classmethod
    def parse(cls, text: str) -> "SpinAxis":
        token = text.strip().upper()
        named = {
            "X": X, "+X": X, "-X": MINUS_X,
            "Y": Y, "+Y": Y, "-Y": MINUS_Y,
            "Z": Z, "+Z": Z,
        }
        if token in named:
            return named[token]
        if token.endswith("DEG"):
            token = token[:-3]
        try:
            degrees = float(token)
        except ValueError:
            raise OperatorError(f"unknown axis '{text}'") from None
        return cls(math.radians(degrees))

    @property
    def is_transverse(self) -> bool:
        return self.phase is not None

    def _quadrant(self) -> Optional[int]:
        if self.phase is None:
            return None
        q = self.phase / (math.pi / 2)
        k = round(q)
        if abs(q - k) < 1e-12:
            return k % 4
        return None

    def components(self) -> Tuple[float, float]:
        """(cos phase, sin phase); exact for the principal axes."""
        require(self.is_transverse, "Z has no transverse components",
                OperatorError)
        k = self._quadrant()
        if k is not None:
            return _PRINCIPAL[k]
        return math.cos(self.phase), math.sin(self.phase)

    @property
    def label(self) -> str:
        if self.phase is None:
            return "Z"
        k = self._quadrant()
        if k is not None:
            return _PRINCIPAL_LABELS[k]
        return f"{math.degrees(self.phase):.12g}"

    def spin_half(self) -> np.ndarray:
        """The single-spin operator I_axis as a 2x2 matrix."""
        if self.phase is None:
            return _SPIN_HALF["z"]
        c, s = self.components()
        return c * _SPIN_HALF["x"] + s * _SPIN_HALF["y"]

    def __str__(self) -> str:
        return self.label


X = SpinAxis(0.0)
Y = SpinAxis(math.pi / 2)
MINUS_X = SpinAxis(math.pi)
MINUS_Y = SpinAxis(3 * math.pi / 2)
Z = SpinAxis(None)

AxisLike = Union[SpinAxis, str]


def as_axis(axis: AxisLike) -> SpinAxis:
    if isinstance(axis, SpinAxis):
        return axis
    return SpinAxis.parse(axis)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex matrix on the 2**N product basis.

    Compared and hashed by identity, so instances can key caches.
    """

    matrix: np.ndarray
    kind: OperatorKind = OperatorKind.GENERAL

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        require(
            m.ndim == 2 and m.shape[0] == m.shape[1],
            f"operator must be square, got shape {m.shape}",
            OperatorError,
        )
        dim = m.shape[0]
        require(
            dim >= 2 and dim & (dim - 1) == 0,
            f"operator dimension {dim} is not a power of two",
            OperatorError,
        )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_spins(self) -> int:
        return self.dim.bit_length() - 1

    def hermiticity_defect(self) -> float:
        scale = float(np.max(np.abs(self.matrix)))
        if scale == 0.0:
            return 0.0
        diff = np.max(np.abs(self.matrix - self.matrix.conj().T))
        return float(diff) / scale

    def unitarity_defect(self) -> float:
        eye = np.eye(self.dim)
        return float(np.max(np.abs(self.matrix.conj().T @ self.matrix - eye)))

    def validated(self) -> "OperatorMatrix":
        if self.kind is OperatorKind.HERMITIAN:
            defect = self.hermiticity_defect()
            require(
                defect < HERMITIAN_RTOL,
                f"operator is not hermitian (relative defect {defect:.3g})",
                OperatorError,
            )
        elif self.kind is OperatorKind.UNITARY:
            defect = self.unitarity_defect()
            require(
                defect < UNITARY_ATOL,
                f"operator is not unitary (defect {defect:.3g})",
                OperatorError,
            )
        return self

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.matrix.conj().T, self.kind)

    def commutator(self, other: "OperatorMatrix") -> "OperatorMatrix":
        a, b = self.matrix, other.matrix
        return OperatorMatrix(a @ b - b @ a)

    def norm(self, ord: Union[str, int] = "fro") -> float:
        return float(np.linalg.norm(self.matrix, ord))

    def conjugated_by(self, u: "OperatorMatrix") -> "OperatorMatrix":
        """u^dagger A u."""
        m = u.matrix.conj().T @ self.matrix @ u.matrix
        return OperatorMatrix(m, self.kind)

    def _combine_kind(self, other: "OperatorMatrix") -> OperatorKind:
        both = self.kind is OperatorKind.HERMITIAN
        both = both and other.kind is OperatorKind.HERMITIAN
        return OperatorKind.HERMITIAN if both else OperatorKind.GENERAL

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.matrix + other.matrix,
                              self._combine_kind(other))

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.matrix - other.matrix,
                              self._combine_kind(other))

    def __neg__(self) -> "OperatorMatrix":
        kind = self.kind
        if kind is OperatorKind.UNITARY:
            kind = OperatorKind.GENERAL
        return OperatorMatrix(-self.matrix, kind)

    def __mul__(self, scalar: complex) -> "OperatorMatrix":
        kind = OperatorKind.GENERAL
        if self.kind is OperatorKind.HERMITIAN and np.isrealobj(scalar):
            kind = OperatorKind.HERMITIAN
        return OperatorMatrix(self.matrix * scalar, kind)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "OperatorMatrix":
        return self * (1.0 / scalar)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        kind = OperatorKind.GENERAL
        if (self.kind is OperatorKind.UNITARY
                and other.kind is OperatorKind.UNITARY):
            kind = OperatorKind.UNITARY
        return OperatorMatrix(self.matrix @ other.matrix, kind)


def _check_size(n: int) -> None:
    require(
        isinstance(n, (int, np.integer)) and 1 <= n <= MAX_SPINS,
        f"spin count must be in 1..{MAX_SPINS}, got {n}",
        OperatorError,
    )


def _embed(n: int, factors: Dict[int, np.ndarray]) -> np.ndarray:
    return reduce(np.kron, [factors.get(k, _EYE2) for k in range(n)])


def single_spin_op(n: int, i: int, axis: AxisLike) -> OperatorMatrix:
    _check_size(n)
    require(0 <= i < n, f"spin index {i} out of range for {n} spins",
            OperatorError)
    op = _embed(n, {i: as_axis(axis).spin_half()})
    return OperatorMatrix(op, OperatorKind.HERMITIAN)


def collective_op(
    n: int,
    axis: AxisLike,
    spins: Optional[Sequence[int]] = None,
) -> OperatorMatrix:
    """Sum of single-spin operators over ``spins`` (default: all)."""
    _check_size(n)
    local = as_axis(axis).spin_half()
    selected = range(n) if spins is None else spins
    dim = 2 ** n
    total = np.zeros((dim, dim), dtype=complex)
    for i in selected:
        require(0 <= i < n, f"spin index {i} out of range for {n} spins",
                OperatorError)
        total += _embed(n, {i: local})
    return OperatorMatrix(total, OperatorKind.HERMITIAN)


def _coupling_matrix(couplings: Union[CouplingTable, np.ndarray]
                     ) -> np.ndarray:
    if isinstance(couplings, CouplingTable):
        return couplings.b_over_h
    return CouplingTable(np.asarray(couplings, dtype=float)).b_over_h


# pair weights w[a][b] for sum_ab w_ab I_a,i I_b,j, axes ordered x, y, z
_ZZ = ((-1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, 2.0))
_YY = ((-1.0, 0.0, 0.0), (0.0, 2.0, 0.0), (0.0, 0.0, -1.0))
_ISING = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 2.0))
_ANTISYMMETRIC_Y = ((0.0, 0.0, 1.5), (0.0, 0.0, 0.0), (1.5, 0.0, 0.0))
_SYMMETRIC_Y = ((-1.5, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 1.5))


def _bilinear(b: np.ndarray, weights) -> OperatorMatrix:
    n = b.shape[0]
    _check_size(n)
    axes = "xyz"
    terms = [
        (_SPIN_HALF[axes[p]], _SPIN_HALF[axes[q]], w)
        for p, row in enumerate(weights)
        for q, w in enumerate(row)
        if w != 0.0
    ]
    dim = 2 ** n
    h = np.zeros((dim, dim), dtype=complex)
    for i, j in combinations(range(n), 2):
        if b[i, j] == 0.0:
            continue
        for op_i, op_j, w in terms:
            h += (TWO_PI * b[i, j] * w) * _embed(n, {i: op_i, j: op_j})
    return OperatorMatrix(h, OperatorKind.HERMITIAN).validated()


def dipolar_hamiltonian(couplings: Union[CouplingTable, np.ndarray]
                        ) -> OperatorMatrix:
    """Secular dipolar coupling sum_{j>i} B_ij (3 IziIzj - Ii.Ij)."""
    return _bilinear(_coupling_matrix(couplings), _ZZ)


def ising_hamiltonian(couplings: Union[CouplingTable, np.ndarray]
                      ) -> OperatorMatrix:
    """Dipolar coupling with the flip-flop terms dropped."""
    return _bilinear(_coupling_matrix(couplings), _ISING)


def rotated_dipolar_ops(
    couplings: Union[CouplingTable, np.ndarray],
) -> Tuple[OperatorMatrix, OperatorMatrix, OperatorMatrix]:
    """(H_yy, H_Y^A, H_Y^S), the operators of a Y-pulse toggling frame."""
    b = _coupling_matrix(couplings)
    return (
        _bilinear(b, _YY),
        _bilinear(b, _ANTISYMMETRIC_Y),
        _bilinear(b, _SYMMETRIC_Y),
    )


def free_hamiltonian(
    couplings: Union[CouplingTable, np.ndarray],
    omega_z: float,
    spin_offsets: Optional[Sequence[float]] = None,
) -> OperatorMatrix:
    """H_zz + 2*pi*omega_z*I_zT; ``spin_offsets`` (Hz) adds per-spin terms.
    """
    require(math.isfinite(omega_z), f"offset must be finite, got {omega_z}",
            OperatorError)
    h = dipolar_hamiltonian(couplings)
    n = h.n_spins
    m = h.matrix + TWO_PI * omega_z * collective_op(n, Z).matrix
    if spin_offsets is not None:
        offsets = np.asarray(spin_offsets, dtype=float)
        require(
            offsets.shape == (n,) and np.all(np.isfinite(offsets)),
            "spin offsets must be one finite value per spin",
            OperatorError,
        )
        for i, w in enumerate(offsets):
            m = m + TWO_PI * w * single_spin_op(n, i, Z).matrix
    return OperatorMatrix(m, OperatorKind.HERMITIAN).validated()


def pulse_hamiltonian(
    phase: AxisLike,
    omega1: float,
    h0: OperatorMatrix,
) -> OperatorMatrix:
    """-omega1 * I_phiT + H0 (rad/s)."""
    axis = as_axis(phase)
    require(axis.is_transverse, "pulses about Z are not supported",
            OperatorError)
    require(omega1 > 0 and math.isfinite(omega1),
            f"omega1 must be positive, got {omega1}", OperatorError)
    drive = collective_op(h0.n_spins, axis).matrix
    m = h0.matrix - omega1 * drive
    return OperatorMatrix(m, OperatorKind.HERMITIAN)


class SpectralPropagator:
    """exp(-i H t) for one Hermitian H, reusing a single eigenbasis."""

    def __init__(self, h: OperatorMatrix) -> None:
        require(
            h.kind is OperatorKind.HERMITIAN
            and h.hermiticity_defect() < HERMITIAN_RTOL,
            "propagators need a hermitian operator",
            OperatorError,
        )
        try:
            self._w, self._v = linalg.eigh(h.matrix)
        except linalg.LinAlgError as exc:
            raise OperatorError(f"eigendecomposition failed: {exc}") from exc
        self._vh = self._v.conj().T
        self._cache: Dict[float, OperatorMatrix] = {}
        self.operator = h

    def at(self, t: float) -> OperatorMatrix:
        require(t >= 0 and math.isfinite(t),
                f"propagation time must be >= 0, got {t}", OperatorError)
        u = self._cache.get(t)
        if u is None:
            phases = np.exp(-1j * self._w * t)
            u = OperatorMatrix((self._v * phases) @ self._vh,
                               OperatorKind.UNITARY)
            self._cache[t] = u
        return u


def propagator(h: OperatorMatrix, t: float) -> OperatorMatrix:
    return SpectralPropagator(h).at(t)


def spin_half_rotation(angle: float, axis: AxisLike) -> np.ndarray:
    """exp(+i angle I_axis) for a single spin."""
    op = as_axis(axis).spin_half()
    return (math.cos(angle / 2) * _EYE2
            + 2j * math.sin(angle / 2) * op)


def collective_rotation(n: int, single: np.ndarray) -> np.ndarray:
    """The N-fold tensor power of a single-spin rotation."""
    _check_size(n)
    return reduce(np.kron, [single] * n)


def delta_pulse(n: int, angle: float, phase: AxisLike) -> OperatorMatrix:
    """Instantaneous collective rotation exp(+i angle I_phiT)."""
    u = collective_rotation(n, spin_half_rotation(angle, phase))
    return OperatorMatrix(u, OperatorKind.UNITARY)
