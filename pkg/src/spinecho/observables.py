from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from enum import Enum, auto
from pathlib import Path
from typing import Collection, Sequence, Tuple

import numpy as np

from .errors import SnapshotError, require
from .spinops import X, Y, collective_op, single_spin_op

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "spinecho-snapshot/1"
DEFAULT_THRESHOLD = 1e-3
HERMITIAN_TOL = 1e-10

_WHITE = np.array([255.0, 255.0, 255.0])
_RED = np.array([255.0, 0.0, 0.0])
_BLUE = np.array([0.0, 0.0, 255.0])


class Detection(Enum):
    TOTAL = auto()
    CENTRAL = auto()


class EchoDetector:
    """Transverse signal normalized so that rho = I_yT reads (0, 1)."""

    def __init__(self, n_spins: int, detection: Detection) -> None:
        if detection is Detection.TOTAL:
            self._dx = collective_op(n_spins, X).matrix
            self._dy = collective_op(n_spins, Y).matrix
        else:
            self._dx = single_spin_op(n_spins, 0, X).matrix
            self._dy = single_spin_op(n_spins, 0, Y).matrix
        iy_total = collective_op(n_spins, Y).matrix
        self.norm = float(np.einsum("ij,ji->", iy_total, self._dy).real)
        self.detection = detection
        self.n_detected = n_spins if detection is Detection.TOTAL else 1

    def read(self, rho: np.ndarray) -> Tuple[float, float]:
        sx = np.einsum("ij,ji->", rho, self._dx).real / self.norm
        sy = np.einsum("ij,ji->", rho, self._dy).real / self.norm
        return float(sx), float(sy)


def zeeman_m(n_spins: int) -> np.ndarray:
    """Total I_z eigenvalue of each basis state; a set bit is spin down."""
    idx = np.arange(2 ** n_spins)
    downs = ((idx[:, None] >> np.arange(n_spins)) & 1).sum(axis=1)
    return n_spins / 2.0 - downs


def basis_order(n_spins: int) -> np.ndarray:
    """Basis permutation sorted by M descending, then index."""
    idx = np.arange(2 ** n_spins)
    return np.lexsort((idx, -zeeman_m(n_spins)))


def _n_spins(rho: np.ndarray) -> int:
    dim = rho.shape[0]
    require(
        rho.ndim == 2 and rho.shape == (dim, dim)
        and dim >= 2 and dim & (dim - 1) == 0,
        f"density matrix must be 2**N square, got shape {rho.shape}",
        SnapshotError,
    )
    return dim.bit_length() - 1


@dataclass(frozen=True, eq=False)
class CoherenceDecomposition:
    orders: np.ndarray
    amplitudes: np.ndarray

    def amplitude(self, m: int) -> float:
        n = (len(self.orders) - 1) // 2
        if abs(m) > n:
            return 0.0
        return float(self.amplitudes[m + n])

    def outside(self, allowed: Collection[int] = (-1, 1)) -> float:
        """Sum of A_m over orders not in ``allowed``."""
        keep = ~np.isin(self.orders, list(allowed))
        return float(self.amplitudes[keep].sum())


def coherence_orders(rho: np.ndarray) -> CoherenceDecomposition:
    rho = np.asarray(rho)
    n = _n_spins(rho)
    m = zeeman_m(n)
    delta = np.rint(m[:, None] - m[None, :]).astype(int) + n
    power = np.bincount(delta.ravel(), weights=(np.abs(rho) ** 2).ravel(),
                        minlength=2 * n + 1)
    return CoherenceDecomposition(np.arange(-n, n + 1), np.sqrt(power))


@dataclass(frozen=True, eq=False)
class Snapshot:
    time: float
    pulse_count: int
    rho: np.ndarray
    echo_index: int = 0
    realization: str = "0"

    def __post_init__(self) -> None:
        rho = np.array(self.rho, dtype=complex)
        _n_spins(rho)
        scale = max(float(np.abs(rho).max()), 1e-300)
        defect = float(np.abs(rho - rho.conj().T).max()) / scale
        require(defect < HERMITIAN_TOL,
                f"snapshot density matrix is not hermitian ({defect:.3g})",
                SnapshotError)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def n_spins(self) -> int:
        return self.rho.shape[0].bit_length() - 1

    @property
    def m_values(self) -> np.ndarray:
        return zeeman_m(self.n_spins)

    @property
    def order(self) -> np.ndarray:
        return basis_order(self.n_spins)


def average_density_matrix(snapshots: Sequence[Snapshot]) -> Snapshot:
    require(len(snapshots) > 0, "nothing to average", SnapshotError)
    first = snapshots[0]
    total = np.zeros_like(first.rho)
    for s in snapshots:
        require(s.rho.shape == first.rho.shape,
                "snapshots have different dimensions", SnapshotError)
        require(math.isclose(s.time, first.time, rel_tol=1e-12,
                             abs_tol=1e-15),
                "snapshots were taken at different times", SnapshotError)
        total = total + s.rho
    return Snapshot(
        time=first.time,
        pulse_count=first.pulse_count,
        rho=total / len(snapshots),
        echo_index=first.echo_index,
        realization="averaged",
    )


def phase_colors(values: np.ndarray, threshold: float = DEFAULT_THRESHOLD
                 ) -> np.ndarray:
    """RGB bytes: white at phase 0, red at +pi/2, blue at -pi/2, black
    where the magnitude is below ``threshold`` times the largest one."""
    require(0.0 < threshold < 1.0,
            f"threshold must be in (0, 1), got {threshold}", SnapshotError)
    mag = np.abs(values)
    peak = float(mag.max()) if mag.size else 0.0
    rgb = np.zeros(values.shape + (3,))
    if peak == 0.0:
        return rgb.astype(np.uint8)
    phase = np.angle(values)
    t = 1.0 - np.abs(1.0 - np.abs(phase) / (math.pi / 2))
    target = np.where((phase > 0)[..., None], _RED, _BLUE)
    rgb = _WHITE * (1.0 - t[..., None]) + target * t[..., None]
    rgb[mag < threshold * peak] = 0.0
    return np.rint(rgb).astype(np.uint8)


def snapshot_to_dict(snapshot: Snapshot) -> dict:
    return {
        "format": SNAPSHOT_FORMAT,
        "n_spins": snapshot.n_spins,
        "time_s": snapshot.time,
        "pulse_count": snapshot.pulse_count,
        "echo_index": snapshot.echo_index,
        "realization": snapshot.realization,
        "m_values": snapshot.m_values.tolist(),
        "order": snapshot.order.tolist(),
        "real": snapshot.rho.real.ravel().tolist(),
        "imag": snapshot.rho.imag.ravel().tolist(),
    }


def export_snapshot(
    snapshot: Snapshot,
    path: Path,
    threshold: float = DEFAULT_THRESHOLD,
) -> Tuple[Path, Path]:
    """Write ``<path>.json`` and ``<path>.ppm``."""
    base = Path(path)
    json_path = base.with_name(base.name + ".json")
    ppm_path = base.with_name(base.name + ".ppm")
    order = snapshot.order
    pixels = phase_colors(snapshot.rho[np.ix_(order, order)], threshold)
    h, w, _ = pixels.shape
    try:
        base.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(json.dumps(snapshot_to_dict(snapshot)) + "\n",
                             encoding="utf-8")
        with ppm_path.open("wb") as f:
            f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            f.write(pixels.tobytes())
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {base}: {exc}") from exc
    logger.debug("wrote snapshot %s", base)
    return json_path, ppm_path


def load_snapshot(path: Path) -> Snapshot:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    require(data.get("format") == SNAPSHOT_FORMAT,
            f"{path}: not a snapshot file", SnapshotError)
    dim = 2 ** int(data["n_spins"])
    real = np.asarray(data["real"], dtype=float)
    imag = np.asarray(data["imag"], dtype=float)
    require(real.size == dim * dim and imag.size == dim * dim,
            f"{path}: matrix size does not match n_spins", SnapshotError)
    rho = np.empty(dim * dim, dtype=complex)
    rho.real = real
    rho.imag = imag
    return Snapshot(
        time=float(data["time_s"]),
        pulse_count=int(data["pulse_count"]),
        rho=rho.reshape(dim, dim),
        echo_index=int(data["echo_index"]),
        realization=str(data["realization"]),
    )
