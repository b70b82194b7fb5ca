"""Disordered spin clusters cut from a lattice, and their dipolar couplings.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum, auto
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import constants as sc
from scipy.spatial.transform import Rotation

from .errors import LatticeError, SamplingError, require

logger = logging.getLogger(__name__)

# gamma/2pi in Hz/T
SI29_GAMMA_OVER_2PI = 99.5e6 / 11.75
C13_GAMMA_OVER_2PI = 10.7084e6

DIAMOND_SILICON_A = 5.431e-10
FCC_C60_A = 14.17e-10

_FCC_BASIS = (
    (0.0, 0.0, 0.0),
    (0.0, 0.5, 0.5),
    (0.5, 0.0, 0.5),
    (0.5, 0.5, 0.0),
)
_DIAMOND_BASIS = _FCC_BASIS + tuple(
    (x + 0.25, y + 0.25, z + 0.25) for x, y, z in _FCC_BASIS
)

RADIUS_TOLERANCE = 1e-9
RADIUS_GROWTH = 1.5
MAX_RADIUS_GROWTHS = 6
TARGET_SITES_PER_SPIN = 4

SeedLike = Union[int, np.random.Generator]


@dataclass(frozen=True)
class PhysicalConstants:
    mu0_over_4pi: float = 1e-7
    hbar: float = sc.hbar


DEFAULT_CONSTANTS = PhysicalConstants()


class Selection(Enum):
    STRONGEST_COUPLING = auto()
    NEAREST_DISTANCE = auto()


class OffsetWidth(Enum):
    FWHM = auto()
    SIGMA = auto()


@dataclass(frozen=True, eq=False)
class CouplingTable:
    """Pairwise B_ij/h in Hz; symmetric with a zero diagonal."""

    b_over_h: np.ndarray

    def __post_init__(self) -> None:
        b = np.array(self.b_over_h, dtype=float)
        require(
            b.ndim == 2 and b.shape[0] == b.shape[1] and b.shape[0] >= 1,
            f"coupling table must be square, got shape {b.shape}",
            LatticeError,
        )
        require(bool(np.all(np.isfinite(b))),
                "couplings must be finite", LatticeError)
        require(bool(np.array_equal(b, b.T)),
                "coupling table must be symmetric", LatticeError)
        require(bool(np.all(np.diag(b) == 0.0)),
                "coupling table must have a zero diagonal", LatticeError)
        b.setflags(write=False)
        object.__setattr__(self, "b_over_h", b)

    @property
    def n(self) -> int:
        return self.b_over_h.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "CouplingTable":
        return cls(np.zeros((n, n)))

    def scaled(self, factor: float) -> "CouplingTable":
        return CouplingTable(self.b_over_h * factor)


@dataclass(frozen=True)
class LatticeSpec:
    """A Bravais lattice with a basis, or an explicit list of sites.

    ``basis`` holds fractional coordinates of the cell spanned by
    ``lattice_vectors`` (meters, rows); when those are omitted the cell is
    cubic with edge ``lattice_constant``.  ``multiplicity`` gives each
    lattice point that many independent occupancy slots whose spins do
    not couple to each other.
    """

    name: str
    lattice_constant: float
    basis: Tuple[Tuple[float, float, float], ...] = ((0.0, 0.0, 0.0),)
    lattice_vectors: Optional[Tuple[Tuple[float, float, float], ...]] = None
    site_list: Optional[Tuple[Tuple[float, float, float], ...]] = None
    multiplicity: int = 1

    def __post_init__(self) -> None:
        require(self.lattice_constant > 0,
                f"lattice constant must be > 0, got {self.lattice_constant}",
                LatticeError)
        require(self.multiplicity >= 1,
                f"multiplicity must be >= 1, got {self.multiplicity}",
                LatticeError)
        if self.site_list is None:
            require(len(self.basis) > 0, "basis must be non-empty",
                    LatticeError)
            require(
                any(np.allclose(b, 0.0) for b in self.basis),
                "basis must contain the origin", LatticeError,
            )
        else:
            require(len(self.site_list) > 0, "site list must be non-empty",
                    LatticeError)

    @classmethod
    def diamond(cls, a: float = DIAMOND_SILICON_A) -> "LatticeSpec":
        return cls("diamond", a, _DIAMOND_BASIS)

    @classmethod
    def fcc(cls, a: float = FCC_C60_A, multiplicity: int = 1
            ) -> "LatticeSpec":
        return cls("fcc", a, _FCC_BASIS, multiplicity=multiplicity)

    @classmethod
    def builtin(cls, name: str, **kwargs) -> "LatticeSpec":
        builders = {"diamond": cls.diamond, "fcc": cls.fcc}
        if name not in builders:
            raise LatticeError(
                f"unknown lattice '{name}' (expected one of "
                f"{sorted(builders)} or a custom lattice file)"
            )
        return builders[name](**kwargs)

    def cell_vectors(self) -> np.ndarray:
        if self.lattice_vectors is None:
            return np.eye(3) * self.lattice_constant
        return np.asarray(self.lattice_vectors, dtype=float)

    def site_density(self) -> float:
        """Occupancy slots per cubic meter."""
        if self.site_list is not None:
            return math.nan
        volume = abs(float(np.linalg.det(self.cell_vectors())))
        return len(self.basis) * self.multiplicity / volume


def load_custom_lattice(path: Path, multiplicity: int = 1) -> LatticeSpec:
    """Read ``{lattice_vectors, basis}`` or ``{sites}`` (meters) from JSON.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise LatticeError(f"cannot read lattice file {path}: {exc}") from exc
    require(isinstance(data, dict), f"{path}: expected a JSON object",
            LatticeError)
    name = str(data.get("name", Path(path).stem))
    multiplicity = int(data.get("multiplicity", multiplicity))

    if "sites" in data:
        sites = np.asarray(data["sites"], dtype=float)
        require(sites.ndim == 2 and sites.shape[1] == 3,
                f"{path}: sites must be a list of 3-vectors", LatticeError)
        sites = sites - sites[0]
        spread = np.linalg.norm(sites[1:], axis=1)
        scale = float(spread.min()) if spread.size else 1.0
        return LatticeSpec(
            name=name,
            lattice_constant=scale,
            site_list=tuple(map(tuple, sites)),
            multiplicity=multiplicity,
        )

    require("lattice_vectors" in data and "basis" in data,
            f"{path}: need either 'sites' or 'lattice_vectors' + 'basis'",
            LatticeError)
    vectors = np.asarray(data["lattice_vectors"], dtype=float)
    require(vectors.shape == (3, 3),
            f"{path}: lattice_vectors must be 3x3", LatticeError)
    require(abs(np.linalg.det(vectors)) > 0,
            f"{path}: lattice_vectors are degenerate", LatticeError)
    basis = np.asarray(data["basis"], dtype=float)
    require(basis.ndim == 2 and basis.shape[1] == 3,
            f"{path}: basis must be a list of fractional 3-vectors",
            LatticeError)
    return LatticeSpec(
        name=name,
        lattice_constant=float(np.linalg.norm(vectors[0])),
        basis=tuple(map(tuple, basis)),
        lattice_vectors=tuple(map(tuple, vectors)),
        multiplicity=multiplicity,
    )


def _sort_sites(sites: np.ndarray, scale: float) -> np.ndarray:
    reduced = np.round(sites / scale, 9) + 0.0
    dist = np.round(np.linalg.norm(sites, axis=1) / scale, 9)
    order = np.lexsort((reduced[:, 2], reduced[:, 1], reduced[:, 0], dist))
    return sites[order]


def generate_sites(spec: LatticeSpec, radius: float) -> np.ndarray:
    """Lattice points within ``radius`` of the origin site, shape (M, 3).

    Sorted by distance, then by x, y, z, so the origin comes first.
    """
    require(radius >= 0 and math.isfinite(radius),
            f"radius must be finite and >= 0, got {radius}", LatticeError)
    cutoff = radius * (1.0 + RADIUS_TOLERANCE)

    if spec.site_list is not None:
        sites = np.asarray(spec.site_list, dtype=float)
        sites = sites - sites[0]
    else:
        vectors = spec.cell_vectors()
        volume = abs(float(np.linalg.det(vectors)))
        heights = [
            volume / np.linalg.norm(np.cross(vectors[j], vectors[k]))
            for j, k in ((1, 2), (2, 0), (0, 1))
        ]
        reach = [int(math.ceil(cutoff / h)) + 1 for h in heights]
        grids = np.meshgrid(
            *(np.arange(-r, r + 1) for r in reach), indexing="ij"
        )
        cells = np.stack([g.ravel() for g in grids], axis=1).astype(float)
        basis = np.asarray(spec.basis, dtype=float)
        frac = (cells[:, None, :] + basis[None, :, :]).reshape(-1, 3)
        sites = frac @ vectors

    keep = np.linalg.norm(sites, axis=1) <= cutoff
    return _sort_sites(sites[keep], spec.lattice_constant)


def dipolar_prefactor(gamma: float,
                      constants: PhysicalConstants = DEFAULT_CONSTANTS
                      ) -> float:
    """B * r**3 / (1 - 3 cos^2 theta) in Hz m^3 for gyromagnetic ratio
    ``gamma`` in rad/s/T."""
    return constants.mu0_over_4pi * gamma ** 2 * constants.hbar / (4 * math.pi)


def coupling_constants(
    positions: np.ndarray,
    gamma: float,
    z_axis: Sequence[float] = (0.0, 0.0, 1.0),
    site_ids: Optional[Sequence[int]] = None,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> CouplingTable:
    """B_ij/h = (mu0/4pi) gamma^2 hbar (1 - 3 cos^2 theta) / (4 pi r^3).

    Spins sharing a ``site_ids`` value do not couple.
    """
    pos = np.asarray(positions, dtype=float)
    require(pos.ndim == 2 and pos.shape[1] == 3,
            f"positions must have shape (N, 3), got {pos.shape}",
            LatticeError)
    axis = np.asarray(z_axis, dtype=float)
    require(abs(np.linalg.norm(axis) - 1.0) < 1e-12,
            "z_axis must be a unit vector", LatticeError)
    n = pos.shape[0]
    ids = np.arange(n) if site_ids is None else np.asarray(site_ids)
    require(ids.shape == (n,), "site_ids needs one entry per position",
            LatticeError)

    rows, cols = np.triu_indices(n, k=1)
    delta = pos[cols] - pos[rows]
    r = np.linalg.norm(delta, axis=1)
    coupled = ids[rows] != ids[cols]
    require(bool(np.all(r[coupled] > 0)),
            "coincident positions on distinct sites", LatticeError)

    upper = np.zeros((n, n))
    safe_r = np.where(coupled, r, 1.0)
    cos_theta = (delta @ axis) / safe_r
    b = dipolar_prefactor(gamma, constants) / safe_r ** 3
    b = b * (1.0 - 3.0 * cos_theta ** 2)
    upper[rows, cols] = np.where(coupled, b, 0.0)
    return CouplingTable(upper + upper.T)


def sample_offset(
    fwhm: float,
    seed: SeedLike,
    width: OffsetWidth = OffsetWidth.FWHM,
    size: Optional[int] = None,
) -> Union[float, np.ndarray]:
    """Zero-centred Gaussian offset(s) in Hz."""
    require(fwhm >= 0 and math.isfinite(fwhm),
            f"offset width must be finite and >= 0, got {fwhm}",
            LatticeError)
    rng = np.random.default_rng(seed)
    if width is OffsetWidth.FWHM:
        sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    else:
        sigma = fwhm
    if sigma == 0.0:
        return 0.0 if size is None else np.zeros(size)
    draw = rng.normal(0.0, sigma, size)
    return float(draw) if size is None else draw


@dataclass(frozen=True)
class DisorderConfig:
    abundance: float
    n_spins: int
    shell_radius: Optional[float] = None
    gamma_over_2pi: float = SI29_GAMMA_OVER_2PI
    gamma_scale: float = 1.0
    offset_fwhm: float = 0.0
    offset_width: OffsetWidth = OffsetWidth.FWHM
    selection: Selection = Selection.STRONGEST_COUPLING
    per_spin_offsets: bool = False

    def __post_init__(self) -> None:
        require(0.0 < self.abundance <= 1.0,
                f"abundance must be in (0, 1], got {self.abundance}",
                LatticeError)
        require(self.n_spins >= 1,
                f"n_spins must be >= 1, got {self.n_spins}", LatticeError)
        require(self.shell_radius is None or self.shell_radius > 0,
                f"shell_radius must be > 0, got {self.shell_radius}",
                LatticeError)
        require(self.gamma_over_2pi > 0 and self.gamma_scale > 0,
                "gyromagnetic ratio and its scale must be > 0",
                LatticeError)
        require(self.offset_fwhm >= 0,
                f"offset_fwhm must be >= 0, got {self.offset_fwhm}",
                LatticeError)

    @property
    def gamma(self) -> float:
        """rad/s/T, scale included."""
        return 2.0 * math.pi * self.gamma_over_2pi * self.gamma_scale


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    positions: np.ndarray
    rotation: Tuple[float, float, float, float]
    omega_z: float
    seed: int
    couplings: CouplingTable
    site_ids: Tuple[int, ...] = ()
    spin_offsets: Optional[np.ndarray] = None

    @property
    def n_spins(self) -> int:
        return self.couplings.n

    @classmethod
    def from_couplings(
        cls,
        couplings: Union[CouplingTable, np.ndarray],
        omega_z: float = 0.0,
        seed: int = 0,
    ) -> "DisorderRealization":
        """A realization with prescribed couplings and placeholder geometry.
        """
        table = (couplings if isinstance(couplings, CouplingTable)
                 else CouplingTable(np.asarray(couplings, dtype=float)))
        n = table.n
        positions = np.column_stack(
            [np.arange(n, dtype=float), np.zeros(n), np.zeros(n)]
        )
        return cls(
            positions=positions,
            rotation=(0.0, 0.0, 0.0, 1.0),
            omega_z=float(omega_z),
            seed=seed,
            couplings=table,
            site_ids=tuple(range(n)),
        )

    def with_couplings(self, couplings: CouplingTable
                       ) -> "DisorderRealization":
        return DisorderRealization(
            positions=self.positions,
            rotation=self.rotation,
            omega_z=self.omega_z,
            seed=self.seed,
            couplings=couplings,
            site_ids=self.site_ids,
            spin_offsets=self.spin_offsets,
        )

    def scaled(self, factor: float) -> "DisorderRealization":
        """Every coupling and offset multiplied by ``factor``."""
        offsets = self.spin_offsets
        return DisorderRealization(
            positions=self.positions,
            rotation=self.rotation,
            omega_z=self.omega_z * factor,
            seed=self.seed,
            couplings=self.couplings.scaled(factor),
            site_ids=self.site_ids,
            spin_offsets=None if offsets is None else offsets * factor,
        )


def auto_radius(spec: LatticeSpec, config: DisorderConfig) -> float:
    """Shell radius holding about 4 * n_spins occupied sites on average."""
    if spec.site_list is not None:
        sites = np.asarray(spec.site_list, dtype=float)
        return float(np.linalg.norm(sites - sites[0], axis=1).max())
    occupied_density = config.abundance * spec.site_density()
    target = TARGET_SITES_PER_SPIN * config.n_spins
    volume = target / occupied_density
    return float((3.0 * volume / (4.0 * math.pi)) ** (1.0 / 3.0))


@dataclass
class _Draw:
    positions: np.ndarray
    site_ids: np.ndarray
    rotation: Rotation
    rng: np.random.Generator = field(repr=False)


def _draw_cluster(
    spec: LatticeSpec,
    config: DisorderConfig,
    seed: int,
    radius: float,
) -> Optional[_Draw]:
    rng = np.random.default_rng(seed)
    rotation = Rotation.random(None, rng)
    sites = generate_sites(spec, radius)
    occupied = rng.random((len(sites), spec.multiplicity)) < config.abundance
    occupied[0, 0] = True
    site_idx, _ = np.nonzero(occupied)
    if len(site_idx) < config.n_spins:
        return None

    rotated = rotation.apply(sites)
    candidates = site_idx[1:]
    if config.selection is Selection.STRONGEST_COUPLING:
        delta = rotated[candidates]
        r = np.linalg.norm(delta, axis=1)
        same_site = candidates == 0
        safe_r = np.where(same_site, 1.0, r)
        cos2 = (delta[:, 2] / safe_r) ** 2
        strength = np.abs((1.0 - 3.0 * cos2) / safe_r ** 3)
        strength = np.where(same_site, 0.0, strength)
        order = np.argsort(-strength, kind="stable")
    else:
        order = np.arange(len(candidates))
    chosen = np.concatenate(
        ([site_idx[0]], candidates[order[: config.n_spins - 1]])
    )
    return _Draw(rotated[chosen], chosen, rotation, rng)


def sample_realization(
    spec: LatticeSpec,
    config: DisorderConfig,
    seed: int,
    constants: PhysicalConstants = DEFAULT_CONSTANTS,
) -> DisorderRealization:
    """One disorder realization, fully determined by (spec, config, seed).
    """
    radius = config.shell_radius or auto_radius(spec, config)
    for _ in range(MAX_RADIUS_GROWTHS + 1):
        draw = _draw_cluster(spec, config, seed, radius)
        if draw is not None or spec.site_list is not None:
            break
        logger.warning(
            "seed %d: fewer than %d occupied sites within %.4g m, "
            "growing the shell", seed, config.n_spins, radius,
        )
        radius *= RADIUS_GROWTH
    if draw is None:
        raise SamplingError(
            f"seed {seed}: could not place {config.n_spins} spins "
            f"(abundance {config.abundance}, final radius {radius:.4g} m)"
        )

    spin_offsets = None
    if config.per_spin_offsets:
        omega_z = 0.0
        spin_offsets = sample_offset(config.offset_fwhm, draw.rng,
                                     config.offset_width, config.n_spins)
    else:
        omega_z = sample_offset(config.offset_fwhm, draw.rng,
                                config.offset_width)

    couplings = coupling_constants(
        draw.positions, config.gamma, site_ids=draw.site_ids,
        constants=constants,
    )
    return DisorderRealization(
        positions=draw.positions,
        rotation=tuple(float(q) for q in draw.rotation.as_quat()),
        omega_z=float(omega_z),
        seed=seed,
        couplings=couplings,
        site_ids=tuple(int(i) for i in draw.site_ids),
        spin_offsets=spin_offsets,
    )
