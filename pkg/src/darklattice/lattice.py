"""Square lattices, defects and periodic detuning patterns.

Lengths are in units of the transition wavelength lambda0, detunings in units
of the single-atom decay rate gamma0 and times in 1/gamma0. Pattern
quasimomenta are stored in units of 1/d, so that the phase of a component at
integer site index ``n`` is simply ``Q . n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConsistencyError, InvalidInputError

CIRCULAR = np.array([1.0, 1.0j, 0.0]) / np.sqrt(2.0)

REALNESS_TOL = 1e-12
IMAG_RESIDUE_TOL = 1e-10


def _unit_envelope(t: float) -> float:
    return 1.0


@dataclass(frozen=True, eq=False)
class Lattice:
    """Finite square array in the z = 0 plane.

    ``indices`` holds integer grid coordinates of the remaining atoms; for even
    atom counts the grid is shifted by half a pitch so that the array stays
    centered on the origin while indices remain integers.
    """

    spacing: float
    nx: int
    ny: int
    dipole: np.ndarray
    indices: np.ndarray  # (N, 2) int
    defects: frozenset = frozenset()

    @property
    def offset(self) -> np.ndarray:
        return np.array([(self.nx - 1) / 2 - (self.nx - 1) // 2,
                         (self.ny - 1) / 2 - (self.ny - 1) // 2])

    @property
    def positions(self) -> np.ndarray:
        xy = (self.indices - self.offset) * self.spacing
        return np.column_stack([xy, np.zeros(len(xy))])

    @property
    def n_atoms(self) -> int:
        return len(self.indices)

    @property
    def full_indices(self) -> np.ndarray:
        """Grid indices of the defect-free lattice, in flat-index order."""
        ix = np.arange(self.nx) - (self.nx - 1) // 2
        iy = np.arange(self.ny) - (self.ny - 1) // 2
        gx, gy = np.meshgrid(ix, iy, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    @property
    def flat_index(self) -> np.ndarray:
        """Position of each present atom in the row-major (nx, ny) grid."""
        i = self.indices[:, 0] + (self.nx - 1) // 2
        j = self.indices[:, 1] + (self.ny - 1) // 2
        return i * self.ny + j

    @property
    def defect_indices(self) -> list[int]:
        """Row-major flat indices in [0, nx ny) of the removed atoms, sorted."""
        return sorted((i + (self.nx - 1) // 2) * self.ny + j + (self.ny - 1) // 2 for i, j in self.defects)

    def to_grid(self, values: np.ndarray, fill=0.0) -> np.ndarray:
        """Scatter per-atom values onto the full (nx, ny) grid."""
        values = np.asarray(values)
        grid = np.full((self.nx * self.ny,) + values.shape[1:], fill, dtype=values.dtype)
        grid[self.flat_index] = values
        return grid.reshape((self.nx, self.ny) + values.shape[1:])

    def gaussian(self, waist: float, center=(0.0, 0.0)) -> np.ndarray:
        """Field amplitude exp(-|r - c|^2 / waist^2) at every atom."""
        xy = self.positions[:, :2] - np.asarray(center, dtype=float)
        return np.exp(-np.sum(xy**2, axis=1) / waist**2)


def build_square_lattice(nx: int, ny: int, spacing: float, dipole=CIRCULAR) -> Lattice:
    if nx < 1 or ny < 1:
        raise InvalidInputError(f"atom counts must be >= 1, got ({nx}, {ny})")
    if not spacing > 0:
        raise InvalidInputError(f"spacing must be positive, got {spacing}")
    dipole = np.asarray(dipole, dtype=complex)
    if dipole.shape != (3,):
        raise InvalidInputError("dipole must be a 3-vector")
    norm = np.linalg.norm(dipole)
    if norm == 0:
        raise InvalidInputError("dipole vector is zero")
    ix = np.arange(nx) - (nx - 1) // 2
    iy = np.arange(ny) - (ny - 1) // 2
    gx, gy = np.meshgrid(ix, iy, indexing="ij")
    indices = np.column_stack([gx.ravel(), gy.ravel()]).astype(int)
    dipole = dipole / norm
    dipole.setflags(write=False)
    indices.setflags(write=False)
    return Lattice(float(spacing), int(nx), int(ny), dipole, indices)


def apply_defects(lattice: Lattice, holes: Iterable[Sequence[float]]) -> Lattice:
    """Remove the atoms at ``holes``, given as in-plane positions in units of d."""
    holes = [np.asarray(h, dtype=float)[:2] for h in holes]
    if not holes:
        return lattice
    rel = lattice.indices - lattice.offset
    keep = np.ones(lattice.n_atoms, dtype=bool)
    removed = set()
    for h in holes:
        dist = np.max(np.abs(rel - h), axis=1)
        hit = np.flatnonzero(dist < 1e-9)
        if hit.size == 0 or not keep[hit[0]]:
            raise InvalidInputError(f"hole at {tuple(h)} d does not match any remaining atom")
        keep[hit[0]] = False
        removed.add(tuple(int(v) for v in lattice.indices[hit[0]]))
    indices = lattice.indices[keep].copy()
    indices.setflags(write=False)
    return replace(lattice, indices=indices, defects=lattice.defects | frozenset(removed))


@dataclass(frozen=True, eq=False)
class DetuningPattern:
    """Fourier representation of a periodic detuning landscape.

    ``components`` maps integer harmonics ``(qx, qy)`` (with 0 <= q < period)
    to complex amplitudes in gamma0; the quasimomentum of a harmonic is
    ``2 pi (qx / Nx, qy / Ny)`` in units of 1/d.
    """

    components: Mapping[tuple, complex]
    period: tuple = (1, 1)
    envelope: Callable[[float], float] = field(default=_unit_envelope)

    def __post_init__(self):
        nxp, nyp = self.period
        if nxp < 1 or nyp < 1:
            raise InvalidInputError(f"period must be positive, got {self.period}")
        comps = {}
        for (qx, qy), amp in dict(self.components).items():
            key = (int(qx) % nxp, int(qy) % nyp)
            comps[key] = comps.get(key, 0) + complex(amp)
        for (qx, qy), amp in comps.items():
            partner = ((nxp - qx) % nxp, (nyp - qy) % nyp)
            other = comps.get(partner, 0.0)
            if abs(amp - np.conj(other)) > REALNESS_TOL:
                raise InvalidInputError(
                    f"realness violated: component {(qx, qy)} = {amp} but "
                    f"{partner} = {other}; they must be complex conjugates")
        object.__setattr__(self, "components", comps)

    @property
    def quasimomenta(self) -> np.ndarray:
        """(M, 2) array of Q in units of 1/d, in the order of ``amplitudes``."""
        keys = list(self.components)
        nxp, nyp = self.period
        return np.array([[2 * np.pi * qx / nxp, 2 * np.pi * qy / nyp] for qx, qy in keys]).reshape(-1, 2)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array(list(self.components.values()), dtype=complex)

    def with_envelope(self, envelope: Callable[[float], float]) -> "DetuningPattern":
        return replace(self, envelope=envelope)

    def scaled(self, factor: float) -> "DetuningPattern":
        return DetuningPattern({k: factor * v for k, v in self.components.items()},
                               self.period, self.envelope)

    def spatial(self, n: np.ndarray) -> np.ndarray:
        """Time-independent part of the detuning at integer sites ``n`` (..., 2)."""
        n = np.asarray(n, dtype=float)
        if not self.components:
            return np.zeros(n.shape[:-1])
        phase = np.exp(1j * (n @ self.quasimomenta.T))
        values = phase @ self.amplitudes
        resid = np.max(np.abs(values.imag), initial=0.0)
        if resid > IMAG_RESIDUE_TOL:
            raise ConsistencyError(f"detuning has imaginary residue {resid:.3e}")
        return values.real


def sample_detuning(pattern: DetuningPattern, position, t: float = 0.0, spacing: float | None = None) -> float:
    """Detuning at one site and time.

    ``position`` is in units of d unless ``spacing`` is given, in which case it
    is taken in units of lambda0 and divided by the spacing.
    """
    pos = np.asarray(position, dtype=float)[:2]
    if spacing is not None:
        pos = pos / spacing
    return float(pattern.envelope(t) * pattern.spatial(pos))


def site_detunings(pattern: DetuningPattern, lattice: Lattice, t: float = 0.0) -> np.ndarray:
    return pattern.envelope(t) * pattern.spatial(lattice.indices)


def preset_pattern(kind: str, *params) -> DetuningPattern:
    """Build one of the standard patterns.

    ==============  ==============================  ===================
    kind            parameters                      harmonics
    ==============  ==============================  ===================
    uniform         delta (real)                    Q = 0
    checkerboard    delta (real)                    Q = (pi, pi)
    stripe_x        delta (real)                    Q = (pi, 0)
    stripe_y        delta (real)                    Q = (0, pi)
    period3_x/y     alpha (real), beta (complex)    Q = 0, +-2pi/3
    period4_x/y     alpha, beta, delta              Q = 0, +-pi/2, pi
    ==============  ==============================  ===================
    """
    def real(v, name):
        v = complex(v)
        if abs(v.imag) > REALNESS_TOL:
            raise InvalidInputError(f"{kind}: {name} must be real, got {v}")
        return v.real

    nparams = {"uniform": 1, "checkerboard": 1, "stripe_x": 1, "stripe_y": 1,
               "period3_x": 2, "period3_y": 2, "period4_x": 3, "period4_y": 3}
    if kind not in nparams:
        raise InvalidInputError(f"unknown pattern kind {kind!r}")
    if len(params) != nparams[kind]:
        raise InvalidInputError(f"{kind} takes {nparams[kind]} parameter(s), got {len(params)}")

    if kind == "uniform":
        return DetuningPattern({(0, 0): real(params[0], "delta")}, (1, 1))
    if kind == "checkerboard":
        return DetuningPattern({(1, 1): real(params[0], "delta")}, (2, 2))
    if kind == "stripe_x":
        return DetuningPattern({(1, 0): real(params[0], "delta")}, (2, 1))
    if kind == "stripe_y":
        return DetuningPattern({(0, 1): real(params[0], "delta")}, (1, 2))

    axis = kind[-1]
    if kind.startswith("period3"):
        alpha, beta = real(params[0], "alpha"), complex(params[1])
        comps = {0: alpha, 1: beta, 2: np.conj(beta)}
        n = 3
    else:
        alpha, beta, delta = real(params[0], "alpha"), complex(params[1]), real(params[2], "delta")
        comps = {0: alpha, 1: beta, 3: np.conj(beta), 2: delta}
        n = 4
    if axis == "x":
        return DetuningPattern({(q, 0): a for q, a in comps.items()}, (n, 1))
    return DetuningPattern({(0, q): a for q, a in comps.items()}, (1, n))


def pattern_from_components(period, components: Mapping[tuple, complex]) -> DetuningPattern:
    return DetuningPattern(dict(components), tuple(period))
