"""Band structures of the square lattice and of its checkerboard-detuned version.

High-symmetry labels (k in units of pi/d):
Gamma = (0, 0), X = (1, 0), M = (1, 1) for the square zone, and for the
reduced zone of the checkerboard lattice X' = (1/2, 1/2) (edge midpoint) and
M' = (1, 0) (corner).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .lattice import CIRCULAR
from .greens import (DEFAULT_RADIUS, dispersion_many, in_first_zone, lattice_sum,
                     radiative_decay_exact_many)

_POINTS = {
    "G": (0.0, 0.0), "Γ": (0.0, 0.0), "GAMMA": (0.0, 0.0),
    "X": (1.0, 0.0), "Y": (0.0, 1.0), "M": (1.0, 1.0),
    "X'": (0.5, 0.5), "M'": (1.0, 0.0),
}


def high_symmetry_point(label: str, spacing: float) -> np.ndarray:
    key = label.strip().upper().replace("′", "'")
    if key not in _POINTS:
        raise InvalidInputError(f"unknown high-symmetry label {label!r}")
    return np.array(_POINTS[key]) * np.pi / spacing


@dataclass
class BandPath:
    """Piecewise-linear path through the Brillouin zone.

    ``vertices`` is a list of (label, (kx, ky)) with k in units of 1/lambda0.
    """
    vertices: list
    samples_per_segment: int = 50

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise InvalidInputError("a band path needs at least two vertices")
        if self.samples_per_segment < 1:
            raise InvalidInputError("samples_per_segment must be >= 1")
        self.vertices = [(str(lab), np.asarray(k, dtype=float)) for lab, k in self.vertices]

    @classmethod
    def from_labels(cls, labels: Sequence[str], spacing: float, samples_per_segment: int = 50) -> "BandPath":
        if isinstance(labels, str):
            labels = [s for s in labels.split(",") if s]
        return cls([(lab, high_symmetry_point(lab, spacing)) for lab in labels], samples_per_segment)

    def check(self, spacing: float) -> None:
        for lab, k in self.vertices:
            if not in_first_zone(k, spacing):
                raise InvalidInputError(f"vertex {lab} lies outside the first Brillouin zone")

    def sample(self) -> tuple[np.ndarray, np.ndarray]:
        """(fractions along the path in [0, 1], k points (M, 2))."""
        ks = []
        for (_, a), (_, b) in zip(self.vertices[:-1], self.vertices[1:]):
            s = np.arange(self.samples_per_segment) / self.samples_per_segment
            ks.append(a + s[:, None] * (b - a))
        ks.append(self.vertices[-1][1][None, :])
        ks = np.concatenate(ks)
        seg = np.linalg.norm(np.diff(ks, axis=0), axis=1)
        dist = np.concatenate([[0.0], np.cumsum(seg)])
        return dist / dist[-1] if dist[-1] > 0 else dist, ks


@dataclass
class BandPoint:
    k: np.ndarray
    branches: list = field(default_factory=list)  # [(shift, decay), ...]
    fraction: float = 0.0

    @property
    def shifts(self) -> np.ndarray:
        return np.array([b[0] for b in self.branches])

    @property
    def decays(self) -> np.ndarray:
        return np.array([b[1] for b in self.branches])


def _radius(spacing, R):
    return DEFAULT_RADIUS * spacing if R is None else R


def band_path_bravais(path: BandPath, spacing: float, dipole, R: float | None = None,
                      folded: bool = False, fold_vector=None, decay: str = "exact") -> list[BandPoint]:
    """J_k and Gamma_k along ``path``.

    With ``folded`` each point carries a second branch at k + Q, the
    representation on the zone of the checkerboard lattice (Q = (pi, pi)/d
    unless ``fold_vector`` is given). ``decay="exact"`` takes Gamma_k from the
    closed-form infinite-lattice expression, ``"sum"`` from the truncated sum.
    """
    path.check(spacing)
    frac, ks = path.sample()
    R = _radius(spacing, R)
    vals = [dispersion_many(ks, spacing, dipole, R, decay=decay)]
    if folded:
        Q = np.full(2, np.pi / spacing) if fold_vector is None else np.asarray(fold_vector, dtype=float)
        vals.append(dispersion_many(ks + Q, spacing, dipole, R, decay=decay))
    out = []
    for i, k in enumerate(ks):
        branches = sorted((float(v[i].real), float(-2 * v[i].imag)) for v in vals)
        out.append(BandPoint(k, branches, float(frac[i])))
    return out


def checkerboard_blocks(ks, spacing: float, dipole, R: float | None = None,
                        decay: str = "exact") -> tuple[np.ndarray, np.ndarray]:
    """Intra-sublattice (A, including the self term) and inter-sublattice (B) sums.

    The imaginary parts follow from the Bravais decay at k and k + (pi, pi)/d,
    Im A = -(Gamma_k + Gamma_k+Q) / 4 and Im B = -(Gamma_k - Gamma_k+Q) / 4,
    which with ``decay="exact"`` are taken from the closed form.
    """
    R = _radius(spacing, R)
    A = -0.5j + lattice_sum(ks, spacing, dipole, R, parity=0)
    B = lattice_sum(ks, spacing, dipole, R, parity=1)
    if decay == "exact":
        ks = np.asarray(ks, dtype=float)
        g1 = radiative_decay_exact_many(ks, spacing, dipole)
        g2 = radiative_decay_exact_many(ks + np.pi / spacing, spacing, dipole)
        A = A.real - 0.25j * (g1 + g2)
        B = B.real - 0.25j * (g1 - g2)
    elif decay != "sum":
        raise InvalidInputError(f"decay must be 'sum' or 'exact', got {decay!r}")
    return A, B


def checkerboard_eigenvalues(ks, spacing: float, Delta: float, dipole, R: float | None = None,
                             decay: str = "exact") -> np.ndarray:
    """Eigenvalues of [[A - Delta, B], [B, A + Delta]] for each k, shape (..., 2)."""
    A, B = checkerboard_blocks(ks, spacing, dipole, R, decay)
    root = np.sqrt(B**2 + Delta**2 + 0j)
    return np.stack([A - root, A + root], axis=-1)


def band_path_checkerboard(path: BandPath, spacing: float, Delta: float, dipole,
                           R: float | None = None, decay: str = "exact") -> list[BandPoint]:
    """Two bands of the lattice with detuning Delta (-1)^(n_x + n_y).

    The sublattice sums are evaluated on the original grid restricted by
    parity, which is the same as summing over the rotated sqrt(2) d grid
    with basis offset (d, 0).
    """
    if Delta < 0:
        raise InvalidInputError("Delta must be non-negative")
    path.check(spacing)
    frac, ks = path.sample()
    ev = checkerboard_eigenvalues(ks, spacing, Delta, dipole, R, decay)
    out = []
    for i, k in enumerate(ks):
        branches = sorted((float(v.real), float(-2 * v.imag)) for v in ev[i])
        out.append(BandPoint(k, branches, float(frac[i])))
    return out


_DIRECTIONS = {"MG": np.array([-1.0, -1.0]) / np.sqrt(2), "MX": np.array([0.0, -1.0])}


def curvature_at_M(spacing: float, direction: str = "MG", dipole=None, R: float | None = None,
                   h: float | None = None) -> float:
    """Second derivative of J_k at M along M-Gamma or M-X, in gamma0 lambda0^2.

    Central difference with step h = 1e-3 pi/d by default.
    """
    if not spacing < 1 / np.sqrt(2):
        raise InvalidInputError("curvature at M needs d < lambda0 / sqrt(2)")
    key = direction.upper().replace("Γ", "G")
    if key not in _DIRECTIONS:
        raise InvalidInputError(f"direction must be 'MG' or 'MX', got {direction!r}")
    dipole = CIRCULAR if dipole is None else dipole
    h = 1e-3 * np.pi / spacing if h is None else h
    M = np.full(2, np.pi / spacing)
    u = _DIRECTIONS[key]
    ks = np.array([M - h * u, M, M + h * u])
    J = dispersion_many(ks, spacing, dipole, _radius(spacing, R)).real
    return float((J[0] - 2 * J[1] + J[2]) / h**2)


def band_rows(points: list[BandPoint]) -> list[tuple]:
    """Rows (k_path_fraction, kx, ky, branch_index, shift, decay) for CSV output."""
    rows = []
    for p in points:
        for b, (shift, decay) in enumerate(p.branches):
            rows.append((p.fraction, float(p.k[0]), float(p.k[1]), b, shift, decay))
    return rows


BAND_COLUMNS = ("k_path_fraction", "kx", "ky", "branch_index", "shift", "decay")
