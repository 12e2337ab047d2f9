"""Free-space dyadic Green's tensor, dipole-dipole couplings and lattice sums.

Units: lambda0 = 1 (so k0 = 2 pi), gamma0 = 1, and omega0 = c k0 with c = 1.
The complex coupling between two atoms is

    J - i Gamma / 2 = -(3 pi / k0) d* . G(r) . d,

which tends to -i/2 (Gamma -> gamma0) as r -> 0.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import DomainError, InvalidInputError
from .lattice import Lattice

K0 = 2 * np.pi
DEFAULT_RADIUS = 150  # in units of the spacing


def green_tensor(r, k0: float = K0) -> np.ndarray:
    """G_ab(r) for r of shape (..., 3); returns (..., 3, 3).

    The r = 0 delta term is not represented; callers handle the self term.
    """
    r = np.asarray(r, dtype=float)
    dist = np.linalg.norm(r, axis=-1)
    if np.any(dist == 0):
        raise DomainError("Green's tensor is singular at r = 0")
    kr = np.asarray(k0 * dist)
    pref = np.asarray(np.exp(1j * kr) / (4 * np.pi * dist))
    a = np.asarray(1 + 1j / kr - 1 / kr**2)
    b = np.asarray(-1 - 3j / kr + 3 / kr**2)
    rhat = r / dist[..., None]
    outer = rhat[..., :, None] * rhat[..., None, :]
    return pref[..., None, None] * (a[..., None, None] * np.eye(3) + b[..., None, None] * outer)


def _coupling_from_displacement(r: np.ndarray, dipole: np.ndarray, k0: float = K0) -> np.ndarray:
    """-(3 pi/k0) d* . G(r) . d for displacements r (..., 3), without forming G."""
    dist = np.linalg.norm(r, axis=-1)
    kr = k0 * dist
    pref = np.exp(1j * kr) / (4 * np.pi * dist)
    a = 1 + 1j / kr - 1 / kr**2
    b = -1 - 3j / kr + 3 / kr**2
    rhat = r / dist[..., None]
    proj_conj = rhat @ np.conj(dipole)
    proj = rhat @ dipole
    dgd = pref * (a * np.vdot(dipole, dipole).real + b * proj_conj * proj)
    return -(3 * np.pi / k0) * dgd


def pair_coupling(ri, rj, dipole, k0: float = K0) -> tuple[float, float]:
    """Cooperative shift and decay (J, Gamma) in gamma0 between two atoms."""
    r = np.asarray(ri, dtype=float) - np.asarray(rj, dtype=float)
    if np.linalg.norm(r) == 0:
        raise DomainError("coincident atoms have no pair coupling")
    c = _coupling_from_displacement(r, np.asarray(dipole, dtype=complex), k0)
    return float(c.real), float(-2 * c.imag)


def _displacement_table(lattice: Lattice, k0: float = K0) -> np.ndarray:
    """Couplings on every grid displacement, shape (2nx-1, 2ny-1), self term -i/2."""
    mx = np.arange(-(lattice.nx - 1), lattice.nx)
    my = np.arange(-(lattice.ny - 1), lattice.ny)
    gx, gy = np.meshgrid(mx, my, indexing="ij")
    r = np.stack([gx * lattice.spacing, gy * lattice.spacing, np.zeros(gx.shape)], axis=-1)
    centre = (lattice.nx - 1, lattice.ny - 1)
    r[centre] = (1.0, 0.0, 0.0)  # placeholder, overwritten below
    table = _coupling_from_displacement(r, lattice.dipole, k0)
    table[centre] = -0.5j
    return table


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Dense N x N matrix J - i Gamma/2 in gamma0 (diagonal -i/2)."""

    matrix: np.ndarray

    @property
    def J(self) -> np.ndarray:
        return self.matrix.real

    @property
    def Gamma(self) -> np.ndarray:
        return -2 * self.matrix.imag

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other):
        return self.matrix @ other

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))


def coupling_matrix(lattice: Lattice, k0: float = K0) -> CouplingMatrix:
    if lattice.n_atoms < 1:
        raise InvalidInputError("lattice has no atoms")
    table = _displacement_table(lattice, k0)
    idx = lattice.indices
    dx = idx[:, 0][:, None] - idx[:, 0][None, :] + lattice.nx - 1
    dy = idx[:, 1][:, None] - idx[:, 1][None, :] + lattice.ny - 1
    mat = table[dx, dy]
    mat.setflags(write=False)
    return CouplingMatrix(mat)


class ConvolutionCoupling:
    """Matrix-free J - i Gamma/2 using the translation invariance of the grid.

    Products are exact (no approximation beyond floating point): the coupling
    table is embedded in a circulant of size >= 2n - 1 and applied by FFT,
    then restricted to the atoms actually present.
    """

    def __init__(self, lattice: Lattice, k0: float = K0):
        self.lattice = lattice
        table = _displacement_table(lattice, k0)
        nx, ny = lattice.nx, lattice.ny
        px = sfft.next_fast_len(2 * nx - 1)
        py = sfft.next_fast_len(2 * ny - 1)
        circ = np.zeros((px, py), dtype=complex)
        mx = np.arange(-(nx - 1), nx) % px
        my = np.arange(-(ny - 1), ny) % py
        circ[np.ix_(mx, my)] = table
        self._kernel = sfft.fft2(circ)
        self._shape = (px, py)
        self._flat = lattice.flat_index
        self._gx, self._gy = np.divmod(self._flat, ny)
        self.n = lattice.n_atoms

    def __matmul__(self, e: np.ndarray) -> np.ndarray:
        e = np.asarray(e)
        grid = np.zeros(self._shape + e.shape[1:], dtype=complex)
        grid[self._gx, self._gy] = e
        out = sfft.ifft2(self._kernel.reshape(self._shape + (1,) * (e.ndim - 1)) * sfft.fft2(grid, axes=(0, 1)),
                         axes=(0, 1))
        return out[self._gx, self._gy]

    def dense(self) -> CouplingMatrix:
        return coupling_matrix(self.lattice)


# --------------------------------------------------------------------------
# infinite-lattice dispersion


def smooth_window(r: np.ndarray, radius: float, start: float = 0.5) -> np.ndarray:
    """C-infinity taper: 1 for r <= start*radius, 0 for r >= radius."""
    x = np.clip((np.asarray(r) / radius - start) / (1 - start), 0.0, 1.0)

    def bump(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    f0, f1 = bump(x), bump(1 - x)
    return 1.0 - f0 / (f0 + f1)


@dataclass(frozen=True)
class Dispersion:
    k: tuple
    J: float
    Gamma: float

    @property
    def complex_shift(self) -> complex:
        return complex(self.J, -self.Gamma / 2)


@lru_cache(maxsize=32)
def _neighbour_sum_data(spacing: float, radius_sites: float, dipole: tuple, window: str, k0: float):
    n = int(np.ceil(radius_sites))
    m = np.arange(-n, n + 1)
    gx, gy = np.meshgrid(m, m, indexing="ij")
    keep = (gx**2 + gy**2 <= radius_sites**2) & ~((gx == 0) & (gy == 0))
    xy = np.column_stack([gx[keep], gy[keep]]) * spacing
    r = np.column_stack([xy, np.zeros(len(xy))])
    c = _coupling_from_displacement(r, np.array(dipole, dtype=complex), k0)
    if window == "smooth":
        c = c * smooth_window(np.hypot(xy[:, 0], xy[:, 1]), radius_sites * spacing)
    elif window != "none":
        raise InvalidInputError(f"unknown window {window!r}")
    xy.setflags(write=False)
    c.setflags(write=False)
    return xy, c


def lattice_sum(ks, spacing: float, dipole, truncation_radius: float | None = None,
                window: str = "smooth", k0: float = K0, offset=(0.0, 0.0),
                parity: int | None = None) -> np.ndarray:
    """Sum_j exp(-i k . r_j) c(r_j) over the infinite square lattice (j != 0).

    ``ks`` has shape (..., 2) in units of 1/lambda0. ``parity`` restricts the
    sum to sites with (n_x + n_y) % 2 == parity (checkerboard sublattices).
    ``truncation_radius`` is in units of lambda0 (default 150 d).
    """
    radius = DEFAULT_RADIUS * spacing if truncation_radius is None else truncation_radius
    xy, c = _neighbour_sum_data(float(spacing), round(radius / spacing, 9),
                                tuple(complex(v) for v in np.asarray(dipole)), window, float(k0))
    if parity is not None:
        n = np.rint(xy / spacing).astype(int)
        sel = (n.sum(axis=1) % 2) == parity
        xy, c = xy[sel], c[sel]
    ks = np.asarray(ks, dtype=float)
    flat = ks.reshape(-1, 2)
    out = np.empty(len(flat), dtype=complex)
    chunk = max(1, 2_000_000 // max(len(c), 1))
    for s in range(0, len(flat), chunk):
        phase = np.exp(-1j * (flat[s:s + chunk] @ xy.T))
        out[s:s + chunk] = phase @ c
    return out.reshape(ks.shape[:-1])


_CACHE_LOCK = threading.Lock()
_DISPERSION_CACHE: dict = {}


def in_first_zone(k, spacing: float, tol: float = 1e-9) -> bool:
    k = np.asarray(k, dtype=float)
    return bool(np.all(np.abs(k) <= np.pi / spacing * (1 + tol)))


def dispersion(k, spacing: float, dipole, truncation_radius: float | None = None,
               window: str = "smooth", k0: float = K0) -> Dispersion:
    """Collective shift J_k and decay Gamma_k of the infinite square lattice.

    k in units of 1/lambda0, inside the first Brillouin zone.
    """
    k = np.asarray(k, dtype=float)
    if not in_first_zone(k, spacing):
        raise InvalidInputError(f"k = {tuple(k)} lies outside the first Brillouin zone")
    radius = DEFAULT_RADIUS * spacing if truncation_radius is None else truncation_radius
    if radius < 20 * spacing * (1 - 1e-12):
        raise InvalidInputError("truncation radius must be at least 20 lattice spacings")
    dip = tuple(np.round(np.asarray(dipole, dtype=complex), 15))
    key = (round(k[0], 12), round(k[1], 12), float(spacing), round(radius, 12), dip, window, float(k0))
    with _CACHE_LOCK:
        hit = _DISPERSION_CACHE.get(key)
    if hit is not None:
        return hit
    s = -0.5j + lattice_sum(k, spacing, dipole, radius, window, k0)
    result = Dispersion((float(k[0]), float(k[1])), float(s.real), float(-2 * s.imag))
    with _CACHE_LOCK:
        result = _DISPERSION_CACHE.setdefault(key, result)
    return result


def dispersion_many(ks, spacing: float, dipole, truncation_radius: float | None = None,
                    window: str = "smooth", k0: float = K0, decay: str = "sum") -> np.ndarray:
    """Vectorised complex J_k - i Gamma_k / 2 for many k (no BZ check, no cache).

    With ``decay="exact"`` the imaginary part is replaced by the closed-form
    infinite-lattice decay, which removes the truncation residue near the
    light cone.
    """
    s = -0.5j + lattice_sum(ks, spacing, dipole, truncation_radius, window, k0)
    if decay == "exact":
        s = s.real - 0.5j * radiative_decay_exact_many(ks, spacing, dipole, k0)
    elif decay != "sum":
        raise InvalidInputError(f"decay must be 'sum' or 'exact', got {decay!r}")
    return s


def radiative_decay_exact_many(ks, spacing: float, dipole, k0: float = K0) -> np.ndarray:
    """Vectorised :func:`radiative_decay_exact` over k of shape (..., 2)."""
    ks = np.asarray(ks, dtype=float)
    flat = ks.reshape(-1, 2)
    dipole = np.asarray(dipole, dtype=complex)
    b = 2 * np.pi / spacing
    nmax = int(np.ceil(k0 / b)) + 2
    g = np.arange(-nmax, nmax + 1) * b
    gx, gy = np.meshgrid(g, g, indexing="ij")
    q = flat[:, None, :] + np.stack([gx.ravel(), gy.ravel()], axis=1)[None]
    q2 = np.sum(q**2, axis=-1)
    inside = q2 < k0**2
    kz = np.sqrt(np.where(inside, k0**2 - q2, 1.0))
    inplane = q[..., 0] * dipole[0] + q[..., 1] * dipole[1]
    proj = 0.0
    for sz in (1, -1):
        proj = proj + np.abs(inplane + sz * kz * dipole[2]) ** 2 / (2 * k0**2)
    term = np.where(inside, (np.vdot(dipole, dipole).real - proj) / (2 * kz), 0.0)
    return (6 * np.pi / k0 * term.sum(axis=1) / spacing**2).reshape(ks.shape[:-1])


def radiative_decay_exact(k, spacing: float, dipole, k0: float = K0) -> float:
    """Gamma_k of the infinite lattice from the reciprocal-lattice (Poisson) sum.

    Only diffraction orders inside the light cone radiate, each contributing
    (1 - <|d . khat|^2>) / (2 k_z). Independent of any real-space truncation.
    """
    k = np.asarray(k, dtype=float)
    dipole = np.asarray(dipole, dtype=complex)
    b = 2 * np.pi / spacing
    nmax = int(np.ceil(k0 / b)) + 2
    total = 0.0
    for gx in range(-nmax, nmax + 1):
        for gy in range(-nmax, nmax + 1):
            q = k + b * np.array([gx, gy])
            q2 = q @ q
            if q2 >= k0**2:
                continue
            kz = np.sqrt(k0**2 - q2)
            proj = 0.0
            for sz in (1, -1):
                khat = np.array([q[0], q[1], sz * kz]) / k0
                proj += abs(khat @ dipole) ** 2 / 2
            total += (np.vdot(dipole, dipole).real - proj) / (2 * kz)
    return float(6 * np.pi / k0 * total / spacing**2)
