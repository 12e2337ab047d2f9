"""Observables of the light emitted by the array.

Field amplitudes are in units where mu0 k0^2 |d| = 1. The momentum-space
Green's prefactor of the far field is a smooth function of direction and is
dropped from spectra and angular profiles, which are reported normalised.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .errors import DomainError, InvalidInputError, TruncatedTransformError
from .greens import K0, green_tensor
from .lattice import Lattice

DEFAULT_OMEGA = np.round(np.arange(-15.0, 15.0 + 1e-9, 0.01), 10)
DECAY_THRESHOLD = 1e-4


@dataclass
class DetectionMode:
    waist: float
    polarization: np.ndarray | None = None  # None: matched to the atomic dipole
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.waist > 0:
            raise InvalidInputError("detection waist must be positive")


@dataclass
class PhotonRecord:
    times: np.ndarray
    n_of_t: np.ndarray
    dndt: np.ndarray
    eta: float

    @property
    def error(self) -> float:
        return 1.0 - self.eta


def field_at_point(lattice: Lattice, e: np.ndarray, r, k0: float = K0) -> np.ndarray:
    """E(r) = sum_j G(r_j - r) d e_j."""
    r = np.asarray(r, dtype=float)
    disp = lattice.positions - r
    if np.any(np.linalg.norm(disp, axis=1) < 1e-12):
        raise DomainError("field point coincides with an atom")
    G = green_tensor(disp, k0)
    return np.einsum("jab,b,j->a", G, lattice.dipole, np.asarray(e, dtype=complex))


def _check_decayed(traj: Trajectory) -> None:
    norms = traj.norms
    if norms[0] > 0 and norms[-1] > DECAY_THRESHOLD * norms[0]:
        raise TruncatedTransformError(
            f"final norm {norms[-1]:.3g} exceeds {DECAY_THRESHOLD:g} of the initial norm; evolve longer")


def laplace_transform(times: np.ndarray, series: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Trapezoidal int exp(i w t) s(t) dt over the sampled window.

    ``series`` may carry trailing dimensions; the result has shape (len(omega), ...).
    """
    times = np.asarray(times)
    w = np.empty_like(times)
    h = np.diff(times)
    w[0], w[-1] = h[0] / 2, h[-1] / 2
    w[1:-1] = (h[:-1] + h[1:]) / 2
    series = np.asarray(series).reshape(len(times), -1)
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.empty((len(omega), series.shape[1]), dtype=complex)
    block = max(1, 4_000_000 // len(times))
    for s in range(0, len(omega), block):
        kernel = np.exp(1j * np.outer(omega[s:s + block], times)) * w
        out[s:s + block] = kernel @ series
    return out


def in_plane_projection(lattice: Lattice, traj: Trajectory, kappas) -> np.ndarray:
    """S(t, kappa) = sum_j exp(-i kappa . r_j) e_j(t) for kappas (M, 2) in 1/lambda0."""
    kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
    phase = np.exp(-1j * lattice.positions[:, :2] @ kappas.T)
    return traj.states @ phase


def spectrum_at_direction(lattice: Lattice, traj: Trajectory, kappa_par=(0.0, 0.0),
                          omega_grid: np.ndarray | None = None, normalize: bool = True) -> np.ndarray:
    """Complex field vs (omega - omega0) in the direction with in-plane momentum kappa_par."""
    _check_decayed(traj)
    omega = DEFAULT_OMEGA if omega_grid is None else np.asarray(omega_grid, dtype=float)
    s = in_plane_projection(lattice, traj, kappa_par)
    E = laplace_transform(traj.times, s, omega)[:, 0]
    if normalize:
        peak = np.max(np.abs(E))
        if peak > 0:
            E = E / peak
    return E


def angular_profile(lattice: Lattice, traj: Trajectory, theta_grid, plane: str = "xz",
                    omega: float | None = None, omega_grid: np.ndarray | None = None,
                    normalize: bool = True) -> tuple[np.ndarray, float]:
    """|E| along kappa = k0 (sin theta, 0) (plane xz) or k0 (0, sin theta) (plane yz).

    Evaluated at ``omega`` or, if omitted, at the frequency where the emission
    summed over the theta grid peaks. Returns (profile, omega used).
    """
    _check_decayed(traj)
    theta = np.asarray(theta_grid, dtype=float)
    s = np.sin(theta) * K0
    if plane == "xz":
        kappas = np.column_stack([s, np.zeros_like(s)])
    elif plane == "yz":
        kappas = np.column_stack([np.zeros_like(s), s])
    else:
        raise InvalidInputError(f"plane must be 'xz' or 'yz', got {plane!r}")
    S = in_plane_projection(lattice, traj, kappas)
    if omega is None:
        grid = DEFAULT_OMEGA if omega_grid is None else np.asarray(omega_grid, dtype=float)
        E = laplace_transform(traj.times, S, grid)
        omega = float(grid[np.argmax(np.sum(np.abs(E) ** 2, axis=1))])
    prof = np.abs(laplace_transform(traj.times, S, np.array([omega]))[0])
    if normalize and prof.max() > 0:
        prof = prof / prof.max()
    return prof, omega


def mode_overlap(lattice: Lattice, traj: Trajectory, mode: DetectionMode, two_sided: bool = True) -> PhotonRecord:
    """Excitation collected by a Gaussian detection mode focused on the array.

    n(t) = f (3 / 4 pi^2 rho^2) int_0^t |sum_j (d . eps*) exp(-r_j^2/rho^2) e_j|^2,
    with f = 2 when the emission on both sides is recombined into one mode
    (the symmetric set-up) and f = 1 for a single side.
    """
    pol = lattice.dipole if mode.polarization is None else np.asarray(mode.polarization, dtype=complex)
    proj = np.vdot(pol, lattice.dipole)  # d . eps*
    weights = proj * lattice.gaussian(mode.waist, mode.center)
    overlap = traj.states @ weights
    factor = (2.0 if two_sided else 1.0) * 3.0 / (4 * np.pi**2 * mode.waist**2)
    dndt = factor * np.abs(overlap) ** 2
    h = np.diff(traj.times)
    n = np.concatenate([[0.0], np.cumsum(h * (dndt[1:] + dndt[:-1]) / 2)])
    return PhotonRecord(traj.times, n, dndt, float(n[-1]))


def radiated_fraction(lattice: Lattice, traj: Trajectory, n_theta: int = 64, n_phi: int = 64) -> float:
    """Energy radiated into the far field, integrated over all directions and time.

    Uses sum_ij Gamma_ij e_i e_j* = (3/8pi) int dOmega (|d|^2 - |khat . d|^2) |S(khat)|^2,
    with Gauss-Legendre quadrature in cos(theta) and uniform phi. Compare with
    the norm lost by the trajectory.
    """
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    phi = np.arange(n_phi) * 2 * np.pi / n_phi
    ct = np.repeat(x, n_phi)
    st = np.sqrt(1 - ct**2)
    ph = np.tile(phi, n_theta)
    weight = np.repeat(wx, n_phi) * 2 * np.pi / n_phi
    khat = np.column_stack([st * np.cos(ph), st * np.sin(ph), ct])
    angular = 1.0 - np.abs(khat @ lattice.dipole) ** 2
    S = in_plane_projection(lattice, traj, K0 * khat[:, :2])
    power = np.abs(S) ** 2 @ (weight * angular) * 3 / (8 * np.pi)
    return float(np.trapezoid(power, traj.times))


def intensity_fraction(lattice: Lattice, holes_xy, waist: float) -> float:
    """Share of Gaussian-mode intensity on the given positions (units of d), relative to the full grid."""
    full = lattice.full_indices - lattice.offset
    total = np.sum(np.exp(-2 * np.sum((full * lattice.spacing) ** 2, axis=1) / waist**2))
    holes = np.asarray(holes_xy, dtype=float).reshape(-1, 2) * lattice.spacing
    on = np.sum(np.exp(-2 * np.sum(holes**2, axis=1) / waist**2))
    return float(on / total)
