"""Frequency profiles of the released photon: two-color splitting and modulation sidebands.

Frequencies are omega - omega0 in gamma0. With a constant checkerboard of
strength Delta the dark/radiating pair has eigenfrequencies

    lambda_pm = (J_d + J_r - i Gamma_r / 2) / 2 +- sqrt(Delta^2 + G^2),
    G = (J_d - J_r + i Gamma_r / 2) / 2,

and the field along the radiating momentum is the transform of v_r(t),
E(omega) = -i Delta / (2 s) [1 / (omega - lambda_+) - 1 / (omega - lambda_-)].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks
from scipy.special import jv

from ..dynamics import evolve_real_space, prepare_stored_state
from ..emission import DEFAULT_OMEGA, in_plane_projection, laplace_transform, spectrum_at_direction
from ..errors import InvalidInputError
from ..greens import coupling_matrix
from ..lattice import Lattice, preset_pattern
from .retrieval import STOP_NORM, make_coupling


def pair_eigenvalues(Delta: float, J_d: float, J_r: float, Gamma_r: float) -> tuple[complex, complex]:
    G = (J_d - J_r + 0.5j * Gamma_r) / 2
    s = np.sqrt(Delta**2 + G**2 + 0j)
    if s.real < 0:
        s = -s
    centre = (J_d + J_r - 0.5j * Gamma_r) / 2
    return complex(centre + s), complex(centre - s)


@dataclass
class TwoColorSpectrum:
    omega: np.ndarray
    field: np.ndarray
    poles: tuple  # (lambda_+, lambda_-)
    weights: np.ndarray  # relative emitted energy in each line, sums to 1

    @property
    def centers(self) -> np.ndarray:
        return np.array([p.real for p in self.poles])

    @property
    def widths(self) -> np.ndarray:
        """Full widths at half maximum of the two lines (= decay rates)."""
        return np.array([-2 * p.imag for p in self.poles])

    @property
    def separation(self) -> float:
        return float(self.centers[0] - self.centers[1])

    @property
    def predominant(self) -> int:
        """Index of the line carrying most of the energy (0: upper, 1: lower)."""
        return int(np.argmax(self.weights))


def two_color_spectrum(Delta: float, J_d: float, J_r: float, Gamma_r: float,
                       omega_grid=None) -> TwoColorSpectrum:
    if not Gamma_r > 0:
        raise InvalidInputError("Gamma_r must be positive")
    omega = DEFAULT_OMEGA if omega_grid is None else np.asarray(omega_grid, dtype=float)
    lp, lm = pair_eigenvalues(Delta, J_d, J_r, Gamma_r)
    s = (lp - lm) / 2
    pref = -1j * Delta / (2 * s)
    field = pref * (1 / (omega - lp) - 1 / (omega - lm))
    if Delta == 0:
        # limit Delta -> 0: all energy leaves through the narrow (dark) line
        weights = np.array([0.0, 1.0]) if abs(lm.imag) < abs(lp.imag) else np.array([1.0, 0.0])
    else:
        # energy of each Lorentzian on its own, int |1/(w - l)|^2 dw = pi / |Im l|
        raw = np.array([np.pi / abs(lp.imag), np.pi / abs(lm.imag)]) * abs(pref) ** 2
        weights = raw / raw.sum()
    return TwoColorSpectrum(omega, field, (lp, lm), weights)


def fit_two_pole(omega: np.ndarray, field: np.ndarray, floor: float = 0.05) -> tuple[complex, complex]:
    """Poles of E(w) ~ c / ((w - l1)(w - l2)) by linear least squares.

    Uses E w^2 = p E w - q E + c with p = l1 + l2, q = l1 l2, restricted to
    points where |E| exceeds ``floor`` of its maximum. Returned with the
    larger real part first.
    """
    omega = np.asarray(omega, dtype=float)
    field = np.asarray(field, dtype=complex)
    sel = np.abs(field) >= floor * np.abs(field).max()
    w, E = omega[sel], field[sel]
    A = np.column_stack([E * w, -E, np.ones_like(E)])
    (p, q, _), *_ = np.linalg.lstsq(A, E * w**2, rcond=None)
    roots = np.roots([1.0, -p, q])
    roots = sorted(roots, key=lambda z: -z.real)
    return complex(roots[0]), complex(roots[1])


def peak_side(omega: np.ndarray, field: np.ndarray, midpoint: float) -> int:
    """+1 if the spectral maximum lies above ``midpoint``, -1 otherwise."""
    return 1 if omega[np.argmax(np.abs(field))] > midpoint else -1


@dataclass
class SidebandSpectrum:
    omega: np.ndarray
    field: np.ndarray
    orders: np.ndarray
    weights: np.ndarray  # J_n(delta / Omega)^2
    base: TwoColorSpectrum
    Omega_mod: float

    def sideband_center(self, n: int, line: int | None = None) -> float:
        """Centre of order n, n Omega below the unmodulated line (default: predominant)."""
        line = self.base.predominant if line is None else line
        return float(self.base.centers[line] - n * self.Omega_mod)


def bessel_orders(ratio: float, coverage: float = 0.999) -> np.ndarray:
    """Smallest symmetric order range with sum J_n(ratio)^2 >= coverage."""
    nmax = 0
    while np.sum(jv(np.arange(-nmax, nmax + 1), ratio) ** 2) < coverage:
        nmax += 1
    return np.arange(-nmax, nmax + 1)


def sideband_spectrum(Delta: float, delta_mod: float, Omega_mod: float, J_d: float, J_r: float,
                      Gamma_r: float, omega_grid=None, coverage: float = 0.999) -> SidebandSpectrum:
    """Two-color profile replicated every Omega with Bessel amplitudes.

    A homogeneous modulation delta cos(Omega t) multiplies the amplitudes by
    exp(i (delta / Omega) sin(Omega t)) = sum_n J_n exp(i n Omega t), so
    order n appears n Omega below the unmodulated lines.
    """
    if not Omega_mod > 0:
        raise InvalidInputError("modulation frequency must be positive")
    base = two_color_spectrum(Delta, J_d, J_r, Gamma_r, omega_grid)
    ratio = delta_mod / Omega_mod
    orders = bessel_orders(ratio, coverage)
    amps = jv(orders, ratio)
    lp, lm = base.poles
    pref = -1j * Delta / (lp - lm)
    w = base.omega
    field = np.zeros_like(w, dtype=complex)
    for n, a in zip(orders, amps):
        field += a * pref * (1 / (w + n * Omega_mod - lp) - 1 / (w + n * Omega_mod - lm))
    return SidebandSpectrum(w, field, orders, amps**2, base, Omega_mod)


def sideband_weights_from_spectrum(omega: np.ndarray, field: np.ndarray, center: float, Omega_mod: float,
                                   orders) -> np.ndarray:
    """Emitted energy within +-Omega/2 of each sideband centre."""
    power = np.abs(field) ** 2
    out = []
    for n in orders:
        c = center - n * Omega_mod
        sel = np.abs(omega - c) <= Omega_mod / 2
        out.append(np.trapezoid(power[sel], omega[sel]) if sel.sum() > 1 else 0.0)
    return np.array(out)


def _release(lattice, Delta, waist, modulation, dt, Delta_store, coupling, max_time=None):
    dense = coupling_matrix(lattice)
    stepper = coupling if coupling is not None else make_coupling(lattice)
    stored = prepare_stored_state(lattice, dense, waist, Delta_store)
    patterns = [preset_pattern("checkerboard", Delta)]
    rate = abs(Delta)
    if modulation is not None:
        delta_mod, Omega_mod = modulation
        patterns.append(preset_pattern("uniform", delta_mod).with_envelope(lambda t, W=Omega_mod: np.cos(W * t)))
        rate += abs(delta_mod)
    if dt is None:
        dt = min(0.01, 0.1 / max(rate, 1e-12))
    return evolve_real_space(lattice, stepper, patterns, stored.e, t_end=dt, dt=dt,
                             stop_norm=STOP_NORM * 1e-2, rate_bound=rate, max_time=max_time)


@dataclass
class SpectrumRun:
    omega: np.ndarray
    field: np.ndarray
    poles: tuple
    side: int
    analytic: TwoColorSpectrum


def spectrum_experiment(lattice: Lattice, Delta: float, waist: float, J_d: float, J_r: float, Gamma_r: float,
                        omega_grid=None, dt: float | None = None, Delta_store: float = 2.0,
                        coupling=None, max_time: float | None = None) -> SpectrumRun:
    """Release a stored photon with a constant checkerboard and record the normal-direction spectrum.

    The two lines are located by a two-pole fit of the complex spectrum. The
    infinite-lattice (J_d, J_r, Gamma_r) only enter the analytic comparison.
    Small Delta releases slowly; raise ``max_time`` (default 500) accordingly.
    """
    traj = _release(lattice, Delta, waist, None, dt, Delta_store, coupling, max_time)
    omega = DEFAULT_OMEGA if omega_grid is None else np.asarray(omega_grid, dtype=float)
    E = spectrum_at_direction(lattice, traj, (0.0, 0.0), omega, normalize=True)
    analytic = two_color_spectrum(Delta, J_d, J_r, Gamma_r, omega)
    poles = fit_two_pole(omega, E)
    mid = float(np.mean([p.real for p in poles]))
    return SpectrumRun(omega, E, poles, peak_side(omega, E, mid), analytic)


@dataclass
class SidebandRun:
    omega: np.ndarray
    field: np.ndarray  # modulated spectrum, normalised to its maximum
    orders: np.ndarray
    amplitudes: np.ndarray  # fitted complex a_n
    expected: np.ndarray  # J_n(delta / Omega)
    peaks: np.ndarray  # local maxima of |E| (omega values)
    Omega_mod: float

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def ratios(self) -> np.ndarray:
        """Weights relative to order 0."""
        return self.weights / self.weights[self.orders == 0][0]


def sideband_experiment(lattice: Lattice, Delta: float, waist: float, delta_mod: float, Omega_mod: float,
                        omega_grid=None, dt: float | None = None, Delta_store: float = 2.0,
                        coupling=None, coverage: float = 0.999) -> SidebandRun:
    """Release under checkerboard plus homogeneous modulation and decompose the spectrum.

    A homogeneous detuning commutes with the lattice dynamics, so the
    modulated field is sum_n a_n E0(omega + n Omega) exactly, with E0 the
    unmodulated spectrum of the same lattice; a_n follow from linear least
    squares and should equal J_n(delta / Omega).
    """
    if not Omega_mod > 0:
        raise InvalidInputError("modulation frequency must be positive")
    omega = DEFAULT_OMEGA if omega_grid is None else np.asarray(omega_grid, dtype=float)
    ratio = delta_mod / Omega_mod
    orders = bessel_orders(ratio, coverage)
    mod = _release(lattice, Delta, waist, (delta_mod, Omega_mod), dt, Delta_store, coupling)
    base = _release(lattice, Delta, waist, None, mod.dt, Delta_store, coupling)
    E = spectrum_at_direction(lattice, mod, (0.0, 0.0), omega, normalize=False)
    s0 = in_plane_projection(lattice, base, (0.0, 0.0))
    basis = np.column_stack([laplace_transform(base.times, s0, omega + n * Omega_mod)[:, 0] for n in orders])
    amps, *_ = np.linalg.lstsq(basis, E, rcond=None)
    # fix the global phase so that the order-0 amplitude is real and positive
    amps = amps * np.exp(-1j * np.angle(amps[orders == 0][0]))
    mag = np.abs(E) / np.abs(E).max()
    idx, _ = find_peaks(mag, height=1e-2, prominence=1e-2)
    return SidebandRun(omega, E / np.abs(E).max(), orders, amps, jv(orders, ratio), omega[idx], Omega_mod)
