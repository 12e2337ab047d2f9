"""Coherent coupling between dark momentum states: Rabi flopping, dephasing and cycles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import argrelextrema
from scipy.special import erfinv

from ..dynamics import evolve_real_space, momentum_population, prepare_stored_state
from ..errors import InvalidInputError
from ..greens import K0, dispersion_many
from ..lattice import CIRCULAR, DetuningPattern, Lattice, preset_pattern
from .retrieval import make_coupling

QUALITY_INF = float("inf")
PHI_MIN = np.pi / 10


@dataclass(frozen=True)
class RabiPair:
    J1: float
    J2: float
    Delta: float

    @property
    def Omega_gen(self) -> float:
        return float(np.hypot(self.Delta, (self.J1 - self.J2) / 2))

    @property
    def period(self) -> float:
        """Period of the population oscillation, pi / Omega_gen."""
        return np.pi / self.Omega_gen if self.Omega_gen > 0 else QUALITY_INF


def rabi_pair_analytic(pair: RabiPair, t) -> np.ndarray:
    """v2(t) = i (Delta / Omega_gen) exp(-i (J1 + J2) t / 2) sin(Omega_gen t), starting in state 1."""
    t = np.asarray(t, dtype=float)
    W = pair.Omega_gen
    if W == 0:
        return np.zeros_like(t, dtype=complex)
    return 1j * pair.Delta / W * np.exp(-0.5j * (pair.J1 + pair.J2) * t) * np.sin(W * t)


def _outside_light_cone(k, spacing) -> bool:
    k = np.asarray(k, dtype=float)
    b = 2 * np.pi / spacing
    folded = (k + b / 2) % b - b / 2
    return bool(np.linalg.norm(folded) > K0)


def generalized_rabi(k, Delta: float, coupling_Q, spacing: float, dispersion=None) -> np.ndarray:
    """Omega_gen between k and k + Q for a two-site pattern, k of shape (..., 2) in 1/lambda0."""
    k = np.asarray(k, dtype=float)
    if dispersion is None:
        def dispersion(kk):
            return dispersion_many(kk, spacing, CIRCULAR).real
    J1 = dispersion(k)
    J2 = dispersion(k + np.asarray(coupling_Q, dtype=float))
    return np.hypot(Delta, (J1 - J2) / 2)


def quality_factor(k, k_c, Delta: float, Phi_min: float = PHI_MIN, spacing: float = 0.3,
                   coupling_Q=None, dispersion=None) -> float:
    """Rabi periods before the pair at k dephases by Phi_min from the pair at k_c.

    Q = Omega_gen(k_c) (Phi_min / pi) / |Omega_gen(k_c) - Omega_gen(k)|, or
    +inf when the denominator is below 1e-12. ``coupling_Q`` defaults to
    (0, pi/d), the stripe pattern Delta (-1)^(n_y).
    """
    if not 0 < Phi_min <= np.pi:
        raise InvalidInputError("Phi_min must lie in (0, pi]")
    k, k_c = np.asarray(k, dtype=float), np.asarray(k_c, dtype=float)
    if not (_outside_light_cone(k, spacing) and _outside_light_cone(k_c, spacing)):
        raise InvalidInputError("both momenta must lie outside the light cone")
    Q = np.array([0.0, np.pi / spacing]) if coupling_Q is None else np.asarray(coupling_Q, dtype=float)
    Wc = float(generalized_rabi(k_c, Delta, Q, spacing, dispersion))
    W = float(generalized_rabi(k, Delta, Q, spacing, dispersion))
    denom = abs(Wc - W)
    if denom < 1e-12:
        return QUALITY_INF
    return Wc * (Phi_min / np.pi) / denom


def containment_radius(waist: float, fraction: float = 0.998, dims: int = 1) -> float:
    """Momentum radius holding ``fraction`` of a Gaussian state exp(-r^2 / waist^2).

    The momentum density is exp(-q^2 waist^2 / 2); ``dims=1`` uses the
    one-dimensional marginal (two-sided), ``dims=2`` the radial distribution.
    """
    if dims == 1:
        return float(np.sqrt(2) * erfinv(fraction) / waist)
    if dims == 2:
        return float(np.sqrt(-2 * np.log(1 - fraction)) / waist)
    raise InvalidInputError("dims must be 1 or 2")


def quality_for_waist(waist: float, spacing: float, Delta: float, Phi_min: float = PHI_MIN,
                      direction=(0.0, 1.0), fraction: float = 0.998) -> float:
    """Q at the edge of the momentum range holding ``fraction`` of a stored X-point state.

    The offset is taken along ``direction`` (default: the coupling axis y)
    with the one-dimensional containment convention.
    """
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    k_c = np.array([np.pi / spacing, 0.0])
    K = containment_radius(waist, fraction, dims=1)
    return quality_factor(k_c + K * u, k_c, Delta, Phi_min, spacing)


@dataclass
class PopulationRun:
    times: np.ndarray
    populations: np.ndarray  # (T, n_states)
    labels: list  # momentum centres, units of 1/d
    norms: np.ndarray


def track_populations(lattice: Lattice, pattern, state0, t_end: float, centers, radius: float,
                      dt: float = 0.01, stride: int = 5, coupling=None) -> PopulationRun:
    """Evolve and record the population near each momentum centre (units of 1/d)."""
    stepper = coupling if coupling is not None else make_coupling(lattice)
    traj = evolve_real_space(lattice, stepper, pattern, state0, t_end, dt, stride=stride)
    pops = np.array([[momentum_population(lattice, e, c, radius) for c in centers] for e in traj.states])
    return PopulationRun(traj.times, pops, [tuple(c) for c in centers], traj.norms)


def count_periods(times: np.ndarray, signal: np.ndarray, contrast: float = 0.5) -> int:
    """Number of oscillation periods whose peak-to-trough swing is at least ``contrast`` of the first swing."""
    maxima = argrelextrema(signal, np.greater_equal, order=1)[0]
    minima = argrelextrema(signal, np.less_equal, order=1)[0]
    maxima = maxima[(maxima > 0) & (maxima < len(signal) - 1)]
    if len(maxima) == 0:
        return 0
    swings = []
    for m in maxima:
        before = minima[minima < m]
        lo = signal[before[-1]] if len(before) else signal[0]
        swings.append(signal[m] - lo)
    swings = np.array(swings)
    # discard flat plateaus reported twice by >= comparisons
    keep = np.concatenate([[True], np.diff(maxima) > 1])
    swings = swings[keep]
    ref = swings[0]
    if ref <= 0:
        return 0
    n = 0
    for s in swings:
        if s < contrast * ref:
            break
        n += 1
    return n


def rabi_experiment(lattice: Lattice, Delta: float, waist: float, t_end: float, Delta_store: float = 2.0,
                    radius: float | None = None, dt: float = 0.01, stride: int = 5, coupling=None) -> PopulationRun:
    """Store at X with a stripe along x, then couple X and M with Delta (-1)^(n_y)."""
    stepper = coupling if coupling is not None else make_coupling(lattice)
    stored = prepare_stored_state(lattice, stepper, waist, Delta_store, pattern=preset_pattern("stripe_x", Delta_store))
    radius = np.pi / 2 if radius is None else radius
    centers = [(np.pi, 0.0), (np.pi, np.pi)]
    return track_populations(lattice, preset_pattern("stripe_y", Delta), stored.e, t_end, centers, radius,
                             dt, stride, stepper)


def cycle_pattern(n_states: int, amplitude: float = 5.0, direction: int = 1) -> DetuningPattern:
    """Patterns along y that cycle an X-point excitation through n_states = 3 or 4 dark states.

    Three states: harmonics +-2 pi/3 with amplitudes -+i a. Four states:
    harmonics +-pi/2 with sqrt(2) a exp(+-i pi/4) plus pi with a. With
    ``direction=1`` the excitation visits (pi, 0) -> (pi, 2 pi/n) -> (pi, 4 pi/n)
    -> ...; ``direction=-1`` (complex-conjugate amplitudes) reverses the cycle.
    """
    if direction not in (1, -1):
        raise InvalidInputError("direction must be +1 or -1")
    if n_states == 3:
        return preset_pattern("period3_y", 0.0, -1j * direction * amplitude)
    if n_states == 4:
        beta = np.sqrt(2) * amplitude * np.exp(1j * direction * np.pi / 4)
        return preset_pattern("period4_y", 0.0, beta, amplitude)
    raise InvalidInputError("cycles are defined for 3 or 4 states")


def cycle_experiment(lattice: Lattice, n_states: int, waist: float, t_end: float, amplitude: float = 5.0,
                     Delta_store: float = 2.0, radius: float = 0.3, dt: float = 0.005, stride: int = 4,
                     pattern: DetuningPattern | None = None, direction: int = 1, coupling=None) -> PopulationRun:
    """Cyclic transfer (pi, 0) -> (pi, 2 pi/n) -> ... between X-line dark states."""
    stepper = coupling if coupling is not None else make_coupling(lattice)
    stored = prepare_stored_state(lattice, stepper, waist, Delta_store, pattern=preset_pattern("stripe_x", Delta_store))
    pattern = cycle_pattern(n_states, amplitude, direction) if pattern is None else pattern
    centers = [(np.pi, float(np.angle(np.exp(2j * np.pi * m / n_states)))) for m in range(n_states)]
    return track_populations(lattice, pattern, stored.e, t_end, centers, radius, dt, stride, stepper)


def dominant_sequence(run: PopulationRun, threshold: float = 0.5) -> list:
    """Indices of the states that successively hold more than ``threshold`` of the excitation."""
    seq = []
    for p in run.populations:
        s = int(np.argmax(p))
        if p[s] > threshold and (not seq or seq[-1] != s):
            seq.append(s)
    return seq


def is_cyclic(seq: list, n_states: int) -> bool:
    """True if consecutive entries always advance by one state (mod n)."""
    return len(seq) > n_states and all((b - a) % n_states == 1 for a, b in zip(seq[:-1], seq[1:]))
