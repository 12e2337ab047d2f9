"""Inverse design of detuning sequences that emit photons of a chosen temporal shape.

The dark/radiating pair is stepped with forward Euler; at each step the
detuning is the root of the quadratic that makes Gamma_r |v_r|^2 hit the
target emission rate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import windows as sigwin

from ..dynamics import evolve_real_space, prepare_stored_state
from ..emission import DetectionMode, mode_overlap
from ..errors import InfeasibleTargetError, InvalidInputError
from ..greens import coupling_matrix, dispersion
from ..lattice import CIRCULAR, preset_pattern
from .retrieval import STOP_NORM, make_coupling

WINDOW_KINDS = ("blackman", "tukey", "triangular", "sine", "rectangular")


@dataclass(frozen=True)
class WindowShape:
    kind: str
    t_end: float
    total: float = 1.0
    taper: float = 0.5  # tukey only

    def __post_init__(self):
        if self.kind not in WINDOW_KINDS:
            raise InvalidInputError(f"unknown window {self.kind!r}; choose from {WINDOW_KINDS}")
        if not self.t_end > 0:
            raise InvalidInputError("window duration must be positive")
        if not self.total > 0:
            raise InvalidInputError("released excitation must be positive")

    def _raw(self, t):
        x = np.clip(np.asarray(t, dtype=float) / self.t_end, 0.0, 1.0)
        if self.kind == "blackman":
            # clip the round-off below zero at the endpoints
            y = np.maximum(0.42 - 0.5 * np.cos(2 * np.pi * x) + 0.08 * np.cos(4 * np.pi * x), 0.0)
        elif self.kind == "sine":
            y = np.sin(np.pi * x)
        elif self.kind == "triangular":
            y = 1 - np.abs(2 * x - 1)
        elif self.kind == "rectangular":
            y = np.ones_like(x)
        else:
            a = self.taper
            if a <= 0:
                y = np.ones_like(x)
            else:
                y = np.ones_like(x)
                lo = x < a / 2
                hi = x > 1 - a / 2
                y[lo] = 0.5 * (1 - np.cos(2 * np.pi * x[lo] / a))
                y[hi] = 0.5 * (1 - np.cos(2 * np.pi * (1 - x[hi]) / a))
        inside = (np.asarray(t) >= 0) & (np.asarray(t) <= self.t_end)
        return np.where(inside, y, 0.0)

    @property
    def _norm(self) -> float:
        # closed-form integrals of the unit-height windows over [0, 1]
        area = {"blackman": 0.42, "sine": 2 / np.pi, "triangular": 0.5,
                "rectangular": 1.0, "tukey": 1 - self.taper / 2}[self.kind]
        return self.total / (area * self.t_end)

    def rate(self, t) -> np.ndarray:
        """Target emission rate dn/dt at times t (zero outside [0, t_end])."""
        return self._norm * self._raw(t)

    def samples(self, n: int = 1001) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(0, self.t_end, n)
        return t, self.rate(t)


def window_shape(kind: str, t_end: float, total: float = 1.0, **params) -> WindowShape:
    return WindowShape(kind, t_end, total, **params)


@dataclass
class DetuningSequence:
    times: np.ndarray
    values: np.ndarray
    plateau_level: float
    plateau_start: float | None = None
    cap: float = 20.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("detuning sequence contains non-finite values")
        if np.max(np.abs(self.values), initial=0.0) > self.cap * (1 + 1e-12):
            raise InvalidInputError("detuning sequence exceeds its cap")

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def tail_level(self) -> float:
        """Detuning held after the designed window to release what is left."""
        last = self.values[-1] if len(self.values) else self.plateau_level
        return float(np.copysign(self.plateau_level, last if last != 0 else 1.0))

    def __call__(self, t: float) -> float:
        if t >= self.times[-1]:
            return self.tail_level
        return float(np.interp(t, self.times, self.values))

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.values)))


def solve_detuning_sequence(target: WindowShape, Gamma_r: float, J: float, dt: float = 1e-3,
                            plateau: float = 0.5, cap: float = 20.0,
                            tail_fraction: float = 0.1) -> DetuningSequence:
    """Detuning Delta(t) making a stored dark excitation emit at the target rate.

    ``J`` is the shift of the dark state relative to the radiating one
    (J_d - J_r). Root choice: the smaller-magnitude root, ties broken by
    proximity to the previous step. A negative discriminant or a root above
    ``cap`` inside the final ``tail_fraction`` of the window switches to the
    constant ``plateau`` (same sign as the last detuning) for the remainder;
    earlier, the closest achievable detuning (the parabola vertex) or the cap
    is used instead.
    """
    if not Gamma_r > 0:
        raise InvalidInputError("Gamma_r must be positive")
    times = np.arange(0.0, target.t_end + dt / 2, dt)
    rates = target.rate(times)
    released = np.trapezoid(rates, times)
    if released > 1 + 1e-9:
        raise InfeasibleTargetError(f"target releases {released:.6f} > 1 stored excitation")

    vd, vr = 1.0 + 0j, 0.0 + 0j
    loss = 1 - Gamma_r * dt / 2
    values = np.zeros(len(times))
    prev = 0.0
    plateau_start = None
    tail_from = target.t_end * (1 - tail_fraction)
    for k in range(1, len(times)):
        t_prev = times[k - 1]
        if plateau_start is None:
            a = dt**2 * abs(vd) ** 2
            b = 2 * dt * loss * (vr * np.conj(vd)).imag
            c = -rates[k] / Gamma_r + abs(vr) ** 2 * loss**2
            disc = b * b - 4 * a * c
            if a <= 0:
                disc = -1.0
            if disc >= 0:
                sq = np.sqrt(disc)
                roots = np.array([(-b + sq) / (2 * a), (-b - sq) / (2 * a)])
                mags = np.abs(roots)
                if abs(mags[0] - mags[1]) <= 1e-9 * max(mags.max(), 1e-300):
                    delta = roots[np.argmin(np.abs(roots - prev))]
                    if prev == 0.0:
                        delta = np.abs(roots[0])
                else:
                    delta = roots[np.argmin(mags)]
            else:
                delta = None
            in_tail = t_prev >= tail_from - 1e-12
            if delta is None or abs(delta) > cap:
                if in_tail:
                    plateau_start = t_prev
                elif delta is None:
                    delta = -b / (2 * a) if a > 0 else prev
                    delta = float(np.clip(delta, -cap, cap))
                else:
                    delta = float(np.clip(delta, -cap, cap))
            if plateau_start is not None:
                delta = np.copysign(plateau, prev if prev != 0 else 1.0)
        else:
            delta = prev
        values[k - 1] = delta
        prev = delta
        vd, vr = (vd + dt * (-1j * J * vd + 1j * delta * vr),
                  vr + dt * (1j * delta * vd - Gamma_r / 2 * vr))
    values[-1] = values[-2] if len(values) > 1 else 0.0
    return DetuningSequence(times, values, plateau, plateau_start, cap)


def pair_parameters(spacing: float, dipole=None) -> tuple[float, float]:
    """(J_M - J_Gamma, Gamma_Gamma) of the infinite lattice: the inputs of the solver."""
    dipole = CIRCULAR if dipole is None else dipole
    dark = dispersion((np.pi / spacing, np.pi / spacing), spacing, dipole)
    rad = dispersion((0.0, 0.0), spacing, dipole)
    return dark.J - rad.J, rad.Gamma


@dataclass
class ShapingRun:
    target: WindowShape
    sequence: DetuningSequence
    times: np.ndarray
    achieved: np.ndarray  # dn/dt collected by the detection mode
    eta: float

    @property
    def compare_until(self) -> float:
        """End of the comparison window: the plateau start, or t_end without plateau."""
        start = self.sequence.plateau_start
        return start if start is not None else self.target.t_end

    def mismatch(self) -> float:
        """Relative L2 distance between achieved and target dn/dt before the plateau."""
        sel = self.times <= self.compare_until + 1e-12
        t = self.times[sel]
        tgt = self.target.rate(t)
        diff = np.trapezoid((self.achieved[sel] - tgt) ** 2, t)
        return float(np.sqrt(diff / np.trapezoid(tgt**2, t)))


def shaping_experiment(lattice, target: WindowShape, waist: float, Delta_store: float = 2.0,
                       dt: float = 2e-3, solver_dt: float = 1e-3, coupling=None) -> ShapingRun:
    """Release a stored photon with a checkerboard Delta(t) designed for ``target``."""
    J, Gamma_r = pair_parameters(lattice.spacing, lattice.dipole)
    seq = solve_detuning_sequence(target, Gamma_r, J, dt=solver_dt)
    stepper = coupling if coupling is not None else make_coupling(lattice)
    stored = prepare_stored_state(lattice, coupling_matrix(lattice), waist, Delta_store)
    pattern = preset_pattern("checkerboard", 1.0).with_envelope(seq)
    traj = evolve_real_space(lattice, stepper, pattern, stored, t_end=target.t_end, dt=dt,
                             stop_norm=STOP_NORM, rate_bound=seq.peak)
    rec = mode_overlap(lattice, traj, DetectionMode(waist))
    return ShapingRun(target, seq, rec.times, rec.dndt, rec.eta)
