"""Single-excitation time evolution.

Real space follows

    de_j/dt = i Delta_j(t) e_j - i sum_i (J_ji - i Gamma_ji / 2) e_i  [+ i Omega_j g],

integrated with classical fixed-step RK4. Time-dependent detunings are
sampled at the RK4 stage times t, t + dt/2 and t + dt.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .errors import DegenerateConfigurationError, InstabilityError, InvalidInputError
from .greens import ConvolutionCoupling, CouplingMatrix, dispersion
from .lattice import CIRCULAR, DetuningPattern, Lattice, preset_pattern

log = logging.getLogger(__name__)

NORM_GROWTH_TOL = 1e-6


@dataclass
class RealSpaceState:
    e: np.ndarray
    g: complex = 1.0

    @property
    def norm(self) -> float:
        return float(np.vdot(self.e, self.e).real)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (T, N)
    dt: float
    description: dict = field(default_factory=dict)
    ground: np.ndarray | None = None

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise InvalidInputError("times and states differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise InvalidInputError("trajectory times must be strictly increasing")

    @property
    def norms(self) -> np.ndarray:
        return np.sum(np.abs(self.states) ** 2, axis=1)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class GaussianDrive:
    waist: float
    amplitude: float = 1e-3
    polarization: np.ndarray = field(default_factory=lambda: CIRCULAR.copy())
    k_offset: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.waist > 0:
            raise InvalidInputError("drive waist must be positive")

    def rabi(self, lattice: Lattice) -> np.ndarray:
        """Omega_j = Omega0 (d* . eps) exp(-r^2/rho^2) exp(i k . r)."""
        xy = lattice.positions[:, :2]
        overlap = np.vdot(lattice.dipole, np.asarray(self.polarization, dtype=complex))
        phase = np.exp(1j * xy @ np.asarray(self.k_offset, dtype=float))
        return self.amplitude * overlap * lattice.gaussian(self.waist) * phase


def _as_patterns(pattern) -> list:
    if pattern is None:
        return []
    if isinstance(pattern, DetuningPattern):
        return [pattern]
    return list(pattern)


def _detuning_function(lattice: Lattice, patterns: Sequence[DetuningPattern]) -> Callable[[float], np.ndarray]:
    spatial = [(p.envelope, p.spatial(lattice.indices)) for p in patterns]
    zero = np.zeros(lattice.n_atoms)
    if not spatial:
        return lambda t: zero
    if len(spatial) == 1:
        env, s = spatial[0]
        return lambda t: env(t) * s
    return lambda t: sum(env(t) * s for env, s in spatial)


def check_step(dt: float, rate_bound: float) -> None:
    """Enforce dt <= 0.01 and dt <= 0.1 / rate_bound."""
    if dt > 0.01 + 1e-15:
        raise InvalidInputError(f"dt = {dt} exceeds 0.01 / gamma0")
    if rate_bound > 0 and dt * rate_bound > 0.1 * (1 + 1e-12):
        raise InvalidInputError(f"dt = {dt} too large for rates up to {rate_bound:.3g} gamma0")


def _rk4(f, y, t, dt):
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve_real_space(lattice: Lattice, coupling, pattern=None, state0=None, t_end: float = 10.0,
                      dt: float = 0.01, drive: GaussianDrive | None = None, weak_drive: bool = True,
                      stride: int = 1, stop_norm: float | None = None, t_start: float = 0.0,
                      rate_bound: float | None = None, max_time: float | None = None) -> Trajectory:
    """RK4 evolution of site amplitudes.

    ``pattern`` is a DetuningPattern, a list of them (detunings add) or None.
    ``coupling`` is anything supporting ``coupling @ e``. Integration stops at
    ``t_end``; if ``stop_norm`` is given it instead continues until the
    excitation norm drops below it (bounded by ``max_time``).
    Pattern envelopes are evaluated at absolute time ``t_start + t``.
    """
    patterns = _as_patterns(pattern)
    if state0 is None:
        raise InvalidInputError("an initial state is required")
    if isinstance(state0, RealSpaceState):
        e0, g0 = np.asarray(state0.e, dtype=complex), complex(state0.g)
    else:
        e0, g0 = np.asarray(state0, dtype=complex), 1.0 + 0j
    if e0.shape != (lattice.n_atoms,):
        raise InvalidInputError(f"state has shape {e0.shape}, lattice has {lattice.n_atoms} atoms")
    if not t_end > 0 or not dt > 0:
        raise InvalidInputError("t_end and dt must be positive")
    if rate_bound is None:
        peak = max((np.max(np.abs(p.spatial(lattice.indices)), initial=0.0) for p in patterns), default=0.0)
        rate_bound = peak
    check_step(dt, rate_bound)

    detuning = _detuning_function(lattice, patterns)
    omega = drive.rabi(lattice) if drive is not None else None
    track_ground = omega is not None and not weak_drive

    if track_ground:
        def f(t, y):
            e, g = y[:-1], y[-1]
            de = 1j * detuning(t_start + t) * e - 1j * (coupling @ e) + 1j * omega * g
            dg = 1j * np.vdot(omega, e)
            return np.concatenate([de, [dg]])
        y = np.concatenate([e0, [g0]])
    elif omega is not None:
        def f(t, y):
            return 1j * detuning(t_start + t) * y - 1j * (coupling @ y) + 1j * omega
        y = e0.copy()
    else:
        def f(t, y):
            return 1j * detuning(t_start + t) * y - 1j * (coupling @ y)
        y = e0.copy()

    nsteps = int(round(t_end / dt))
    if stop_norm is not None:
        horizon = max_time if max_time is not None else max(t_end, 500.0)
        nsteps = int(round(horizon / dt))
    times, states, ground = [0.0], [y[:lattice.n_atoms].copy()], [y[-1] if track_ground else g0]
    norm_prev = float(np.vdot(e0, e0).real)
    t = 0.0
    for step in range(1, nsteps + 1):
        y = _rk4(f, y, t, dt)
        t = step * dt
        e = y[:lattice.n_atoms]
        norm = float(np.vdot(e, e).real)
        if omega is None and norm > norm_prev * (1 + NORM_GROWTH_TOL) + 1e-300:
            raise InstabilityError(f"norm grew from {norm_prev:.6g} to {norm:.6g} at t = {t:.4g}; reduce dt")
        if omega is None:
            norm_prev = norm
        done = stop_norm is not None and t >= t_end - 1e-12 and norm < stop_norm
        if step % stride == 0 or step == nsteps or done:
            times.append(t)
            states.append(e.copy())
            ground.append(y[-1] if track_ground else g0)
        if done:
            break
    else:
        if stop_norm is not None:
            log.warning("norm %.3g still above %.3g after t = %.4g", norm, stop_norm, t)
    return Trajectory(np.array(times), np.array(states), dt,
                      {"model": "real_space", "n_atoms": lattice.n_atoms, "t_start": t_start},
                      ground=np.array(ground) if track_ground else None)


@dataclass(frozen=True)
class FewLevelModel:
    """dv/dt = -i diag(J - i Gamma/2) v + i envelope(t) C v + i source."""

    levels: tuple  # ((label, J, Gamma), ...)
    couplings: np.ndarray
    envelope: Callable[[float], float] = field(default=lambda t: 1.0)
    source: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.couplings, dtype=complex)
        n = len(self.levels)
        if c.shape != (n, n):
            raise InvalidInputError(f"coupling matrix must be {n}x{n}")
        if not np.allclose(c, c.conj().T, atol=1e-12, rtol=0):
            raise InvalidInputError("coupling matrix must be Hermitian")
        if any(lv[2] < 0 for lv in self.levels):
            raise InvalidInputError("decay rates must be non-negative")
        object.__setattr__(self, "couplings", c)

    @property
    def diagonal(self) -> np.ndarray:
        return np.array([complex(J, -G / 2) for _, J, G in self.levels])

    @property
    def labels(self) -> list:
        return [lv[0] for lv in self.levels]


def evolve_few_level(model: FewLevelModel, v0, t_end: float, dt: float, stride: int = 1) -> Trajectory:
    v = np.asarray(v0, dtype=complex)
    if v.shape != (len(model.levels),):
        raise InvalidInputError("initial vector does not match the number of levels")
    diag = model.diagonal
    C = model.couplings
    env = model.envelope
    src = None if model.source is None else 1j * np.asarray(model.source, dtype=complex)
    rate = max(np.max(np.abs(diag)), np.max(np.abs(C)) * abs(env(0.0)))
    check_step(dt, rate)

    def f(t, y):
        out = -1j * diag * y + 1j * env(t) * (C @ y)
        return out if src is None else out + src

    nsteps = int(round(t_end / dt))
    times, states = [0.0], [v.copy()]
    norm_prev = float(np.vdot(v, v).real)
    for step in range(1, nsteps + 1):
        t = (step - 1) * dt
        v = _rk4(f, v, t, dt)
        if src is None:
            norm = float(np.vdot(v, v).real)
            if norm > norm_prev * (1 + NORM_GROWTH_TOL) + 1e-300:
                raise InstabilityError("few-level norm grew; reduce dt")
            norm_prev = norm
        if step % stride == 0 or step == nsteps:
            times.append(step * dt)
            states.append(v.copy())
    return Trajectory(np.array(times), np.array(states), dt,
                      {"model": "few_level", "levels": model.labels})


def checkerboard_model(J_d: float, J_r: float, Gamma_r: float, Delta: float = 1.0,
                       envelope=None, Gamma_d: float = 0.0) -> FewLevelModel:
    """Dark/radiating pair coupled by a checkerboard of strength Delta * envelope(t)."""
    c = np.array([[0, Delta], [Delta, 0]], dtype=complex)
    kw = {} if envelope is None else {"envelope": envelope}
    return FewLevelModel((("dark", J_d, Gamma_d), ("radiating", J_r, Gamma_r)), c, **kw)


def steady_dark_amplitude(Delta: float, J_r: float, Gamma_r: float, J_d: float, Omega_r: complex) -> complex:
    """Weak-drive steady state of the dark amplitude, g ~ 1."""
    denom = Delta**2 - complex(J_r, -Gamma_r / 2) * J_d
    if abs(denom) < 1e-12:
        raise DegenerateConfigurationError("steady state is singular for these parameters")
    return -Delta * Omega_r / denom


def _dark_momentum(pattern: DetuningPattern, spacing: float) -> np.ndarray:
    q = [Q for Q, a in zip(pattern.quasimomenta, pattern.amplitudes) if np.any(Q != 0) and a != 0]
    if not q:
        # nothing to mix with: the drive writes the k = 0 state itself
        return np.zeros(2)
    if len(q) != 1:
        raise InvalidInputError("drive detuning must be given for patterns with several harmonics")
    return np.asarray(q[0]) / spacing


def _solve_steady_iterative(coupling, detunings, drive_detuning, omega, rtol=1e-12):
    """(H - drive_detuning - diag(Delta)) e = omega by GMRES with matrix-free H."""
    n = len(omega)
    op = spla.LinearOperator((n, n), dtype=complex,
                             matvec=lambda x: coupling @ x - (drive_detuning + detunings) * x)
    e, info = spla.gmres(op, omega.astype(complex), rtol=rtol, restart=200, maxiter=2000)
    if info != 0:
        raise DegenerateConfigurationError(f"iterative steady-state solve did not converge (info={info})")
    return e


def prepare_stored_state(lattice: Lattice, coupling, waist: float, Delta_store: float = 2.0,
                         drive_strength: float = 1e-3, pattern: DetuningPattern | None = None,
                         drive_detuning: float | None = None) -> RealSpaceState:
    """Dark state written by a weak Gaussian drive with the detuning pattern on.

    Solves the driven steady state (g = 1) in the frame of the drive, whose
    frequency is offset from omega0 by ``drive_detuning``. By default the drive
    is resonant with the infinite-lattice dark state the pattern couples to,
    which keeps the radiating admixture of the steady state minimal. The
    result is normalised to one excitation.
    """
    if drive_strength > 1e-3 + 1e-15:
        raise InvalidInputError("weak drive requires drive_strength <= 1e-3 gamma0")
    if pattern is None:
        pattern = preset_pattern("checkerboard", Delta_store)
    if drive_detuning is None:
        k_dark = _dark_momentum(pattern, lattice.spacing)
        drive_detuning = dispersion(k_dark, lattice.spacing, lattice.dipole).J
    omega = GaussianDrive(waist, drive_strength, lattice.dipole).rabi(lattice)
    detunings = pattern.spatial(lattice.indices)
    if isinstance(coupling, ConvolutionCoupling):
        e = _solve_steady_iterative(coupling, detunings, drive_detuning, omega)
    else:
        H = coupling.matrix if isinstance(coupling, CouplingMatrix) else np.asarray(coupling)
        A = 1j * np.diag(detunings) - 1j * (H - drive_detuning * np.eye(len(H)))
        try:
            e = np.linalg.solve(A, -1j * omega)
        except np.linalg.LinAlgError as exc:
            raise DegenerateConfigurationError("driven steady state is singular") from exc
    if not np.all(np.isfinite(e)) or np.linalg.norm(e) == 0:
        raise DegenerateConfigurationError("driven steady state is singular")
    return RealSpaceState(e / np.linalg.norm(e))


def momentum_amplitudes(lattice: Lattice, e: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unitary 2D DFT of the amplitudes on the full grid.

    Returns (kx, ky, v) with k in units of 1/d folded into [-pi, pi) and
    v[a, b] = sum_j exp(-i k . n_j) e_j / sqrt(nx ny), so that sum |v|^2 = sum |e|^2.
    """
    grid = lattice.to_grid(np.asarray(e, dtype=complex))
    nx, ny = lattice.nx, lattice.ny
    v = np.fft.fft2(grid) / np.sqrt(nx * ny)
    # grid index 0 sits at n = -(n-1)//2; account for that phase
    kx = 2 * np.pi * np.fft.fftfreq(nx)
    ky = 2 * np.pi * np.fft.fftfreq(ny)
    sx, sy = (nx - 1) // 2, (ny - 1) // 2
    v = v * np.exp(1j * kx * sx)[:, None] * np.exp(1j * ky * sy)[None, :]
    return kx, ky, v


def momentum_population(lattice: Lattice, e: np.ndarray, k_center, radius: float) -> float:
    """Population within ``radius`` (units 1/d, periodic) of ``k_center`` (units 1/d)."""
    kx, ky, v = momentum_amplitudes(lattice, e)
    dkx = np.angle(np.exp(1j * (kx - k_center[0])))
    dky = np.angle(np.exp(1j * (ky - k_center[1])))
    mask = dkx[:, None] ** 2 + dky[None, :] ** 2 <= radius**2
    return float(np.sum(np.abs(v[mask]) ** 2))
