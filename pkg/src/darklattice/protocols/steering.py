"""Direction control: retrieval patterns with three- or four-site periodicity along x.

A photon stored at X = (pi/d, 0) is coupled by the harmonics Q of the
retrieval pattern to k = X + Q. Those inside the light cone radiate along
sin(theta) = |k_x| / k0 in the xz plane.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dynamics import evolve_real_space, prepare_stored_state
from ..emission import angular_profile
from ..errors import InvalidInputError
from ..greens import K0, coupling_matrix
from ..lattice import DetuningPattern, Lattice, preset_pattern
from .retrieval import STOP_NORM, make_coupling

PHASE_TOL = 1e-9


def _fold(kx_over_pi: float) -> float:
    """Fold k_x d / pi into (-1, 1]."""
    v = (kx_over_pi + 1) % 2 - 1
    return 1.0 if np.isclose(v, -1.0) else v


@dataclass
class SteeringReport:
    period: int
    coupled: list = field(default_factory=list)  # k_x d / pi of each coupled state
    in_light_cone: list = field(default_factory=list)
    threshold: float = 0.0  # spacing (lambda0) above which the oblique states radiate
    sin_theta: list = field(default_factory=list)  # predicted directions (radiating states)
    flags: set = field(default_factory=set)

    @property
    def oblique_sin(self) -> float:
        return max((abs(s) for s in self.sin_theta), default=0.0)


def classify_steering(pattern: DetuningPattern, spacing: float) -> SteeringReport:
    """Coupled momenta, emission angles and symmetry class of an x-periodic pattern."""
    nxp, nyp = pattern.period
    if nyp != 1 or nxp not in (3, 4):
        raise InvalidInputError(f"steering analysis supports period 3 or 4 along x, got {pattern.period}")
    comps = pattern.components
    beta = comps.get((1, 0), 0j)
    report = SteeringReport(nxp, threshold=1 / (2 * nxp) if nxp == 3 else 0.25)
    harmonics = [q for (q, _), a in comps.items() if q != 0 and abs(a) > 0]
    # every state reachable from X by repeatedly adding harmonics is coupled
    reach, frontier = {0}, [0]
    while frontier:
        m = frontier.pop()
        for q in harmonics:
            nxt = (m + q) % nxp
            if nxt not in reach:
                reach.add(nxt)
                frontier.append(nxt)
    for m in sorted(reach - {0}):
        k = _fold(1 + 2 * m / nxp)
        report.coupled.append(k)
        kx = abs(k) * np.pi / spacing
        inside = kx < K0
        report.in_light_cone.append(bool(inside))
        if inside:
            report.sin_theta.append(float(np.sign(k) * kx / K0) if k != 0 else 0.0)
    report.sin_theta = sorted(set(report.sin_theta))

    mag = abs(beta)
    phase = np.angle(beta) if mag > 0 else 0.0
    real_beta = mag > 0 and abs(np.sin(phase)) * mag <= PHASE_TOL * max(mag, 1.0)
    if nxp == 3:
        report.flags.add("symmetric" if real_beta or mag == 0 else "asymmetric")
    else:
        delta = comps.get((2, 0), 0j).real
        if abs(delta) > PHASE_TOL:
            report.flags.add("fully-asymmetric")
        elif mag > 0 and abs(abs(np.cos(2 * phase))) <= PHASE_TOL:
            # beta = |beta| exp(+-i pi/4) (mod pi/2): the two oblique states cancel on k = 0
            report.flags.update({"perpendicular-suppressed", "symmetric"})
        elif real_beta:
            report.flags.add("symmetric")
        else:
            report.flags.add("asymmetric")
    return report


@dataclass
class SteeringRun:
    theta: np.ndarray
    profile: np.ndarray  # |E(theta)| normalised to 1 at the maximum
    omega: float
    report: SteeringReport

    def value_at(self, theta: float) -> float:
        return float(np.interp(theta, self.theta, self.profile))

    def oblique_peaks(self) -> tuple[float, float]:
        """theta of the maxima on the negative and positive side (excluding |theta| < 5 deg)."""
        neg = (self.theta < -np.radians(5))
        pos = (self.theta > np.radians(5))
        return (float(self.theta[neg][np.argmax(self.profile[neg])]),
                float(self.theta[pos][np.argmax(self.profile[pos])]))


def steering_experiment(lattice: Lattice, retrieval: DetuningPattern, waist: float,
                        Delta_store: float = 2.0, theta_grid=None, dt: float = 0.01,
                        coupling=None, omega: float | None = None) -> SteeringRun:
    """Store at X with a stripe pattern, release with ``retrieval``, record |E(theta)| in the xz plane."""
    report = classify_steering(retrieval, lattice.spacing)
    stepper = coupling if coupling is not None else make_coupling(lattice)
    stored = prepare_stored_state(lattice, coupling_matrix(lattice), waist, Delta_store,
                                  pattern=preset_pattern("stripe_x", Delta_store))
    peak = float(np.max(np.abs(retrieval.spatial(np.arange(4)[:, None] * np.array([1, 0])))))
    traj = evolve_real_space(lattice, stepper, retrieval, stored.e, t_end=dt, dt=dt,
                             stop_norm=STOP_NORM, rate_bound=peak)
    theta = np.radians(np.arange(-90.0, 90.0 + 1e-9, 0.25)) if theta_grid is None else np.asarray(theta_grid)
    prof, w = angular_profile(lattice, traj, theta, "xz", omega=omega)
    return SteeringRun(theta, prof, w, report)
