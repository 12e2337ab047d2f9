"""Storage and on-demand retrieval of a single photon in the dark band."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics import evolve_real_space, prepare_stored_state
from ..emission import DetectionMode, PhotonRecord, mode_overlap
from ..errors import InvalidInputError
from ..greens import ConvolutionCoupling, coupling_matrix
from ..lattice import Lattice, preset_pattern

DENSE_LIMIT = 1600  # atoms; above this the FFT convolution is used for time stepping
STOP_NORM = 1e-4


def make_coupling(lattice: Lattice, dense: bool | None = None):
    """Dense coupling matrix for small arrays, FFT convolution otherwise."""
    if dense is None:
        dense = lattice.n_atoms <= DENSE_LIMIT and not lattice.defects
    if dense or lattice.defects:
        return coupling_matrix(lattice)
    return ConvolutionCoupling(lattice)


@dataclass
class RetrievalResult:
    waist: float
    record: PhotonRecord
    stored_norm: float  # excitation left after the storage interval

    @property
    def eta(self) -> float:
        return self.record.eta

    @property
    def error(self) -> float:
        return self.record.error


def retrieval_experiment(lattice: Lattice, waist: float, Delta_retrieve: float = 2.0,
                         t_storage: float = 0.0, Delta_store: float | None = None,
                         dt: float = 0.01, coupling=None, stride: int = 1,
                         stop_norm: float = STOP_NORM, two_sided: bool = True) -> RetrievalResult:
    """Store with a Gaussian drive, wait ``t_storage``, release with a checkerboard.

    The photon is written with the checkerboard at ``Delta_store`` (defaults
    to ``Delta_retrieve``), the pattern is switched off for the storage time
    and switched back on at ``Delta_retrieve`` until the remaining excitation
    drops below ``stop_norm``. The detection mode has the drive waist.
    """
    if not lattice.spacing < 1 / np.sqrt(2):
        raise InvalidInputError("retrieval needs a sub-wavelength lattice (d < lambda0 / sqrt(2))")
    if t_storage < 0:
        raise InvalidInputError("storage time must be non-negative")
    if Delta_store is None:
        Delta_store = Delta_retrieve
    dense = coupling_matrix(lattice) if coupling is None or not hasattr(coupling, "matrix") else coupling
    stepper = coupling if coupling is not None else make_coupling(lattice)
    stored = prepare_stored_state(lattice, dense, waist, Delta_store,
                                  pattern=preset_pattern("checkerboard", Delta_store))
    e = stored.e
    if t_storage > 0:
        wait = evolve_real_space(lattice, stepper, None, e, t_storage, dt, stride=max(1, int(round(t_storage / dt))))
        e = wait.final
    pattern = preset_pattern("checkerboard", Delta_retrieve)
    traj = evolve_real_space(lattice, stepper, pattern, e, t_end=dt, dt=dt, stride=stride,
                             stop_norm=stop_norm, rate_bound=abs(Delta_retrieve))
    rec = mode_overlap(lattice, traj, DetectionMode(waist), two_sided=two_sided)
    return RetrievalResult(waist, rec, float(np.vdot(e, e).real))


def waist_sweep(lattice: Lattice, waists_over_d, **kwargs) -> list[RetrievalResult]:
    coupling = kwargs.pop("coupling", None) or make_coupling(lattice)
    return [retrieval_experiment(lattice, w * lattice.spacing, coupling=coupling, **kwargs)
            for w in waists_over_d]


def optimal_waist(lattice: Lattice, bounds=None, rtol: float = 1e-2, **kwargs) -> tuple[float, RetrievalResult]:
    """Golden-section search for the waist (in units of d) minimising the error."""
    lo, hi = bounds if bounds is not None else (2.0, max(lattice.nx, lattice.ny) / 2)
    coupling = kwargs.pop("coupling", None) or make_coupling(lattice)
    cache = {}

    def err(x):
        if x not in cache:
            cache[x] = retrieval_experiment(lattice, x * lattice.spacing, coupling=coupling, **kwargs)
        return cache[x].error

    invphi = (np.sqrt(5) - 1) / 2
    a, b = float(lo), float(hi)
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    while (b - a) > rtol * (a + b) / 2:
        if err(c) < err(d):
            b, d = d, c
            c = b - invphi * (b - a)
        else:
            a, c = c, d
            d = a + invphi * (b - a)
    best = min(cache, key=lambda x: cache[x].error)
    return best, cache[best]
