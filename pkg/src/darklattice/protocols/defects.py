"""Efficiency loss from missing atoms and the linear intensity law.

The relative drop (eta - eta_def) / eta is compared with the share of the
detection-mode intensity that falls on the removed sites; a line through the
origin gives the proportionality constant alpha.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..emission import intensity_fraction
from ..lattice import Lattice, apply_defects
from .retrieval import make_coupling, retrieval_experiment

# hole sets (units of d) used for the intensity law
DEFECT_SETS = {
    "one": [(2, 0)],
    "three": [(2, 0), (-1, -1), (6, 3)],
    "seven": [(0, 0), (2, 0), (-2, 2), (-3, 1), (5, -1), (4, 4), (8, 8)],
    "nine": [(0, 0), (2, 0), (-2, 2), (-3, 1), (5, -1), (4, 4), (8, 8), (-1, 1), (0, -3)],
}


@dataclass
class DefectPoint:
    label: str
    waist: float
    fraction: float  # intensity on the holes / intensity on the full lattice
    eta: float
    eta_def: float

    @property
    def drop(self) -> float:
        return (self.eta - self.eta_def) / self.eta


def fit_alpha(points) -> float:
    """Least-squares slope through the origin of drop vs intensity fraction."""
    x = np.array([p.fraction for p in points])
    y = np.array([p.drop for p in points])
    return float(x @ y / (x @ x))


def defect_sweep(base: Lattice, defect_sets: dict | None = None, waists=(4.0,), **kwargs) -> tuple[list, float]:
    """Retrieval with and without each hole set for each waist (units of d).

    Returns the list of points and the fitted alpha.
    """
    defect_sets = DEFECT_SETS if defect_sets is None else defect_sets
    clean = make_coupling(base)
    reference = {w: retrieval_experiment(base, w * base.spacing, coupling=clean, **kwargs).eta for w in waists}
    points = []
    for label, holes in defect_sets.items():
        lat = apply_defects(base, holes)
        coupling = make_coupling(lat)
        for w in waists:
            eta_def = retrieval_experiment(lat, w * base.spacing, coupling=coupling, **kwargs).eta
            frac = intensity_fraction(base, holes, w * base.spacing)
            points.append(DefectPoint(label, w, frac, reference[w], eta_def))
    return points, fit_alpha(points)
