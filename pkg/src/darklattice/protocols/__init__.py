"""Composite experiments built on the lattice, coupling, dynamics and emission layers."""
from .defects import DEFECT_SETS, DefectPoint, defect_sweep, fit_alpha
from .rabi import (RabiPair, cycle_experiment, cycle_pattern, quality_factor, quality_for_waist,
                   rabi_experiment, rabi_pair_analytic)
from .retrieval import RetrievalResult, optimal_waist, retrieval_experiment, waist_sweep
from .shaping import (DetuningSequence, ShapingRun, WindowShape, shaping_experiment, solve_detuning_sequence,
                      window_shape)
from .spectra import (sideband_experiment, sideband_spectrum, spectrum_experiment, two_color_spectrum)
from .steering import classify_steering, steering_experiment

__all__ = [
    "DEFECT_SETS", "DefectPoint", "defect_sweep", "fit_alpha",
    "RabiPair", "cycle_experiment", "cycle_pattern", "quality_factor", "quality_for_waist",
    "rabi_experiment", "rabi_pair_analytic",
    "RetrievalResult", "optimal_waist", "retrieval_experiment", "waist_sweep",
    "DetuningSequence", "ShapingRun", "WindowShape", "shaping_experiment", "solve_detuning_sequence", "window_shape",
    "sideband_experiment", "sideband_spectrum", "spectrum_experiment", "two_color_spectrum",
    "classify_steering", "steering_experiment",
]
