"""Gaussian dynamics, entanglement and optimal coupling control of a harmonic ring."""

from .chain import ChainConfig, ChainError, ControlSchedule, mode_frequencies, validate
from .control import OptimizationResult, OptimizerConfig, cost, gradient, optimize, sudden_switch_baseline
from .entanglement import (
    PairCovariance,
    log_negativity,
    max_log_negativity,
    optimal_angles,
    pair_covariance,
    simplified_eigenvalues,
    validity_check,
)
from .modes import ModeMoments, SqueezeDecomposition, extract_squeeze, initial_moments, propagate_schedule, propagate_segment
from .simulation import Trace, simulate
from .thermo import WorkReport, chain_energy, dissipated_work_mode, thermal_factor, total_dissipated_work

__version__ = "0.1.0"
