"""Periodic steady state of a harmonic chain with velocity flips.

The chain has a Langevin thermostat at site 0 and a periodic force at
site ``n``. The package computes the mean motion, the energy current, the
kinetic temperature profile and its time variance from the exact moment
equations. A Monte Carlo engine cross-checks them.
"""
from .config import DEFAULT_TOLERANCES, RunConfig, Tolerances, load_config, parse_config
from .errors import (ForcedChainError, InvariantFailure, NoConvergence, NoPeriodicConvergence, RegimeError,
                     ResonantDenominator, SingularPivotError, SingularSystemError, ValidationError)
from .first_moments import (HarmonicField, current_asymptotic, current_exact, current_routes,
                            mean_square_averages, mean_trajectory, q_weight_closed, q_weight_quadrature,
                            solve_harmonics, work_asymptotic, work_functional)
from .kernels import BACKEND
from .lyapunov_ode import periodic_covariance_ode
from .model import ChainModel, ChainParams, ForceSpec, Violation, check, force_value, validate
from .second_moments import (covariance_blocks, fluctuation_dissipation_check, macroscopic_profile_check,
                             mixing_matrix, mixing_matrix_bruteforce, solve_profile, variance_harmonics)
from .simulation import (ChainState, Channels, estimate_periodic_averages, phase_resolved_means,
                         relaxation_periods)
from .spectral import FiniteGreens, NeumannEigenbasis, greens_finite, greens_lattice, transport_coefficient

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DEFAULT_TOLERANCES", "ChainModel", "ChainParams", "ChainState", "Channels", "FiniteGreens",
    "ForceSpec", "ForcedChainError", "HarmonicField", "InvariantFailure", "NeumannEigenbasis",
    "NoConvergence", "NoPeriodicConvergence", "RegimeError", "ResonantDenominator", "RunConfig",
    "SingularPivotError", "SingularSystemError", "Tolerances", "ValidationError", "Violation", "check",
    "covariance_blocks", "current_asymptotic", "current_exact", "current_routes",
    "estimate_periodic_averages", "fluctuation_dissipation_check", "force_value", "greens_finite",
    "greens_lattice", "load_config", "macroscopic_profile_check", "mean_square_averages",
    "mean_trajectory", "mixing_matrix", "mixing_matrix_bruteforce", "parse_config",
    "periodic_covariance_ode", "phase_resolved_means", "q_weight_closed", "q_weight_quadrature",
    "relaxation_periods", "solve_harmonics", "solve_profile", "transport_coefficient", "validate",
    "variance_harmonics", "work_asymptotic", "work_functional",
]
