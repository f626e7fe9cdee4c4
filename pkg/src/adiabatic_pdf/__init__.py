"""Density estimation from a fitted single-qubit adiabatic evolution.

The empirical CDF of a 1d sample is fitted by ``<Z>`` along an adiabatic
evolution with a polynomial schedule, the evolution is compiled into an
``Rz Rx Rz`` circuit and the density is read off with parameter-shift rules.
"""
__version__ = "0.1.0"

from .schedule import ScheduleParams, eval_s, lambda_of, phase_integral, project_positive
from .evolution import EvolutionConfig, Trajectory, evolve, hamiltonian_at, initial_state
from .training import (
    AffineTransform,
    FitResult,
    OptimizerConfig,
    TrainingSet,
    empirical_cdf,
    fit,
    loss,
    rescale,
)
from .circuit import CircuitAngles, angles_at, euler_angles, execute_exact, execute_shots, propagator
from .derivative import EXACT, PdfEvaluation, Shots, cdf_at, pdf_at, pdf_original_units, psr_partial
from .analysis import DistSpec, draw_sample, kde_bandwidth_search, kde_estimate, kl_divergence, mse
