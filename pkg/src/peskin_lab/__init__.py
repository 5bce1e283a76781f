"""Spectral lab for a closed elastic string driven by its own tension in 2D Stokes flow."""

__version__ = "0.1.0"

from .curve import Curve, arc_chord, difference
from .tension import TensionLaw, hookean, power_law, arctan_law, globalize
from .kernels import stokeslet, kernel_K, kernel_K0, kernel_A, cancellation_residual
from .operators import lambda_fourier, lambda_sine, lambda_tilde, half_lambda_norm, lp_project
from .besov import MuWeight, BesovParams, besov_diff, besov_lp, cl_norm, construct_mu
from .evolution import SimConfig, SimState, Trajectory, simulate, step

__all__ = [
    "Curve",
    "arc_chord",
    "difference",
    "TensionLaw",
    "hookean",
    "power_law",
    "arctan_law",
    "globalize",
    "stokeslet",
    "kernel_K",
    "kernel_K0",
    "kernel_A",
    "cancellation_residual",
    "lambda_fourier",
    "lambda_sine",
    "lambda_tilde",
    "half_lambda_norm",
    "lp_project",
    "MuWeight",
    "BesovParams",
    "besov_diff",
    "besov_lp",
    "cl_norm",
    "construct_mu",
    "SimConfig",
    "SimState",
    "Trajectory",
    "simulate",
    "step",
]
