"""Effective nonlinear Dirac dynamics of a 1-D periodic cubic NLS near a Dirac point."""

from .core import PeriodicPotential, TorusGrid, WaveField, gn_ratio, hs_eps_norm, hs_norm, potential_eval
from .bloch import BandStructure, BlochWave, assemble_hill_matrix, band_derivative, solve_bands
from .diracpoint import DiracPointData, dirac_point, detect_dirac, gauge_fix_pair
from .nld import NLDParams, SpinorField, nld_evolve, nld_step
from .nls import NLSParams, nls_evolve, nls_step
from .multiscale import AnsatzBundle, assemble_ansatz, build_u0, build_u1, residual_rho, solvability_check
from .config import StudyConfig, load_config, parse_config
from .study import ErrorSeries, fit_rate, run_convergence_study
from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
