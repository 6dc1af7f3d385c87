"""Classify symmetric spectral densities as off-white noises.

The classification reduces to a half-order Sobolev test of the log density
transported to the unit circle. Finite sections of the past/future geometry
and a Gaussian simulator provide independent numerical cross-checks.
"""
from .cayley import (CircleDensity, ModerationReport, cayley_forward, cayley_inverse,
                     moderation_order, pushforward_density)
from .classify import Verdict, classify, verdict_cross_check
from .density import (DensitySpec, LogDensity, TailModel, eval_density, eval_log_derivative,
                      load_spec, log_density, validate)
from .errors import *  # noqa: F401,F403
from .paf import (MomentTable, SectionReport, canonical_correlations, hs_sweep, index_estimate,
                  moments, section_gram, shift_law_check, time_reversal_check)
from .quadrature import ConvergenceProbe, LadderParams, fit_growth, probe_integral
from .simul import SimConfig, empirical_cca, run_simulation, sample_paths
from .sobolev import (FunctionalResult, check_implications, circle_double_seminorm,
                      circle_fourier_seminorm, derivative_functional, doubling_functional,
                      line_sobolev_functional)

__version__ = "0.1.0"
