"""Lindstedt series for quasi-periodic invariant tori of standard-like maps.

Order-by-order computation of hull functions and drift parameters for
maximal tori and for invariant circles in ``T^2``, in the conservative and
the conformally symplectic (dissipative) setting, with diagnostics for
coefficient growth and formal-solution residuals.
"""

from .cohomology import Frequency, diophantine_profile, solve_zero_average
from .diagnostics import (bisect_scaling, check_inductive_conditions, degree_audit, gamma_sigma,
                          gevrey_fit, inductive_constants, scale_series)
from .errors import (ConfigError, DegeneracyError, DegenerateAverage, ExactResonance,
                     InsufficientData, LindstedtError, NondegeneracyFailure, NormOverflow)
from .fourier import NormParams, Potential, TrigPoly
from .lower import LowerTopology, expand_lower, find_beta0, nondegeneracy_constant
from .maximal import MaximalModel, expand
from .numerics import working_precision

__all__ = [
    "ConfigError", "DegeneracyError", "DegenerateAverage", "ExactResonance",
    "Frequency", "InsufficientData", "LindstedtError", "LowerTopology", "MaximalModel",
    "NondegeneracyFailure", "NormOverflow", "NormParams", "Potential", "TrigPoly",
    "bisect_scaling", "check_inductive_conditions", "degree_audit", "diophantine_profile",
    "expand", "expand_lower", "find_beta0", "gamma_sigma", "gevrey_fit", "inductive_constants",
    "scale_series",
    "nondegeneracy_constant", "solve_zero_average", "working_precision",
]
