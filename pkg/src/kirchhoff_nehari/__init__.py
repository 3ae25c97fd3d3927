"""Fibering analysis and Nehari-manifold solvers for critical Kirchhoff problems."""

from .exceptions import ConvergenceError, KirchhoffError, MeshMismatchError, NehariEmptyError, RootFindingError
from .fiber import (
    Constants,
    FiberClass,
    FiberInput,
    FiberReport,
    ProblemParams,
    c0_level,
    classify_fiber,
    closed_form_thresholds,
    g_h_analysis,
    hyperbola_regime,
    lambda0_of_u,
    lambda_of_u,
    sigma_lower_bound,
    sobolev_constant,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "KirchhoffError",
    "MeshMismatchError",
    "NehariEmptyError",
    "RootFindingError",
    "Constants",
    "FiberClass",
    "FiberInput",
    "FiberReport",
    "ProblemParams",
    "c0_level",
    "classify_fiber",
    "closed_form_thresholds",
    "g_h_analysis",
    "hyperbola_regime",
    "lambda0_of_u",
    "lambda_of_u",
    "sigma_lower_bound",
    "sobolev_constant",
]
